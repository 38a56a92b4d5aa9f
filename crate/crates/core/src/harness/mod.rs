//! Monte Carlo experiments and benchmarks.

mod stats;
mod studies;

pub use stats::{domination_tolerance, log_log_slope, wilson_interval, Z95};
pub use studies::{
    consistency_study, coupling_study, hoeffding_study, long_gap_raster, overestimation_study, runtime_study,
    true_edges, underestimation_study, FrequencyRow, RuntimeRow,
};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::counter::{check_xi, ContextKey};
use crate::error::{Error, Result};
use crate::estimator::{epsilon_schedule, Threshold};
use crate::io;
use crate::model::ValidatedNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Consistency,
    Overestimation,
    Underestimation,
    Hoeffding,
    Coupling,
    Runtime,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::Overestimation => "overestimation",
            ExperimentKind::Underestimation => "underestimation",
            ExperimentKind::Hoeffding => "hoeffding",
            ExperimentKind::Coupling => "coupling",
            ExperimentKind::Runtime => "runtime",
        }
    }
}

fn default_xi() -> f64 {
    0.25
}

fn default_c() -> f64 {
    1.0
}

fn default_width() -> usize {
    3
}

/// An experiment description, read from JSON.
///
/// `spec` is resolved relative to the config file. Which of the optional
/// fields are needed depends on `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub spec: Option<PathBuf>,
    pub kind: ExperimentKind,
    pub replicates: usize,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Fixed threshold; the schedule `c n^(-xi/2)` is used when absent.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Thresholds swept by the over- and underestimation studies.
    #[serde(default)]
    pub eps_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Observed neurons; every neuron when absent.
    #[serde(default)]
    pub region: Option<Vec<usize>>,
    #[serde(default)]
    pub target: Option<usize>,
    #[serde(default)]
    pub candidate: Option<usize>,
    /// Context bits for the Hoeffding study, oldest row first.
    #[serde(default)]
    pub context: Option<String>,
    #[serde(default)]
    pub context_ell: Option<usize>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Raster width for the runtime study.
    #[serde(default = "default_width")]
    pub width: usize,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Schema { path: path.display().to_string(), message: e.to_string() })?;
        if let (Some(spec), Some(dir)) = (&config.spec, path.parent()) {
            if spec.is_relative() {
                config.spec = Some(dir.join(spec));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::param("replicates must be at least 1"));
        }
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 3) {
            return Err(Error::param("n_grid must be non-empty with entries of at least 3"));
        }
        check_xi(self.xi)?;
        if self.kind != ExperimentKind::Runtime && self.spec.is_none() {
            return Err(Error::param(format!("a {} experiment needs a spec", self.kind.name())));
        }
        Ok(())
    }

    fn threshold(&self) -> Threshold<f64> {
        match self.eps {
            Some(e) => Threshold::Fixed(e),
            None => Threshold::Schedule { c: self.c },
        }
    }

    fn need<V: Copy>(&self, v: Option<V>, what: &str) -> Result<V> {
        v.ok_or_else(|| Error::param(format!("a {} experiment needs `{what}`", self.kind.name())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<FrequencyRow>,
    pub runtime: Vec<RuntimeRow>,
    pub slope: Option<f64>,
}

impl ExperimentReport {
    /// Every row with a bound is within three standard errors of it.
    pub fn all_dominated(&self) -> bool {
        self.rows.iter().all(|r| r.dominated != Some(false))
    }
}

/// Runs the configured study. `network` is required for every kind except
/// `runtime`.
pub fn run_experiment(config: &ExperimentConfig, network: Option<&ValidatedNetwork<f64>>) -> Result<ExperimentReport> {
    config.validate()?;
    let mut report = ExperimentReport { config: config.clone(), rows: Vec::new(), runtime: Vec::new(), slope: None };
    if config.kind == ExperimentKind::Runtime {
        let (rows, slope) = runtime_study(&config.n_grid, config.width, config.replicates, config.seed)?;
        report.runtime = rows;
        report.slope = Some(slope);
        return Ok(report);
    }
    let net = network.ok_or_else(|| Error::param("experiment needs a network"))?;
    let region: Vec<usize> = config.region.clone().unwrap_or_else(|| (0..net.neuron_count()).collect());
    let eps_grid = || -> Result<Vec<f64>> {
        if !config.eps_grid.is_empty() {
            return Ok(config.eps_grid.clone());
        }
        match config.eps {
            Some(e) => Ok(vec![e]),
            None => Ok(vec![epsilon_schedule(*config.n_grid.iter().max().unwrap(), config.xi, config.c)?]),
        }
    };
    let (r, xi, seed) = (config.replicates, config.xi, config.seed);
    report.rows = match config.kind {
        ExperimentKind::Consistency => {
            consistency_study(net, &region, &config.n_grid, r, xi, config.threshold(), seed)?
        }
        ExperimentKind::Overestimation => {
            let (i, j) = (config.need(config.target, "target")?, config.need(config.candidate, "candidate")?);
            overestimation_study(net, i, j, &region, &config.n_grid, &eps_grid()?, r, xi, seed)?
        }
        ExperimentKind::Underestimation => {
            let (i, j) = (config.need(config.target, "target")?, config.need(config.candidate, "candidate")?);
            underestimation_study(net, i, j, &region, &config.n_grid, &eps_grid()?, r, xi, seed)?
        }
        ExperimentKind::Hoeffding => {
            let i = config.need(config.target, "target")?;
            let bits =
                config.context.as_deref().ok_or_else(|| Error::param("a hoeffding experiment needs `context`"))?;
            let ell = config.context_ell.unwrap_or(1);
            let key = ContextKey::parse(ell, region.len() - 1, bits)?;
            if config.lambdas.is_empty() {
                return Err(Error::param("a hoeffding experiment needs `lambdas`"));
            }
            hoeffding_study(net, i, &region, &key, &config.n_grid, &config.lambdas, r, seed)?
        }
        ExperimentKind::Coupling => {
            let i = config.need(config.target, "target")?;
            coupling_study(net, i, &region, &config.n_grid, r, seed)?
        }
        ExperimentKind::Runtime => unreachable!(),
    };
    Ok(report)
}

/// Writes `<kind>.csv` (one line per row) and `<kind>.json` (the full report)
/// into `dir`; returns the two paths.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let name = report.config.kind.name();
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.json"));
    if report.config.kind == ExperimentKind::Runtime {
        io::save_rows(&csv_path, &report.runtime)?;
    } else {
        io::save_rows(&csv_path, &report.rows)?;
    }
    io::save_json(&json_path, report)?;
    Ok((csv_path, json_path))
}
