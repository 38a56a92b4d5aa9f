//! Command-line front end: simulate networks, count contexts, estimate
//! interaction graphs, evaluate error bounds and run Monte Carlo studies.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use spikegraph::bounds::{bound_report, compute_constants, DEFAULT_NU};
use spikegraph::harness::{run_experiment, runtime_study, write_report, ExperimentConfig, ExperimentKind};
use spikegraph::io;
use spikegraph::{
    admissible_set, count_contexts_capped, estimate_graph, simulate, simulate_coupled, Error, NetworkSpec,
    SimulationConfig, Threshold, ValidatedNetwork,
};

#[derive(Parser, Debug)]
#[command(name = "spikegraph", version, about = "Interaction graph estimation for stochastic spiking networks")]
struct Cli {
    /// Base seed; replicate k uses seed + k.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replicate and per-target parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory that relative output paths are written into.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a network and write its raster.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "raster.csv")]
        out: PathBuf,
    },
    /// Simulate the full process and its fixed-range approximation on shared uniforms.
    Couple {
        #[arg(long)]
        spec: PathBuf,
        /// Observed neurons, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        region: Vec<usize>,
        #[arg(long)]
        target: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "coupled")]
        prefix: String,
    },
    /// Count context occurrences for one target neuron.
    Count {
        #[arg(long)]
        raster: PathBuf,
        #[arg(long)]
        target: usize,
        /// Keep only admissible contexts for this exponent.
        #[arg(long)]
        xi: Option<f64>,
        /// Longest past considered; defaults to n - 2.
        #[arg(long)]
        max_ell: Option<usize>,
        #[arg(long, default_value = "contexts.csv")]
        out: PathBuf,
    },
    /// Estimate the interaction graph of a raster.
    Estimate {
        #[arg(long)]
        raster: PathBuf,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[arg(long, default_value = "graph.csv")]
        out: PathBuf,
    },
    /// Evaluate the error bounds for one target and sampling region.
    Bounds {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        region: Vec<usize>,
        #[arg(long)]
        target: usize,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        threshold: ThresholdArgs,
        #[arg(long, default_value_t = DEFAULT_NU)]
        nu: f64,
        #[arg(long, default_value = "bounds.json")]
        out: PathBuf,
    },
    /// Run a Monte Carlo study described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Time context counting on long-gap rasters and fit the growth exponent.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        width: usize,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 0.25)]
    xi: f64,
    /// `auto` for c * n^(-xi/2), or a fixed positive value.
    #[arg(long, default_value = "auto")]
    eps: Eps,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

impl ThresholdArgs {
    fn threshold(&self) -> Threshold<f64> {
        match self.eps {
            Eps::Auto => Threshold::Schedule { c: self.c },
            Eps::Fixed(e) => Threshold::Fixed(e),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Eps {
    Auto,
    Fixed(f64),
}

impl FromStr for Eps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Eps::Auto);
        }
        s.parse().map(Eps::Fixed).map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

/// Failures mapped onto exit codes: 1 for rejected input, 2 for I/O.
enum Failure {
    Invalid(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

struct Context {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

impl Context {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn output(&self, path: &Path) -> Result<PathBuf, Failure> {
        let path = match &self.out_dir {
            Some(dir) => dir.join(path),
            None => path.to_path_buf(),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        Ok(path)
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))
}

fn load_network(path: &Path) -> Result<ValidatedNetwork, Failure> {
    let spec: NetworkSpec = io::load_spec(path)?;
    let net = spec.validate()?;
    for w in &net.warnings {
        eprintln!("warning: {w}");
    }
    Ok(net)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    let ctx = Context { seed: cli.seed, out_dir: cli.out_dir };
    match cli.command {
        Command::Simulate { spec, n, out } => {
            let net = load_network(&spec)?;
            let raster = simulate(&SimulationConfig::new(&net, n, ctx.seed())?);
            let out = ctx.output(&out)?;
            io::save_raster(&out, &raster)?;
            println!("wrote {} steps of {} neurons to {}", raster.n(), raster.width(), out.display());
        }
        Command::Couple { spec, region, target, n, prefix } => {
            let net = load_network(&spec)?;
            let coupled = simulate_coupled(&SimulationConfig::new(&net, n, ctx.seed())?, &region, target)?;
            let full = ctx.output(Path::new(&format!("{prefix}_full.csv")))?;
            let approx = ctx.output(Path::new(&format!("{prefix}_approx.csv")))?;
            let summary = ctx.output(Path::new(&format!("{prefix}_discrepancy.csv")))?;
            io::save_raster(&full, &coupled.full)?;
            io::save_raster(&approx, &coupled.approx)?;
            let rows: Vec<DiscrepancyRow> = coupled
                .discrepancy
                .iter()
                .enumerate()
                .map(|(neuron, first)| DiscrepancyRow { neuron, first_discrepancy: *first })
                .collect();
            io::save_rows(&summary, &rows)?;
            match coupled.discrepancy.get(target).copied().flatten() {
                Some(t) => println!("target {target} first diverges at t = {t}"),
                None => println!("target {target} never diverges in {n} steps"),
            }
        }
        Command::Count { raster, target, xi, max_ell, out } => {
            let raster = io::load_raster(&raster)?;
            let table = count_contexts_capped(&raster, target, max_ell)?;
            let out = ctx.output(&out)?;
            match xi {
                Some(xi) => {
                    let keep = admissible_set(&table, xi)?;
                    io::save_table(&out, &table, Some(&keep))?;
                    println!("{} admissible of {} observed contexts", keep.len(), table.len());
                }
                None => {
                    io::save_table(&out, &table, None)?;
                    println!("{} observed contexts", table.len());
                }
            }
        }
        Command::Estimate { raster, threshold, out } => {
            let raster = io::load_raster(&raster)?;
            let graph = estimate_graph(&raster, threshold.xi, threshold.threshold())?;
            let out = ctx.output(&out)?;
            io::save_graph(&out, &graph)?;
            for (j, i) in graph.edges() {
                println!("{j} -> {i}");
            }
        }
        Command::Bounds { spec, region, target, n, threshold, nu, out } => {
            let net = load_network(&spec)?;
            let eps = threshold.threshold().resolve(n, threshold.xi)?;
            let constants = compute_constants(&net, target, &region)?;
            let report = bound_report(n, threshold.xi, eps, nu, &constants)?;
            let out = ctx.output(&out)?;
            io::save_json(&out, &report)?;
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            println!("wrote {}", out.display());
        }
        Command::Experiment { config } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(seed) = ctx.seed {
                config.seed = seed;
            }
            let net = match (&config.spec, config.kind) {
                (Some(spec), kind) if kind != ExperimentKind::Runtime => Some(load_network(spec)?),
                _ => None,
            };
            let report = run_experiment(&config, net.as_ref())?;
            let dir = ctx.out_dir.clone().or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
            ensure_dir(&dir)?;
            let (csv, json) = write_report(&report, &dir)?;
            if let Some(slope) = report.slope {
                println!("log-log slope {slope:.3}");
            }
            if !report.rows.is_empty() {
                println!("all rows dominated: {}", report.all_dominated());
            }
            println!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Bench { n_grid, width, repetitions } => {
            let (rows, slope) = runtime_study(&n_grid, width, repetitions, ctx.seed())?;
            let out = ctx.output(Path::new("runtime.csv"))?;
            io::save_rows(&out, &rows)?;
            for r in &rows {
                println!("n = {:>8}  {:.4} s  {} contexts", r.n, r.seconds, r.contexts);
            }
            println!("log-log slope {slope:.3}");
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct DiscrepancyRow {
    neuron: usize,
    first_discrepancy: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
