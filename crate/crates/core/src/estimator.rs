//! Sensitivity statistic, threshold selection and graph assembly.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::counter::{
    admissible_set, check_xi, count_contexts_capped, empirical_prob, max_admissible_ell, ContextKey, ContextTable,
};
use crate::error::{Error, Result};
use crate::model::SpikeRaster;
use crate::Scalar;

/// Sensitivity of the target to one candidate source.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSensitivity<T> {
    pub source: usize,
    /// Largest change of the empirical spiking probability between two
    /// admissible contexts of equal length that differ only on `source`.
    pub delta: T,
    /// Lexicographically smallest pair achieving `delta`, when `delta > 0`.
    pub witness: Option<(ContextKey, ContextKey)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityProfile<T> {
    pub target: usize,
    pub region: Vec<usize>,
    pub n: usize,
    pub xi: f64,
    pub candidates: Vec<CandidateSensitivity<T>>,
}

impl<T: Scalar> SensitivityProfile<T> {
    pub fn delta(&self, source: usize) -> Option<T> {
        self.candidates.iter().find(|c| c.source == source).map(|c| c.delta)
    }
}

/// Sensitivity of the table's target to candidate `j` over the admissible set.
///
/// Admissible keys are grouped by length and by their bits off column `j`;
/// only pairs inside a group are compared. No eligible pair gives zero.
pub fn sensitivity<T: Scalar>(
    table: &ContextTable,
    admissible: &[ContextKey],
    j: usize,
) -> Result<CandidateSensitivity<T>> {
    let col = table.column_of(j).ok_or(Error::InvalidCandidate { target: table.target(), candidate: j })?;

    let mut groups: HashMap<ContextKey, Vec<(&ContextKey, T)>> = HashMap::new();
    for key in admissible {
        let p = empirical_prob::<T>(table, key)?;
        groups.entry(key.without_column(col)).or_default().push((key, p));
    }

    let mut delta = T::zero();
    let mut witness: Option<(&ContextKey, &ContextKey)> = None;
    for members in groups.values_mut() {
        members.sort_by(|a, b| a.0.cmp(b.0));
        for (a, &(wa, pa)) in members.iter().enumerate() {
            for &(wb, pb) in &members[a + 1..] {
                let diff = (pa - pb).abs();
                if diff <= T::zero() {
                    continue;
                }
                let better = match witness {
                    None => true,
                    Some(best) => diff > delta || (diff == delta && (wa, wb) < best),
                };
                if better {
                    delta = diff;
                    witness = Some((wa, wb));
                }
            }
        }
    }
    Ok(CandidateSensitivity { source: j, delta, witness: witness.map(|(a, b)| (a.clone(), b.clone())) })
}

/// Sensitivities of the target to every other neuron of the region.
pub fn sensitivity_profile<T: Scalar>(table: &ContextTable, xi: f64) -> Result<SensitivityProfile<T>> {
    let admissible = admissible_set(table, xi)?;
    let candidates = table.others().map(|j| sensitivity(table, &admissible, j)).collect::<Result<Vec<_>>>()?;
    Ok(SensitivityProfile { target: table.target(), region: table.region().to_vec(), n: table.n(), xi, candidates })
}

/// Candidates whose sensitivity strictly exceeds `eps`.
pub fn select_neighborhood<T: Scalar>(profile: &SensitivityProfile<T>, eps: T) -> Result<Vec<usize>> {
    if !(eps > T::zero()) {
        return Err(Error::param(format!("threshold eps = {eps} must be positive")));
    }
    Ok(profile.candidates.iter().filter(|c| c.delta > eps).map(|c| c.source).collect())
}

/// `c * n^(-xi / 2)`.
pub fn epsilon_schedule<T: Scalar>(n: usize, xi: f64, c: T) -> Result<T> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    check_xi(xi)?;
    if c < T::zero() || !c.is_finite() {
        return Err(Error::param(format!("schedule constant c = {c} must be non-negative")));
    }
    Ok(c * T::lit((n as f64).powf(-xi / 2.0)))
}

/// Selection threshold: a fixed value or the decaying schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold<T> {
    Fixed(T),
    Schedule { c: T },
}

impl<T: Scalar> Threshold<T> {
    pub fn resolve(&self, n: usize, xi: f64) -> Result<T> {
        match *self {
            Threshold::Fixed(eps) => Ok(eps),
            Threshold::Schedule { c } => epsilon_schedule(n, xi, c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GraphRow<T> {
    pub source: usize,
    pub target: usize,
    pub delta: T,
    pub epsilon: T,
    pub selected: bool,
}

/// Estimated directed interaction graph on the sampled region.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedGraph<T> {
    pub region: Vec<usize>,
    pub xi: f64,
    /// One row per ordered pair of distinct region neurons, grouped by target.
    pub rows: Vec<GraphRow<T>>,
}

impl<T: Scalar> EstimatedGraph<T> {
    /// Selected `(source, target)` edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.rows.iter().filter(|r| r.selected).map(|r| (r.source, r.target)).collect();
        e.sort_unstable();
        e
    }
}

/// Runs counting, admissibility, sensitivity and selection for every neuron
/// of the raster. Deterministic given the raster.
pub fn estimate_graph<T: Scalar>(raster: &SpikeRaster, xi: f64, threshold: Threshold<T>) -> Result<EstimatedGraph<T>> {
    check_xi(xi)?;
    let n = raster.n();
    let eps = threshold.resolve(n, xi)?;
    if !(eps > T::zero()) {
        return Err(Error::param(format!("threshold eps = {eps} must be positive")));
    }
    let cap = max_admissible_ell(n, xi);
    let per_target = raster
        .neurons()
        .par_iter()
        .map(|&i| {
            let table = count_contexts_capped(raster, i, Some(cap))?;
            let profile = sensitivity_profile::<T>(&table, xi)?;
            Ok(profile
                .candidates
                .into_iter()
                .map(|c| GraphRow {
                    source: c.source,
                    target: i,
                    delta: c.delta,
                    epsilon: eps,
                    selected: c.delta > eps,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimatedGraph { region: raster.neurons().to_vec(), xi, rows: per_target.into_iter().flatten().collect() })
}
