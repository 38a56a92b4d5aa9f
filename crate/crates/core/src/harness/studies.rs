//! Monte Carlo studies pairing empirical frequencies with the matching bound.
//!
//! Replicate `k` of a study with base seed `s` simulates with seed `s + k`.
//! Replicates run in parallel and are reduced in index order, so the output
//! does not depend on the thread count.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{domination_tolerance, log_log_slope, wilson_interval, Z95};
use crate::bounds::{
    compute_constants, coupling_bound, hoeffding_bound, overestimation_bound, underestimation_bound, DEFAULT_NU,
};
use crate::counter::{count_contexts, count_contexts_capped, max_admissible_ell, true_transition_prob, ContextKey};
use crate::error::{Error, Result};
use crate::estimator::{estimate_graph, sensitivity_profile, Threshold};
use crate::model::{SpikeRaster, ValidatedNetwork};
use crate::simulator::{simulate, simulate_coupled, SimulationConfig};

/// Empirical frequency of an event with its interval and, where one
/// applies, the theoretical bound on its probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub study: String,
    pub n: usize,
    /// Name of the swept parameter (`eps`, `lambda`, ...) or empty.
    pub parameter: String,
    pub value: f64,
    pub events: usize,
    pub replicates: usize,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub bound_raw: Option<f64>,
    pub bound_clamped: Option<f64>,
    /// Frequency within three standard errors of the clamped bound.
    pub dominated: Option<bool>,
}

impl FrequencyRow {
    fn new(
        study: &str,
        n: usize,
        parameter: &str,
        value: f64,
        events: usize,
        replicates: usize,
        bound: Option<f64>,
    ) -> Self {
        let frequency = events as f64 / replicates as f64;
        let (wilson_low, wilson_high) = wilson_interval(events, replicates, Z95);
        let bound_clamped = bound.map(|b| b.clamp(0.0, 1.0));
        FrequencyRow {
            study: study.to_string(),
            n,
            parameter: parameter.to_string(),
            value,
            events,
            replicates,
            frequency,
            wilson_low,
            wilson_high,
            bound_raw: bound,
            bound_clamped,
            dominated: bound.map(|b| frequency <= domination_tolerance(b, replicates)),
        }
    }
}

fn replicate_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(k as u64)
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates == 0 {
        return Err(Error::param("replicates must be at least 1"));
    }
    Ok(())
}

/// Simulates replicate `k` and keeps the columns of `region`.
fn observe(net: &ValidatedNetwork<f64>, n: usize, seed: u64, k: usize, region: &[usize]) -> Result<SpikeRaster> {
    let cfg = SimulationConfig::new(net, n, replicate_seed(seed, k))?;
    let full = simulate(&cfg);
    if region.len() == net.neuron_count() && region.iter().enumerate().all(|(a, &b)| a == b) {
        Ok(full)
    } else {
        full.restrict(region)
    }
}

fn check_region(net: &ValidatedNetwork<f64>, region: &[usize]) -> Result<()> {
    if let Some(&bad) = region.iter().find(|&&k| k >= net.neuron_count()) {
        return Err(Error::UnknownNeuron(bad));
    }
    Ok(())
}

/// Edges `j -> i` of the network with both ends in `region`.
pub fn true_edges(net: &ValidatedNetwork<f64>, region: &[usize]) -> Vec<(usize, usize)> {
    let mut edges: Vec<_> = region
        .iter()
        .flat_map(|&i| net.true_neighborhood(i).into_iter().filter(|j| region.contains(j)).map(move |j| (j, i)))
        .collect();
    edges.sort_unstable();
    edges
}

/// Fraction of replicates whose estimated graph on `region` equals the true
/// graph restricted to it.
pub fn consistency_study(
    net: &ValidatedNetwork<f64>,
    region: &[usize],
    n_grid: &[usize],
    replicates: usize,
    xi: f64,
    threshold: Threshold<f64>,
    seed: u64,
) -> Result<Vec<FrequencyRow>> {
    check_replicates(replicates)?;
    check_region(net, region)?;
    let truth = true_edges(net, region);
    n_grid
        .iter()
        .map(|&n| {
            let hits = (0..replicates)
                .into_par_iter()
                .map(|k| {
                    let raster = observe(net, n, seed, k, region)?;
                    Ok(estimate_graph(&raster, xi, threshold)?.edges() == truth)
                })
                .collect::<Result<Vec<bool>>>()?;
            let eps = threshold.resolve(n, xi)?;
            Ok(FrequencyRow::new("consistency", n, "eps", eps, hits.iter().filter(|&&h| h).count(), replicates, None))
        })
        .collect()
}

/// Sensitivity of `target` to `candidate` in each replicate at horizon `n`.
#[allow(clippy::too_many_arguments)]
fn sensitivities(
    net: &ValidatedNetwork<f64>,
    target: usize,
    candidate: usize,
    region: &[usize],
    n: usize,
    replicates: usize,
    xi: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let cap = max_admissible_ell(n, xi);
    (0..replicates)
        .into_par_iter()
        .map(|k| {
            let raster = observe(net, n, seed, k, region)?;
            let table = count_contexts_capped(&raster, target, Some(cap))?;
            let profile = sensitivity_profile::<f64>(&table, xi)?;
            profile.delta(candidate).ok_or(Error::InvalidCandidate { target, candidate })
        })
        .collect()
}

/// Coupling correction for the region, or `None` if unavailable.
fn coupling_term(net: &ValidatedNetwork<f64>, target: usize, region: &[usize], n: usize) -> Result<Option<f64>> {
    let c = compute_constants(net, target, region)?;
    if c.sigma == 0.0 {
        return Ok(Some(0.0));
    }
    Ok(c.coupling.and_then(|k| coupling_bound(&k, n).ok()))
}

/// Frequency with which a non-neighbor `candidate` is selected for `target`.
#[allow(clippy::too_many_arguments)]
pub fn overestimation_study(
    net: &ValidatedNetwork<f64>,
    target: usize,
    candidate: usize,
    region: &[usize],
    n_grid: &[usize],
    eps_grid: &[f64],
    replicates: usize,
    xi: f64,
    seed: u64,
) -> Result<Vec<FrequencyRow>> {
    check_replicates(replicates)?;
    check_region(net, region)?;
    if net.weight(candidate, target) != 0.0 {
        return Err(Error::param(format!("{candidate} is a presynaptic neuron of {target}")));
    }
    let mut rows = Vec::new();
    for &n in n_grid {
        let deltas = sensitivities(net, target, candidate, region, n, replicates, xi, seed)?;
        let correction = coupling_term(net, target, region, n)?;
        for &eps in eps_grid {
            let hits = deltas.iter().filter(|&&d| d > eps).count();
            let bound = match correction {
                Some(c) => Some(overestimation_bound(n, xi, eps)? + c),
                None => None,
            };
            rows.push(FrequencyRow::new("overestimation", n, "eps", eps, hits, replicates, bound));
        }
    }
    Ok(rows)
}

/// Frequency with which a true neighbor `candidate` is missed.
#[allow(clippy::too_many_arguments)]
pub fn underestimation_study(
    net: &ValidatedNetwork<f64>,
    target: usize,
    candidate: usize,
    region: &[usize],
    n_grid: &[usize],
    eps_grid: &[f64],
    replicates: usize,
    xi: f64,
    seed: u64,
) -> Result<Vec<FrequencyRow>> {
    check_replicates(replicates)?;
    check_region(net, region)?;
    if net.weight(candidate, target) == 0.0 || !region.contains(&candidate) {
        return Err(Error::param(format!("{candidate} is not an observed presynaptic neuron of {target}")));
    }
    let constants = compute_constants(net, target, region)?;
    let m = constants.restricted.m.ok_or_else(|| Error::Precondition("empty observed neighborhood".into()))?;
    let mut rows = Vec::new();
    for &n in n_grid {
        let deltas = sensitivities(net, target, candidate, region, n, replicates, xi, seed)?;
        let correction = coupling_term(net, target, region, n)?;
        for &eps in eps_grid {
            let misses = deltas.iter().filter(|&&d| !(d > eps)).count();
            let bound = match (eps < m, correction) {
                (true, Some(c)) => {
                    Some(underestimation_bound(n, xi, eps, m, region.len(), constants.p_min, DEFAULT_NU)?.total() + c)
                }
                _ => None,
            };
            rows.push(FrequencyRow::new("underestimation", n, "eps", eps, misses, replicates, bound));
        }
    }
    Ok(rows)
}

/// Frequency of `|N(w, 1) - p(1 | w) N(w)| > lambda` for a fixed context at
/// time `t`, with `p(1 | w)` computed from the network.
#[allow(clippy::too_many_arguments)]
pub fn hoeffding_study(
    net: &ValidatedNetwork<f64>,
    target: usize,
    region: &[usize],
    context: &ContextKey,
    t_grid: &[usize],
    lambdas: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<FrequencyRow>> {
    check_replicates(replicates)?;
    check_region(net, region)?;
    let p = true_transition_prob(net.spec(), target, region, context)?;
    let mut rows = Vec::new();
    for &t in t_grid {
        let deviations = (0..replicates)
            .into_par_iter()
            .map(|k| {
                let raster = observe(net, t, seed, k, region)?;
                let c = count_contexts(&raster, target)?.get(context);
                Ok((c.n1 as f64 - p * c.total() as f64).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        for &lambda in lambdas {
            let events = deviations.iter().filter(|&&d| d > lambda).count();
            let bound = hoeffding_bound(t, context.ell(), lambda)?;
            rows.push(FrequencyRow::new("hoeffding", t, "lambda", lambda, events, replicates, Some(bound)));
        }
    }
    Ok(rows)
}

/// Frequency with which the target differs between the process and its
/// fixed-range approximation at some time up to `n`.
pub fn coupling_study(
    net: &ValidatedNetwork<f64>,
    target: usize,
    region: &[usize],
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<FrequencyRow>> {
    check_replicates(replicates)?;
    let mut rows = Vec::new();
    for &n in n_grid {
        let diverged = (0..replicates)
            .into_par_iter()
            .map(|k| {
                let cfg = SimulationConfig::new(net, n, replicate_seed(seed, k))?;
                Ok(simulate_coupled(&cfg, region, target)?.discrepancy[target].is_some())
            })
            .collect::<Result<Vec<bool>>>()?;
        let bound = coupling_term(net, target, region, n)?;
        let events = diverged.iter().filter(|&&d| d).count();
        rows.push(FrequencyRow::new("coupling", n, "", 0.0, events, replicates, bound));
    }
    Ok(rows)
}

/// Raster on `width` neurons where neuron 0 spikes only at time 1 and every
/// other cell is a fair coin: every context of the target has the longest
/// possible length.
pub fn long_gap_raster(n: usize, width: usize, seed: u64) -> SpikeRaster {
    assert!(width >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<u8>> = (1..=n)
        .map(|t| {
            let mut row: Vec<u8> = (0..width).map(|_| rng.random_bool(0.5) as u8).collect();
            row[0] = u8::from(t == 1);
            row
        })
        .collect();
    SpikeRaster::from_rows((0..width).collect(), &rows).expect("well-formed raster")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuntimeRow {
    pub n: usize,
    /// Fastest of the timed repetitions.
    pub seconds: f64,
    pub contexts: usize,
}

/// Wall-clock of uncapped context counting on long-gap rasters, with the
/// fitted log-log slope over the grid.
pub fn runtime_study(n_grid: &[usize], width: usize, repetitions: usize, seed: u64) -> Result<(Vec<RuntimeRow>, f64)> {
    check_replicates(repetitions)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let raster = long_gap_raster(n, width, seed);
        let mut best = f64::INFINITY;
        let mut contexts = 0;
        for _ in 0..repetitions {
            let start = Instant::now();
            let table = count_contexts(&raster, 0)?;
            best = best.min(start.elapsed().as_secs_f64());
            contexts = table.len();
        }
        rows.push(RuntimeRow { n, seconds: best, contexts });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.seconds)).collect();
    let slope = log_log_slope(&points).ok_or_else(|| Error::param("runtime fit needs at least two grid points"))?;
    Ok((rows, slope))
}
