use serde::Serialize;

use super::coupling::{envelope_discounted_mass, solve_alpha0, CouplingConstants};
use crate::error::{Error, Result};
use crate::model::ValidatedNetwork;
use crate::Scalar;

/// Separation constant over a set of presynaptic neurons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Separation<T> {
    /// Range `[sum of negative, sum of positive]` of `W g(1)` over the set.
    pub range: (T, T),
    /// `inf phi' over range * min |W| g(1)`; `None` for an empty set.
    pub m: Option<T>,
    /// The infimum of `phi'` was taken over an interval reaching a clip point.
    pub touches_clip: bool,
}

/// Constants that enter the error bounds for one target and region.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelConstants<T> {
    pub target: usize,
    pub region: Vec<usize>,
    /// Over the full presynaptic set `V_i`.
    pub full: Separation<T>,
    /// Over `V_i ∩ F`.
    pub restricted: Separation<T>,
    /// `sum_{j not in V_i ∩ F} |W[j][i]|`.
    pub sigma: T,
    pub gamma: T,
    pub r: T,
    pub p_star: T,
    pub p_min: T,
    /// `p_min^(|F| + 1)`.
    pub q_star: T,
    /// Per-neuron kernel mass; `None` where it diverges.
    pub rho: Vec<Option<T>>,
    /// Present when every kernel mass is finite and the network is not too
    /// strongly coupled.
    pub coupling: Option<CouplingConstants<T>>,
    pub coupling_issue: Option<String>,
}

fn separation<T: Scalar>(net: &ValidatedNetwork<T>, target: usize, sources: &[usize]) -> Separation<T> {
    let mut lo = T::zero();
    let mut hi = T::zero();
    let mut smallest: Option<T> = None;
    for &j in sources {
        let w = net.weight(j, target) * net.pulse(j).eval(1);
        if w < T::zero() {
            lo = lo + w;
        } else {
            hi = hi + w;
        }
        smallest = Some(smallest.map_or(w.abs(), |s: T| s.min(w.abs())));
    }
    let inf = net.rate(target).derivative_inf(lo, hi);
    Separation { range: (lo, hi), m: smallest.map(|s| inf.value * s), touches_clip: inf.touches_clip }
}

/// Model constants for `target` observed through `region`.
pub fn compute_constants<T: Scalar>(
    net: &ValidatedNetwork<T>,
    target: usize,
    region: &[usize],
) -> Result<ModelConstants<T>> {
    let size = net.neuron_count();
    if let Some(&bad) = region.iter().chain(std::iter::once(&target)).find(|&&k| k >= size) {
        return Err(Error::UnknownNeuron(bad));
    }
    if !region.contains(&target) {
        return Err(Error::TargetNotInRegion { target });
    }
    let presyn = net.true_neighborhood(target);
    let observed: Vec<usize> = presyn.iter().copied().filter(|j| region.contains(j)).collect();
    let sigma = presyn
        .iter()
        .filter(|j| !region.contains(j))
        .map(|&j| net.weight(j, target).abs())
        .fold(T::zero(), |a, b| a + b);

    let rho: Vec<Option<T>> = net.masses.iter().map(|m| m.map(|m| m.value)).collect();
    let (coupling, coupling_issue) = match coupling_constants(net, target, region, sigma) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut distinct = region.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(ModelConstants {
        target,
        region: region.to_vec(),
        full: separation(net, target, &presyn),
        restricted: separation(net, target, &observed),
        sigma,
        gamma: net.gamma,
        r: net.r,
        p_star: net.p_star,
        p_min: net.p_min,
        q_star: net.p_min.powi(distinct.len() as i32 + 1),
        rho,
        coupling,
        coupling_issue,
    })
}

fn coupling_constants<T: Scalar>(
    net: &ValidatedNetwork<T>,
    target: usize,
    region: &[usize],
    sigma: T,
) -> Result<CouplingConstants<T>> {
    let rho = net.max_mass().ok_or_else(|| {
        Error::Precondition("a kernel with infinite mass makes the coupling bound unavailable".into())
    })?;
    let a = solve_alpha0(net, target, region)?;
    let envelope_mass = envelope_discounted_mass(net.pulses(), a.alpha0)
        .ok_or_else(|| Error::Precondition("kernel envelope has infinite discounted mass".into()))?;
    Ok(CouplingConstants {
        gamma: net.gamma,
        rho,
        chi: a.chi,
        alpha0: a.alpha0,
        norm_at_alpha0: a.norm,
        envelope_mass,
        sigma,
    })
}
