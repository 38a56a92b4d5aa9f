use serde::Serialize;

use super::constants::ModelConstants;
use super::coupling::coupling_bound;
use super::{hoeffding_bound, overestimation_bound, underestimation_bound};
use crate::error::Result;
use crate::Scalar;

/// A bound as computed and clipped to a probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundValue<T> {
    pub raw: T,
    pub clamped: T,
    /// `raw >= 1`: the bound says nothing.
    pub vacuous: bool,
}

impl<T: Scalar> BoundValue<T> {
    pub fn new(raw: T) -> Self {
        BoundValue { raw, clamped: raw.max(T::zero()).min(T::one()), vacuous: raw >= T::one() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct UnderestimationReport<T> {
    pub term1: BoundValue<T>,
    pub term2: BoundValue<T>,
    pub term2_valid: bool,
    /// Both terms plus the coupling correction.
    pub total: BoundValue<T>,
}

/// All bounds for one target, region and parameter set.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundReport<T> {
    pub n: usize,
    pub xi: f64,
    pub eps: T,
    pub nu: f64,
    pub constants: ModelConstants<T>,
    /// Overestimation tail alone, as if the region covered `V_i`.
    pub overestimation_tail: BoundValue<T>,
    /// Tail plus coupling correction; `None` if the correction is unavailable.
    pub overestimation: Option<BoundValue<T>>,
    pub underestimation: Option<UnderestimationReport<T>>,
    /// Count-martingale tail at `t = n`, `ell = 1`, deviation `eps n^(1/2 + xi)`.
    pub hoeffding: BoundValue<T>,
    pub coupling: Option<BoundValue<T>>,
    pub notes: Vec<String>,
}

/// Error bounds for a partially observed neighborhood: the full-observation
/// tails with the restricted separation constant, plus the discrepancy bound
/// of the fixed-range approximation.
pub fn bound_report<T: Scalar>(
    n: usize,
    xi: f64,
    eps: T,
    nu: f64,
    constants: &ModelConstants<T>,
) -> Result<BoundReport<T>> {
    let mut notes = Vec::new();
    let tail = overestimation_bound(n, xi, eps)?;

    let coupling = match &constants.coupling {
        _ if constants.sigma == T::zero() => Some(T::zero()),
        Some(c) => match coupling_bound(c, n) {
            Ok(b) => Some(b),
            Err(e) => {
                notes.push(format!("coupling bound unavailable: {e}"));
                None
            }
        },
        None => {
            let why = constants.coupling_issue.as_deref().unwrap_or("unknown reason");
            notes.push(format!("coupling bound unavailable: {why}"));
            None
        }
    };

    let underestimation = match constants.restricted.m {
        None => {
            notes.push(
                "no presynaptic neuron of the target lies in the region; underestimation bound unavailable".into(),
            );
            None
        }
        Some(m) if !(eps < m) => {
            notes.push(format!(
                "eps = {eps} is not below the separation constant {m}; underestimation bound unavailable"
            ));
            None
        }
        Some(m) => {
            let u = underestimation_bound(n, xi, eps, m, constants.region.len(), constants.p_min, nu)?;
            if !u.valid {
                notes.push("horizon too short for the explicit count tail; its term is set to 1".into());
            }
            coupling.map(|c| UnderestimationReport {
                term1: BoundValue::new(u.term1),
                term2: BoundValue::new(u.term2),
                term2_valid: u.valid,
                total: BoundValue::new(u.total() + c),
            })
        }
    };
    if constants.restricted.touches_clip {
        notes.push("separation interval reaches a clip point of the rate function".into());
    }

    let lambda = eps * T::lit((n as f64).powf(0.5 + xi));
    let hoeffding = hoeffding_bound(n, 1, lambda)?;

    Ok(BoundReport {
        n,
        xi,
        eps,
        nu,
        constants: constants.clone(),
        overestimation_tail: BoundValue::new(tail),
        overestimation: coupling.map(|c| BoundValue::new(tail + c)),
        underestimation,
        hoeffding: BoundValue::new(hoeffding),
        coupling: coupling.map(BoundValue::new),
        notes,
    })
}
