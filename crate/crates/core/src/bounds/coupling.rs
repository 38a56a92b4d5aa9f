//! Contraction coefficient, discounted interaction operator and the
//! discrepancy bound for the fixed-range approximation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PulseKernel, ValidatedNetwork};
use crate::Scalar;

/// Upper end of the bracket searched for the exponential rate.
pub const ALPHA_SEARCH_MAX: f64 = 64.0;
/// Required margin below one for the operator norm at the returned rate.
pub const NORM_MARGIN: f64 = 1e-6;

/// One row of the interaction operator: absolute weights with the kernel of
/// their source neuron.
pub type OperatorRow<T> = Vec<(T, PulseKernel<T>)>;

/// Discounted interaction operator on a finite network.
///
/// Row `j` at rate `alpha` has absolute sum
/// `(1 - p*) e^-alpha + gamma * sum_k |W[k][j]| G_k(alpha)` with
/// `G_k(alpha) = sum_t e^(-alpha t) g_k(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingOperator<T> {
    gamma: T,
    p_star: T,
    rows: Vec<OperatorRow<T>>,
    chi: T,
}

impl<T: Scalar> CouplingOperator<T> {
    /// Operator from explicit rows. The contraction coefficient is the
    /// undiscounted row maximum, so it uses the same rows.
    pub fn new(gamma: T, p_star: T, rows: Vec<OperatorRow<T>>) -> Result<Self> {
        if !(gamma >= T::zero()) || !(p_star > T::zero() && p_star <= T::lit(0.5)) {
            return Err(Error::param("gamma must be >= 0 and p_star in (0, 1/2]"));
        }
        let chi = Self::contraction(gamma, p_star, &rows)?;
        Ok(CouplingOperator { gamma, p_star, rows, chi })
    }

    /// Operator of the coupled pair `(X, X^[F])` for `target`: the target row
    /// only keeps inputs from `V_target ∩ region`. The contraction
    /// coefficient uses every input of every neuron.
    pub fn from_network(net: &ValidatedNetwork<T>, target: usize, region: &[usize]) -> Result<Self> {
        let size = net.neuron_count();
        if target >= size {
            return Err(Error::UnknownNeuron(target));
        }
        let full_rows: Vec<OperatorRow<T>> =
            (0..size).map(|j| net.inputs(j).into_iter().map(|(k, w)| (w.abs(), *net.pulse(k))).collect()).collect();
        let chi = Self::contraction(net.gamma, net.p_star, &full_rows)?;
        let mut rows = full_rows;
        rows[target] = net
            .inputs(target)
            .into_iter()
            .filter(|(k, _)| region.contains(k))
            .map(|(k, w)| (w.abs(), *net.pulse(k)))
            .collect();
        Ok(CouplingOperator { gamma: net.gamma, p_star: net.p_star, rows, chi })
    }

    fn contraction(gamma: T, p_star: T, rows: &[OperatorRow<T>]) -> Result<T> {
        let mut worst = T::zero();
        for row in rows {
            let mut s = T::zero();
            for (w, g) in row {
                let mass = g.mass().ok_or_else(|| {
                    Error::Precondition("a kernel with infinite mass makes the coupling bound unavailable".into())
                })?;
                s = s + *w * mass.value;
            }
            worst = worst.max(s);
        }
        Ok((T::one() - p_star) + gamma * worst)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn p_star(&self) -> T {
        self.p_star
    }

    /// `(1 - p*) + gamma * max_j sum_k rho_k |W[k][j]|`.
    pub fn chi(&self) -> T {
        self.chi
    }

    /// Maximum absolute row sum of the discounted operator. `None` if a
    /// row diverges at this rate.
    pub fn norm(&self, alpha: T) -> Option<T> {
        let decay = (-alpha).exp();
        let mut worst = T::zero();
        for row in &self.rows {
            let mut s = T::zero();
            for (w, g) in row {
                if *w == T::zero() {
                    continue;
                }
                s = s + *w * g.discounted_mass(alpha)?;
            }
            worst = worst.max(s);
        }
        Some((T::one() - self.p_star) * decay + self.gamma * worst)
    }
}

/// Rate `alpha_0` and contraction coefficient `chi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Alpha0<T> {
    pub alpha0: T,
    pub chi: T,
    /// Operator norm at `alpha0`; equals `chi` restricted to the approximated
    /// rows when `alpha0 = 0`.
    pub norm: T,
}

/// `alpha_0 = 0` when `chi < 1`; otherwise the smallest rate in
/// `[0, 64]` whose operator norm is at most `1 - 1e-6`, by bisection.
pub fn solve_alpha0_for<T: Scalar>(op: &CouplingOperator<T>) -> Result<Alpha0<T>> {
    let chi = op.chi();
    if chi < T::one() {
        let norm = op.norm(T::zero()).unwrap_or(chi);
        return Ok(Alpha0 { alpha0: T::zero(), chi, norm });
    }
    let target = T::one() - T::lit(NORM_MARGIN);
    let ok = |a: T| op.norm(a).is_some_and(|v| v <= target);
    let mut hi = T::lit(ALPHA_SEARCH_MAX);
    if !ok(hi) {
        return Err(Error::StronglyCoupled { max_alpha: ALPHA_SEARCH_MAX });
    }
    let mut lo = T::zero();
    if ok(lo) {
        hi = lo;
    } else {
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let norm = op.norm(hi).expect("norm finite at accepted rate");
    Ok(Alpha0 { alpha0: hi, chi, norm })
}

/// `alpha_0` and `chi` for the coupled pair built around `target` and `region`.
pub fn solve_alpha0<T: Scalar>(net: &ValidatedNetwork<T>, target: usize, region: &[usize]) -> Result<Alpha0<T>> {
    solve_alpha0_for(&CouplingOperator::from_network(net, target, region)?)
}

/// Everything the discrepancy bound depends on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CouplingConstants<T> {
    pub gamma: T,
    /// Largest kernel mass over the network.
    pub rho: T,
    pub chi: T,
    pub alpha0: T,
    /// Operator norm at `alpha0`.
    pub norm_at_alpha0: T,
    /// Discounted mass `sum_t e^(-alpha0 t) g(t)` of the kernel envelope.
    pub envelope_mass: T,
    /// Total absolute weight into the target from outside `V_i ∩ F`.
    pub sigma: T,
}

/// Bound on the probability that the target differs between the process and
/// its fixed-range approximation at some time up to `n`.
///
/// Linear in `n` when `chi < 1`; otherwise exponential with rate `alpha0`.
/// A zero rate together with `chi >= 1` leaves no valid bound.
pub fn coupling_bound<T: Scalar>(c: &CouplingConstants<T>, n: usize) -> Result<T> {
    if c.sigma == T::zero() {
        return Ok(T::zero());
    }
    let n_t = T::from_usize_lossy(n);
    if c.chi < T::one() {
        return Ok(c.gamma * c.rho * n_t * c.sigma / (T::one() - c.chi));
    }
    if c.alpha0 > T::zero() {
        if !(c.norm_at_alpha0 < T::one()) {
            return Err(Error::Precondition("operator norm at alpha0 must be below 1".into()));
        }
        let inverse_norm = T::one() / (T::one() - c.norm_at_alpha0);
        let geometric = T::one() / (T::one() - (-c.alpha0).exp());
        return Ok(c.gamma * inverse_norm * geometric * c.envelope_mass * (c.alpha0 * n_t).exp() * c.sigma);
    }
    Err(Error::Precondition("coupling bound unavailable: alpha0 = 0 while chi >= 1".into()))
}

/// Discounted mass of the pointwise kernel envelope `sup_j g_j(t)`.
///
/// All-geometric networks use the largest ratio, all-power networks the
/// smallest exponent; mixed families add the two, which dominates the
/// envelope.
pub fn envelope_discounted_mass<T: Scalar>(kernels: &[PulseKernel<T>], alpha: T) -> Option<T> {
    let mut ratio: Option<T> = None;
    let mut exponent: Option<T> = None;
    for g in kernels {
        match *g {
            PulseKernel::Geometric { ratio: r } => ratio = Some(ratio.map_or(r, |x: T| x.max(r))),
            PulseKernel::Power { exponent: q } => exponent = Some(exponent.map_or(q, |x: T| x.min(q))),
        }
    }
    let mut total = T::zero();
    if let Some(r) = ratio {
        total = total + PulseKernel::geometric(r).discounted_mass(alpha)?;
    }
    if let Some(q) = exponent {
        total = total + PulseKernel::power(q).discounted_mass(alpha)?;
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NetworkSpec, RateFunction};
    use approx::assert_relative_eq;

    fn single_row() -> CouplingOperator<f64> {
        CouplingOperator::new(1.0, 0.5, vec![vec![(1.0, PulseKernel::geometric(0.5))]]).unwrap()
    }

    #[test]
    fn closed_form_row_value() {
        let op = single_row();
        assert_relative_eq!(op.norm(2f64.ln()).unwrap(), 0.5 / 0.75 + 0.25, epsilon = 1e-12);
        // undiscounted: 0.5 + 2
        assert_relative_eq!(op.chi(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn bisection_brackets_unit_norm() {
        let op = single_row();
        let a = solve_alpha0_for(&op).unwrap();
        assert!(a.alpha0 > 0.0 && a.alpha0 <= 2f64.ln());
        assert!(op.norm(a.alpha0).unwrap() < 1.0);
        assert!(op.norm(a.alpha0 - 1e-3).unwrap() >= 1.0);
        assert!(op.norm(a.alpha0 / 2.0).unwrap() >= 1.0);
    }

    #[test]
    fn weak_coupling_has_zero_rate() {
        let op = CouplingOperator::new(0.1, 0.2, vec![vec![(0.5, PulseKernel::geometric(0.5))]]).unwrap();
        // 0.8 + 0.1 * 0.5 * 2
        assert_relative_eq!(op.chi(), 0.9, epsilon = 1e-12);
        assert_eq!(solve_alpha0_for(&op).unwrap().alpha0, 0.0);

        let spec = NetworkSpec::homogeneous(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            RateFunction::sigmoid(0.5 - 1e-9, 1.0),
            PulseKernel::geometric(0.5),
        );
        let net = spec.validate().unwrap();
        let a = solve_alpha0(&net, 0, &[0, 1]).unwrap();
        assert_relative_eq!(a.chi, 0.5, epsilon = 1e-8);
        assert_eq!(a.alpha0, 0.0);
    }

    #[test]
    fn too_strong_coupling_is_reported() {
        let op = CouplingOperator::new(1.0, 0.1, vec![vec![(1e40, PulseKernel::geometric(0.5))]]).unwrap();
        assert!(matches!(solve_alpha0_for(&op), Err(Error::StronglyCoupled { .. })));
    }

    #[test]
    fn target_row_restricted_to_region() {
        let mut spec = NetworkSpec::homogeneous(
            &[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
            RateFunction::sigmoid(0.2, 1.0),
            PulseKernel::geometric(0.5),
        );
        spec.set_weight(1, 0, 1.0);
        spec.set_weight(2, 0, 3.0);
        let net = spec.validate().unwrap();
        let full = CouplingOperator::from_network(&net, 0, &[0, 1, 2]).unwrap();
        let part = CouplingOperator::from_network(&net, 0, &[0, 1]).unwrap();
        assert_eq!(full.chi(), part.chi());
        assert!(part.norm(1.0).unwrap() < full.norm(1.0).unwrap());
    }

    fn constants(chi: f64, alpha0: f64, sigma: f64) -> CouplingConstants<f64> {
        CouplingConstants { gamma: 0.5, rho: 2.0, chi, alpha0, norm_at_alpha0: 0.5, envelope_mass: 1.0, sigma }
    }

    #[test]
    fn linear_branch_value() {
        assert_relative_eq!(coupling_bound(&constants(0.8, 0.0, 0.01), 50).unwrap(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_tail_gives_zero() {
        assert_eq!(coupling_bound(&constants(3.0, 0.0, 0.0), 50).unwrap(), 0.0);
    }

    #[test]
    fn exponential_branch_and_unavailable_case() {
        let c = constants(1.5, 0.1, 0.01);
        let expected = 0.5 * 2.0 / (1.0 - (-0.1f64).exp()) * (0.1f64 * 20.0).exp() * 0.01;
        assert_relative_eq!(coupling_bound(&c, 20).unwrap(), expected, epsilon = 1e-12);
        assert!(coupling_bound(&constants(1.5, 0.0, 0.01), 20).is_err());
    }

    #[test]
    fn monotone_in_horizon() {
        for c in [constants(0.8, 0.0, 0.01), constants(1.5, 0.1, 0.01)] {
            let mut prev = 0.0;
            for n in 1..200 {
                let b = coupling_bound(&c, n).unwrap();
                assert!(b >= prev);
                prev = b;
            }
        }
    }

    #[test]
    fn envelope_mass_families() {
        let g = [PulseKernel::geometric(0.3), PulseKernel::geometric(0.5)];
        assert_relative_eq!(envelope_discounted_mass(&g, 0.0).unwrap(), 2.0, epsilon = 1e-12);
        let mixed = [PulseKernel::geometric(0.5), PulseKernel::power(2.0)];
        let expected = 2.0 + PulseKernel::power(2.0).discounted_mass(0.0).unwrap();
        assert_relative_eq!(envelope_discounted_mass(&mixed, 0.0).unwrap(), expected, epsilon = 1e-9);
    }
}
