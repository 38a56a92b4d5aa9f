//! Closed-form error bounds for the neighborhood estimator and the model
//! constants they depend on.

mod constants;
mod coupling;
mod report;

pub use constants::{compute_constants, ModelConstants, Separation};
pub use coupling::{
    coupling_bound, envelope_discounted_mass, solve_alpha0, solve_alpha0_for, Alpha0, CouplingConstants,
    CouplingOperator, OperatorRow, ALPHA_SEARCH_MAX, NORM_MARGIN,
};
pub use report::{bound_report, BoundReport, BoundValue, UnderestimationReport};

use serde::Serialize;

use crate::counter::check_xi;
use crate::error::{Error, Result};
use crate::Scalar;

/// Default slack in the lower-deviation bound on context counts.
pub const DEFAULT_NU: f64 = 0.5;

/// `4 n^(3/2 - xi) exp(-eps^2 n^(2 xi) / 2)`: probability that a
/// non-neighbor is selected.
pub fn overestimation_bound<T: Scalar>(n: usize, xi: f64, eps: T) -> Result<T> {
    check_n(n)?;
    check_xi(xi)?;
    if !(eps > T::zero()) {
        return Err(Error::param(format!("eps = {eps} must be positive")));
    }
    let nf = n as f64;
    let prefactor = T::lit(4.0 * nf.powf(1.5 - xi));
    let scale = T::lit(nf.powf(2.0 * xi));
    Ok(prefactor * (-(eps * eps) * scale / T::lit(2.0)).exp())
}

/// Two terms bounding the probability that a true neighbor is missed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Underestimation<T> {
    /// `4 exp(-(m - eps)^2 n^(2 xi) / 2)`.
    pub term1: T,
    /// `exp(-floor(n/2) q (1 - nu)^2 / 4)` with `q = p_min^(|F| + 1)`, or 1
    /// when the horizon is too short for it to apply.
    pub term2: T,
    /// Whether `term2` is the explicit tail rather than the trivial 1.
    pub valid: bool,
}

impl<T: Scalar> Underestimation<T> {
    pub fn total(&self) -> T {
        self.term1 + self.term2
    }
}

/// Underestimation bound for separation `m`, region size `region_size` and
/// rate floor `p_min`.
pub fn underestimation_bound<T: Scalar>(
    n: usize,
    xi: f64,
    eps: T,
    m: T,
    region_size: usize,
    p_min: T,
    nu: f64,
) -> Result<Underestimation<T>> {
    check_n(n)?;
    check_xi(xi)?;
    if !(eps > T::zero() && eps < m) {
        return Err(Error::Precondition(format!("need 0 < eps < m, got eps = {eps}, m = {m}")));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::param(format!("nu = {nu} not in (0, 1)")));
    }
    if !(p_min > T::zero() && p_min <= T::lit(0.5)) {
        return Err(Error::param(format!("p_min = {p_min} not in (0, 1/2]")));
    }
    let nf = n as f64;
    let gap = m - eps;
    let term1 = T::lit(4.0) * (-(gap * gap) * T::lit(nf.powf(2.0 * xi)) / T::lit(2.0)).exp();

    let half = (n / 2) as f64;
    let q = p_min.as_f64().powi(region_size as i32 + 1);
    let exponent = half * q * (1.0 - nu).powi(2) / 4.0;
    let floor = nf.powf(0.5 + xi);
    let valid = nu * q * half > floor && exponent > floor;
    let term2 = if valid { T::lit((-exponent).exp()) } else { T::one() };
    Ok(Underestimation { term1, term2, valid })
}

/// `2 exp(-2 lambda^2 / (t - ell + 1))`: tail of the count martingale of a
/// length-`ell` context at time `t`.
pub fn hoeffding_bound<T: Scalar>(t: usize, ell: usize, lambda: T) -> Result<T> {
    if t <= ell + 1 {
        return Err(Error::Precondition(format!("need t > ell + 1, got t = {t}, ell = {ell}")));
    }
    if !(lambda > T::zero()) {
        return Err(Error::param(format!("lambda = {lambda} must be positive")));
    }
    let span = T::from_usize_lossy(t - ell + 1);
    Ok(T::lit(2.0) * (-T::lit(2.0) * lambda * lambda / span).exp())
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::param(format!("n = {n} must be at least 3")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn overestimation_examples() {
        let vacuous = overestimation_bound(10_000, 0.25, 0.2).unwrap();
        assert_relative_eq!(vacuous, 4e5 * (-2.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(vacuous, 54134.11, max_relative = 1e-6);
        let tiny = overestimation_bound(10_000, 0.25, 2.0).unwrap();
        assert_relative_eq!(tiny, 4e5 * (-200.0f64).exp(), max_relative = 1e-10);
        assert!(tiny < 1e-80);
        assert_relative_eq!(overestimation_bound(10_000, 0.25, 1e-12).unwrap(), 4e5, max_relative = 1e-9);
        assert!(overestimation_bound(10_000, 0.25, 0.0).is_err());
        assert!(overestimation_bound(2, 0.25, 0.1).is_err());
    }

    #[test]
    fn underestimation_examples() {
        let u = underestimation_bound(10_000, 0.25, 0.05, 0.1, 2, 0.2, 0.5).unwrap();
        assert_relative_eq!(u.term1, 4.0 * (-0.125f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(u.term1, 3.5298, max_relative = 1e-4);
        // 0.5 * 0.008 * 5000 = 20 is far below 10^3
        assert!(!u.valid);
        assert_eq!(u.term2, 1.0);
        assert!(underestimation_bound(10_000, 0.25, 0.1, 0.1, 2, 0.2, 0.5).is_err());
    }

    #[test]
    fn underestimation_tail_applies_for_long_runs() {
        // q = 0.25, floor(n/2) q (1 - nu)^2 / 4 = n / 128 > n^0.6 once n > 128^2.5
        let n = 2_000_000;
        let u = underestimation_bound(n, 0.1, 0.05, 0.1, 1, 0.5, 0.5).unwrap();
        assert!(u.valid);
        assert_relative_eq!(u.term2, (-(n as f64 / 2.0) * 0.25 * 0.25 / 4.0).exp(), max_relative = 1e-12);
    }

    #[test]
    fn hoeffding_examples() {
        let b = hoeffding_bound(103, 1, 10.0).unwrap();
        assert_relative_eq!(b, 2.0 * (-200.0f64 / 103.0).exp(), max_relative = 1e-12);
        assert_relative_eq!(b, 0.286906, max_relative = 1e-5);
        assert_relative_eq!(hoeffding_bound(103, 1, 1e-9).unwrap(), 2.0, max_relative = 1e-12);
        assert!(hoeffding_bound(2, 1, 1.0).is_err());
        assert!(hoeffding_bound(3, 1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn hoeffding_doubling_identity(t in 3usize..5000, ell in 1usize..3, lambda in 0.01f64..20.0) {
            prop_assume!(t > ell + 1);
            let b1 = hoeffding_bound(t, ell, lambda).unwrap();
            let b2 = hoeffding_bound(t, ell, 2.0 * lambda).unwrap();
            // b(2 lambda) = 2 (b(lambda) / 2)^4
            let predicted = 2.0 * (b1 / 2.0).powi(4);
            prop_assert!((b2 - predicted).abs() <= 1e-12 * predicted.max(1e-300) || (b2 < 1e-290 && predicted < 1e-290));
        }

        #[test]
        fn overestimation_decreasing_in_eps(n in 3usize..1_000_000, xi in 0.01f64..0.49, e1 in 0.001f64..3.0, de in 0.0f64..1.0) {
            let a = overestimation_bound(n, xi, e1).unwrap();
            let b = overestimation_bound(n, xi, e1 + de).unwrap();
            prop_assert!(b <= a);
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn underestimation_terms_nonnegative(n in 3usize..1_000_000, xi in 0.01f64..0.49, m in 0.01f64..1.0, frac in 0.01f64..0.99, size in 1usize..6, p_min in 0.01f64..0.5) {
            let u = underestimation_bound(n, xi, m * frac, m, size, p_min, DEFAULT_NU).unwrap();
            prop_assert!(u.term1 >= 0.0 && u.term1 <= 4.0);
            prop_assert!(u.term2 >= 0.0 && u.term2 <= 1.0);
        }
    }

    #[test]
    fn overestimation_grows_with_n_in_the_small_eps_regime() {
        // eps n^xi fixed and small: the prefactor dominates
        let xi = 0.25;
        let mut prev = 0.0;
        for k in 1..40 {
            let n = 100 * k * k;
            let eps = 0.1 / (n as f64).powf(xi);
            let b = overestimation_bound(n, xi, eps).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }
}
