use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Number of explicit terms summed for kernels without a closed-form mass.
pub const POWER_SUM_TERMS: usize = 1_000_000;

/// Postsynaptic current pulse `g(t)`, defined for integer lags `t >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PulseKernel<T> {
    /// `g(t) = ratio^(t-1)`, `0 < ratio < 1`.
    Geometric { ratio: T },
    /// `g(t) = t^(-exponent)`, `exponent > 0`.
    Power { exponent: T },
}

/// Total mass `sum_{t>=1} g(t)` with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelMass<T> {
    pub value: T,
    pub error: T,
}

impl<T: Scalar> PulseKernel<T> {
    pub fn geometric(ratio: T) -> Self {
        PulseKernel::Geometric { ratio }
    }

    pub fn power(exponent: T) -> Self {
        PulseKernel::Power { exponent }
    }

    /// `g(lag)`; `lag` must be at least one.
    #[inline]
    pub fn eval(&self, lag: usize) -> T {
        debug_assert!(lag >= 1);
        match *self {
            PulseKernel::Geometric { ratio } => ratio.powi((lag - 1) as i32),
            PulseKernel::Power { exponent } => T::from_usize_lossy(lag).powf(-exponent),
        }
    }

    /// Total mass, or `None` when the series diverges (power kernels with
    /// exponent at most one).
    pub fn mass(&self) -> Option<KernelMass<T>> {
        match *self {
            PulseKernel::Geometric { ratio } => {
                Some(KernelMass { value: T::one() / (T::one() - ratio), error: T::zero() })
            }
            PulseKernel::Power { exponent } => {
                let q = exponent.as_f64();
                if q <= 1.0 {
                    return None;
                }
                let partial = partial_power_sum(q, POWER_SUM_TERMS);
                // integral bounds on the remainder sum_{t>M} t^-q
                let m = POWER_SUM_TERMS as f64;
                let upper = m.powf(1.0 - q) / (q - 1.0);
                let lower = (m + 1.0).powf(1.0 - q) / (q - 1.0);
                Some(KernelMass {
                    value: T::lit(partial + 0.5 * (upper + lower)),
                    error: T::lit(0.5 * (upper - lower)),
                })
            }
        }
    }

    /// `sum_{t>=1} exp(-alpha t) g(t)`, or `None` if it diverges.
    pub fn discounted_mass(&self, alpha: T) -> Option<T> {
        match *self {
            PulseKernel::Geometric { ratio } => {
                let d = (-alpha).exp();
                Some(d / (T::one() - ratio * d))
            }
            PulseKernel::Power { exponent } => {
                let a = alpha.as_f64();
                if a <= 0.0 {
                    return self.mass().map(|m| m.value);
                }
                Some(T::lit(discounted_power_sum(exponent.as_f64(), a)))
            }
        }
    }
}

fn partial_power_sum(q: f64, terms: usize) -> f64 {
    // smallest terms first
    (1..=terms).rev().map(|t| (t as f64).powf(-q)).sum()
}

/// `sum_{t>=1} exp(-a t) t^-q` for `a > 0`, truncated once the geometric tail
/// bound drops below machine precision.
pub(crate) fn discounted_power_sum(q: f64, a: f64) -> f64 {
    let decay = (-a).exp();
    let mut sum = 0.0;
    let mut disc = 1.0;
    for t in 1..=POWER_SUM_TERMS {
        disc *= decay;
        let term = disc * (t as f64).powf(-q);
        sum += term;
        // remaining terms are bounded by term * decay / (1 - decay)
        if term * decay / (1.0 - decay) < 1e-17 * sum {
            return sum;
        }
    }
    let t = POWER_SUM_TERMS as f64 + 1.0;
    sum + disc * decay * t.powf(-q) / (1.0 - decay)
}
