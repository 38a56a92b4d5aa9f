use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Spike rate function mapping a membrane potential to a spiking probability.
///
/// Both families take values in `[p_star, 1 - p_star]` and are non-decreasing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RateFunction<T> {
    /// `p_star + (1 - 2 p_star) / (1 + exp(-gain * u))`.
    ClippedSigmoid { p_star: T, gain: T },
    /// `min(1 - p_star, max(p_star, slope * u + intercept))`.
    ClippedLinear { p_star: T, slope: T, intercept: T },
}

/// Infimum of the rate derivative over an interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeInf<T> {
    pub value: T,
    /// The interval reaches a point where a clipped-linear rate is not
    /// differentiable; `value` is then reported as zero.
    pub touches_clip: bool,
}

fn logistic<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Scalar> RateFunction<T> {
    pub fn sigmoid(p_star: T, gain: T) -> Self {
        RateFunction::ClippedSigmoid { p_star, gain }
    }

    pub fn linear(p_star: T, slope: T, intercept: T) -> Self {
        RateFunction::ClippedLinear { p_star, slope, intercept }
    }

    pub fn p_star(&self) -> T {
        match *self {
            RateFunction::ClippedSigmoid { p_star, .. } | RateFunction::ClippedLinear { p_star, .. } => p_star,
        }
    }

    pub fn eval(&self, u: T) -> T {
        match *self {
            RateFunction::ClippedSigmoid { p_star, gain } => {
                let two = T::lit(2.0);
                p_star + (T::one() - two * p_star) * logistic(gain * u)
            }
            RateFunction::ClippedLinear { p_star, slope, intercept } => {
                (slope * u + intercept).max(p_star).min(T::one() - p_star)
            }
        }
    }

    /// Derivative at `u`. For the clipped-linear family the derivative at the
    /// two clip points does not exist; zero is returned there.
    pub fn derivative(&self, u: T) -> T {
        match *self {
            RateFunction::ClippedSigmoid { p_star, gain } => {
                let s = logistic(gain * u);
                (T::one() - T::lit(2.0) * p_star) * gain * s * (T::one() - s)
            }
            RateFunction::ClippedLinear { slope, .. } => match self.linear_segment() {
                Some((lo, hi)) if u > lo && u < hi => slope,
                _ => T::zero(),
            },
        }
    }

    /// `sup |phi'|` over the real line.
    pub fn max_derivative(&self) -> T {
        match *self {
            RateFunction::ClippedSigmoid { p_star, gain } => (T::one() - T::lit(2.0) * p_star) * gain / T::lit(4.0),
            RateFunction::ClippedLinear { slope, .. } => match self.linear_segment() {
                Some(_) => slope,
                None => T::zero(),
            },
        }
    }

    /// Open interval of potentials on which a clipped-linear rate is unclipped.
    pub fn linear_segment(&self) -> Option<(T, T)> {
        match *self {
            RateFunction::ClippedSigmoid { .. } => None,
            RateFunction::ClippedLinear { p_star, slope, intercept } => {
                let lo = (p_star - intercept) / slope;
                let hi = (T::one() - p_star - intercept) / slope;
                (lo < hi).then_some((lo, hi))
            }
        }
    }

    /// Infimum of `phi'` over `[lo, hi]`.
    ///
    /// The sigmoid derivative is unimodal with its peak at zero, so the
    /// infimum sits at an endpoint. The clipped-linear derivative is the slope
    /// strictly inside the linear segment and zero elsewhere.
    pub fn derivative_inf(&self, lo: T, hi: T) -> DerivativeInf<T> {
        debug_assert!(lo <= hi);
        match *self {
            RateFunction::ClippedSigmoid { .. } => {
                DerivativeInf { value: self.derivative(lo).min(self.derivative(hi)), touches_clip: false }
            }
            RateFunction::ClippedLinear { slope, .. } => match self.linear_segment() {
                Some((seg_lo, seg_hi)) if lo > seg_lo && hi < seg_hi => {
                    DerivativeInf { value: slope, touches_clip: false }
                }
                _ => DerivativeInf { value: T::zero(), touches_clip: true },
            },
        }
    }
}

/// Infimum of the rate derivative over `[lo, hi]`.
pub fn rate_derivative_inf<T: Scalar>(rate: &RateFunction<T>, lo: T, hi: T) -> DerivativeInf<T> {
    rate.derivative_inf(lo, hi)
}
