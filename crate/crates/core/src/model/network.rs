use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::kernel::{KernelMass, PulseKernel};
use super::raster::SpikeRaster;
use super::rate::RateFunction;
use crate::error::{Error, Result, Violation};
use crate::Scalar;

/// Ground-truth generative model: weights, rate functions and pulse kernels.
///
/// `weight(j, i)` is the synaptic weight of `j` on `i`. Storage is row-major
/// with the presynaptic neuron as the row.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec<T> {
    neurons: usize,
    weights: Vec<T>,
    rates: Vec<RateFunction<T>>,
    pulses: Vec<PulseKernel<T>>,
}

/// Non-fatal findings of [`validate_network`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    /// Power kernel with exponent at most one: the pulse mass is infinite and
    /// coupling bounds that need it are unavailable.
    InfiniteKernelMass { neuron: usize },
    /// Clipped-linear rate: only piecewise differentiable.
    PiecewiseRate { neuron: usize },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::InfiniteKernelMass { neuron } => {
                write!(f, "pulse kernel of neuron {neuron} has infinite mass; coupling bounds are unavailable")
            }
            Warning::PiecewiseRate { neuron } => {
                write!(f, "rate of neuron {neuron} is clipped-linear and only piecewise differentiable")
            }
        }
    }
}

impl<T: Scalar> NetworkSpec<T> {
    /// Unchecked constructor; see [`validate_network`].
    pub fn new(neurons: usize, weights: Vec<T>, rates: Vec<RateFunction<T>>, pulses: Vec<PulseKernel<T>>) -> Self {
        NetworkSpec { neurons, weights, rates, pulses }
    }

    /// Network whose neurons all share one rate function and one kernel.
    /// `rows[j][i]` is the weight of `j` on `i`.
    pub fn homogeneous(rows: &[Vec<T>], rate: RateFunction<T>, pulse: PulseKernel<T>) -> Self {
        let neurons = rows.len();
        let weights = rows.iter().flat_map(|r| r.iter().copied()).collect();
        NetworkSpec::new(neurons, weights, vec![rate; neurons], vec![pulse; neurons])
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons
    }

    #[inline]
    pub fn weight(&self, source: usize, target: usize) -> T {
        self.weights[source * self.neurons + target]
    }

    pub fn set_weight(&mut self, source: usize, target: usize, w: T) {
        self.weights[source * self.neurons + target] = w;
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn rate(&self, neuron: usize) -> &RateFunction<T> {
        &self.rates[neuron]
    }

    pub fn rates(&self) -> &[RateFunction<T>] {
        &self.rates
    }

    pub fn pulse(&self, neuron: usize) -> &PulseKernel<T> {
        &self.pulses[neuron]
    }

    pub fn pulses(&self) -> &[PulseKernel<T>] {
        &self.pulses
    }

    /// Presynaptic neurons of `target`: every `j != target` with a nonzero weight.
    pub fn true_neighborhood(&self, target: usize) -> Vec<usize> {
        (0..self.neurons).filter(|&j| j != target && self.weight(j, target) != T::zero()).collect()
    }

    /// `(source, weight)` pairs with nonzero weight into `target`.
    pub(crate) fn inputs(&self, target: usize) -> Vec<(usize, T)> {
        self.true_neighborhood(target).into_iter().map(|j| (j, self.weight(j, target))).collect()
    }

    pub fn validate(self) -> Result<ValidatedNetwork<T>> {
        validate_network(self)
    }
}

/// A network that satisfies the standing assumptions, with its derived constants.
#[derive(Clone, Debug)]
pub struct ValidatedNetwork<T> {
    spec: NetworkSpec<T>,
    /// `max_i sum_j |W(j, i)|`.
    pub r: T,
    /// `max_i sup |phi_i'|`.
    pub gamma: T,
    /// Smallest per-neuron `p_star`; every rate lies in `[p_star, 1 - p_star]`.
    pub p_star: T,
    /// `min(p_star, 1 - p_star)`.
    pub p_min: T,
    /// Per-neuron kernel mass, `None` where the series diverges.
    pub masses: Vec<Option<KernelMass<T>>>,
    pub warnings: Vec<Warning>,
}

impl<T> Deref for ValidatedNetwork<T> {
    type Target = NetworkSpec<T>;

    fn deref(&self) -> &NetworkSpec<T> {
        &self.spec
    }
}

impl<T: Scalar> ValidatedNetwork<T> {
    pub fn spec(&self) -> &NetworkSpec<T> {
        &self.spec
    }

    pub fn into_spec(self) -> NetworkSpec<T> {
        self.spec
    }

    /// `sup_j rho_j`, or `None` if any kernel mass diverges.
    pub fn max_mass(&self) -> Option<T> {
        self.masses.iter().try_fold(T::zero(), |acc, m| m.map(|m| acc.max(m.value)))
    }
}

/// Checks the standing model assumptions and computes the derived constants.
///
/// Errors carry every violated assumption, not just the first.
pub fn validate_network<T: Scalar>(spec: NetworkSpec<T>) -> Result<ValidatedNetwork<T>> {
    let n = spec.neurons;
    let mut violations = Vec::new();
    if n == 0 {
        violations.push(Violation::EmptyNetwork);
    }
    if spec.weights.len() != n * n {
        violations.push(Violation::WeightShape { expected: n * n, found: spec.weights.len() });
    }
    if spec.rates.len() != n {
        violations.push(Violation::ParameterCount { field: "rate", expected: n, found: spec.rates.len() });
    }
    if spec.pulses.len() != n {
        violations.push(Violation::ParameterCount { field: "pulse", expected: n, found: spec.pulses.len() });
    }
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }

    for j in 0..n {
        for i in 0..n {
            let w = spec.weight(j, i);
            if !w.is_finite() {
                violations.push(Violation::NonFiniteWeight { source: j, target: i });
            } else if i == j && w != T::zero() {
                violations.push(Violation::NonzeroSelfWeight { neuron: j, weight: w.as_f64() });
            }
        }
    }

    let mut warnings = Vec::new();
    let half = T::lit(0.5);
    for (k, rate) in spec.rates.iter().enumerate() {
        let p = rate.p_star();
        if !(p > T::zero() && p < half) {
            violations.push(Violation::PStarOutOfRange { neuron: k, p_star: p.as_f64() });
        }
        match *rate {
            RateFunction::ClippedSigmoid { gain, .. } => {
                if !(gain > T::zero()) || !gain.is_finite() {
                    violations.push(Violation::NonPositiveRateParameter {
                        neuron: k,
                        name: "gain",
                        value: gain.as_f64(),
                    });
                }
            }
            RateFunction::ClippedLinear { slope, intercept, .. } => {
                if !(slope > T::zero()) || !slope.is_finite() {
                    violations.push(Violation::NonPositiveRateParameter {
                        neuron: k,
                        name: "slope",
                        value: slope.as_f64(),
                    });
                }
                if !intercept.is_finite() {
                    violations.push(Violation::NonPositiveRateParameter {
                        neuron: k,
                        name: "intercept",
                        value: intercept.as_f64(),
                    });
                }
                warnings.push(Warning::PiecewiseRate { neuron: k });
            }
        }
    }
    for (k, pulse) in spec.pulses.iter().enumerate() {
        match *pulse {
            PulseKernel::Geometric { ratio } => {
                if !(ratio > T::zero() && ratio < T::one()) {
                    violations.push(Violation::NonPositiveKernelParameter {
                        neuron: k,
                        name: "ratio",
                        value: ratio.as_f64(),
                    });
                }
            }
            PulseKernel::Power { exponent } => {
                if !(exponent > T::zero()) || !exponent.is_finite() {
                    violations.push(Violation::NonPositiveKernelParameter {
                        neuron: k,
                        name: "exponent",
                        value: exponent.as_f64(),
                    });
                } else if exponent <= T::one() {
                    warnings.push(Warning::InfiniteKernelMass { neuron: k });
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }

    let r = (0..n).map(|i| (0..n).map(|j| spec.weight(j, i).abs()).sum::<T>()).fold(T::zero(), T::max);
    let gamma = spec.rates.iter().map(|f| f.max_derivative()).fold(T::zero(), T::max);
    let p_star = spec.rates.iter().map(|f| f.p_star()).fold(T::one(), T::min);
    let p_min = p_star.min(T::one() - p_star);
    let masses = spec.pulses.iter().map(|g| g.mass()).collect();

    Ok(ValidatedNetwork { spec, r, gamma, p_star, p_min, masses, warnings })
}

/// Membrane potential of `target` after time `t`:
/// `sum_j W(j, target) sum_{s = L + 1}^{t} g_j(t + 1 - s) X_s(j)`, with `L`
/// the last spike time of `target` at or before `t`. It drives the spiking
/// probability at `t + 1`.
pub fn membrane_potential<T: Scalar>(
    spec: &NetworkSpec<T>,
    raster: &SpikeRaster,
    target: usize,
    t: usize,
) -> Result<T> {
    let col = raster.column_of(target).ok_or(Error::NeuronNotInRaster(target))?;
    if t == 0 || t > raster.n() {
        return Err(Error::TimeOutOfRange { t, n: raster.n() });
    }
    if target >= spec.neuron_count() {
        return Err(Error::UnknownNeuron(target));
    }
    let last = raster.last_spike(col, t);
    let mut total = T::zero();
    for j in 0..spec.neuron_count() {
        let w = spec.weight(j, target);
        if w == T::zero() {
            continue;
        }
        let cj = raster.column_of(j).ok_or(Error::MissingPresynaptic { presynaptic: j, target })?;
        let g = spec.pulse(j);
        let mut acc = T::zero();
        for s in last + 1..=t {
            if raster.get(s, cj) == 1 {
                acc = acc + g.eval(t + 1 - s);
            }
        }
        total = total + w * acc;
    }
    Ok(total)
}

/// JSON document form of a network. `rate` and `pulse` hold either one
/// object shared by every neuron or one object per neuron.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub(crate) struct SpecDocument<T> {
    neurons: usize,
    weights: WeightsDoc<T>,
    rate: OneOrMany<RateFunction<T>>,
    pulse: OneOrMany<PulseKernel<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
enum WeightsDoc<T> {
    Rows(Vec<Vec<T>>),
    Flat(Vec<T>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<V> {
    One(V),
    Many(Vec<V>),
}

impl<V: Clone> OneOrMany<V> {
    fn expand(self, n: usize) -> Vec<V> {
        match self {
            OneOrMany::One(v) => vec![v; n],
            OneOrMany::Many(v) => v,
        }
    }
}

impl<T: Scalar> SpecDocument<T> {
    pub(crate) fn into_spec(self) -> std::result::Result<NetworkSpec<T>, String> {
        let n = self.neurons;
        let weights = match self.weights {
            WeightsDoc::Flat(w) => w,
            WeightsDoc::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(format!("\"weights\" must be {n} rows of {n} entries"));
                }
                rows.into_iter().flatten().collect()
            }
        };
        Ok(NetworkSpec::new(n, weights, self.rate.expand(n), self.pulse.expand(n)))
    }

    pub(crate) fn from_spec(spec: &NetworkSpec<T>) -> Self {
        let n = spec.neurons;
        let rows = spec.weights.chunks(n.max(1)).map(<[T]>::to_vec).collect();
        let uniform_rate = spec.rates.windows(2).all(|w| w[0] == w[1]) && !spec.rates.is_empty();
        let uniform_pulse = spec.pulses.windows(2).all(|w| w[0] == w[1]) && !spec.pulses.is_empty();
        SpecDocument {
            neurons: n,
            weights: WeightsDoc::Rows(rows),
            rate: if uniform_rate { OneOrMany::One(spec.rates[0]) } else { OneOrMany::Many(spec.rates.clone()) },
            pulse: if uniform_pulse { OneOrMany::One(spec.pulses[0]) } else { OneOrMany::Many(spec.pulses.clone()) },
        }
    }
}
