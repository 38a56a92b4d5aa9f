//! Interaction-graph estimation for stochastic spiking networks with
//! variable-length memory.
//!
//! The pieces, bottom up:
//!
//! - [`model`]: network specification, rate functions, pulse kernels, rasters
//!   and the membrane potential.
//! - [`simulator`]: exact discrete-time simulation and the coupled
//!   fixed-range approximation, driven by seed-addressable uniforms.
//! - [`counter`]: context counting and admissible-context selection.
//! - [`estimator`]: sensitivity statistic and neighborhood selection.
//! - [`bounds`]: closed-form error bounds and model constants.
//! - [`harness`]: Monte Carlo experiments and benchmarks.
//!
//! Everything numeric is generic over [`Scalar`]; the aliases below fix it
//! to `f64`.

// `!(x > 0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod counter;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod model;
pub mod rng;
mod scalar;
pub mod simulator;

pub use counter::{
    admissibility_threshold, admissible_set, count_contexts, count_contexts_capped, empirical_prob, max_admissible_ell,
    true_transition_prob, ContextKey, ContextTable, Counts,
};
pub use error::{Error, Result, Violation};
pub use estimator::{
    epsilon_schedule, estimate_graph, select_neighborhood, sensitivity, sensitivity_profile, EstimatedGraph, GraphRow,
    SensitivityProfile, Threshold,
};
pub use model::{
    membrane_potential, rate_derivative_inf, validate_network, PulseKernel, RateFunction, SpikeRaster, Warning,
};
pub use scalar::Scalar;
pub use simulator::{simulate, simulate_coupled, simulate_from, CoupledResult, SimulationConfig};

pub type NetworkSpec = model::NetworkSpec<f64>;
pub type ValidatedNetwork = model::ValidatedNetwork<f64>;
pub type Rate = model::RateFunction<f64>;
pub type Kernel = model::PulseKernel<f64>;
pub type ModelConstants = bounds::ModelConstants<f64>;
pub type BoundReport = bounds::BoundReport<f64>;
pub type Graph = estimator::EstimatedGraph<f64>;
