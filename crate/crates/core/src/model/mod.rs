//! Generative model: rate functions, pulse kernels, networks and spike rasters.

mod kernel;
mod network;
mod raster;
mod rate;

pub use kernel::{KernelMass, PulseKernel, POWER_SUM_TERMS};
pub(crate) use network::SpecDocument;
pub use network::{membrane_potential, validate_network, NetworkSpec, ValidatedNetwork, Warning};

pub use raster::SpikeRaster;
pub use rate::{rate_derivative_inf, DerivativeInf, RateFunction};
