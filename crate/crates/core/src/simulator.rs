//! Forward simulation of the spiking dynamics and the shared-uniform
//! coupling with the fixed-range approximation.

use crate::error::{Error, Result};
use crate::model::{PulseKernel, SpikeRaster, ValidatedNetwork};
use crate::rng::UniformStreams;
use crate::Scalar;

/// Smallest horizon the estimator accepts.
pub const MIN_HORIZON: usize = 3;

#[derive(Clone, Copy, Debug)]
pub struct SimulationConfig<'a, T> {
    pub network: &'a ValidatedNetwork<T>,
    pub n: usize,
    pub seed: u64,
}

impl<'a, T: Scalar> SimulationConfig<'a, T> {
    pub fn new(network: &'a ValidatedNetwork<T>, n: usize, seed: u64) -> Result<Self> {
        if n < MIN_HORIZON {
            return Err(Error::param(format!("horizon n = {n} must be at least {MIN_HORIZON}")));
        }
        Ok(SimulationConfig { network, n, seed })
    }
}

/// Both trajectories of a coupled run, over every neuron of the network.
#[derive(Clone, Debug)]
pub struct CoupledResult {
    pub full: SpikeRaster,
    pub approx: SpikeRaster,
    /// Per neuron, the first time the two trajectories disagree.
    pub discrepancy: Vec<Option<usize>>,
}

/// One trajectory with incremental potentials.
///
/// Geometric kernels keep a per-(target, input) accumulator
/// `A(t) = ratio * A(t - 1) + X_t(j)` that is zeroed when the target spikes;
/// other kernels are replayed from the target's last spike.
struct Process<'a, T> {
    network: &'a ValidatedNetwork<T>,
    inputs: Vec<Vec<(usize, T)>>,
    acc: Vec<Vec<T>>,
    last: Vec<usize>,
    bits: Vec<u8>,
    t: usize,
}

impl<'a, T: Scalar> Process<'a, T> {
    fn new(network: &'a ValidatedNetwork<T>, inputs: Vec<Vec<(usize, T)>>, n: usize) -> Self {
        let size = network.neuron_count();
        let acc = inputs.iter().map(|v| vec![T::zero(); v.len()]).collect();
        Process { network, inputs, acc, last: vec![0; size], bits: Vec::with_capacity(n * size), t: 0 }
    }

    fn size(&self) -> usize {
        self.last.len()
    }

    #[inline]
    fn cell(&self, s: usize, j: usize) -> u8 {
        if s == 0 {
            1
        } else {
            self.bits[(s - 1) * self.size() + j]
        }
    }

    /// Potential of `i` given the history through the current time.
    fn potential(&self, i: usize) -> T {
        let t = self.t;
        let mut total = T::zero();
        for (k, &(j, w)) in self.inputs[i].iter().enumerate() {
            let drive = match self.network.pulse(j) {
                PulseKernel::Geometric { .. } => self.acc[i][k],
                g => {
                    let mut sum = T::zero();
                    for s in self.last[i] + 1..=t {
                        if self.cell(s, j) == 1 {
                            sum = sum + g.eval(t + 1 - s);
                        }
                    }
                    sum
                }
            };
            total = total + w * drive;
        }
        total
    }

    fn spike_probability(&self, i: usize) -> T {
        self.network.rate(i).eval(self.potential(i))
    }

    /// Appends a row and updates the accumulators.
    fn push(&mut self, row: &[u8]) {
        self.bits.extend_from_slice(row);
        self.t += 1;
        let t = self.t;
        for i in 0..row.len() {
            if row[i] == 1 {
                self.last[i] = t;
                self.acc[i].iter_mut().for_each(|a| *a = T::zero());
                continue;
            }
            for (k, &(j, _)) in self.inputs[i].iter().enumerate() {
                if let PulseKernel::Geometric { ratio } = *self.network.pulse(j) {
                    let x = if row[j] == 1 { T::one() } else { T::zero() };
                    self.acc[i][k] = ratio * self.acc[i][k] + x;
                }
            }
        }
    }

    /// Draws the next row: neuron `i` spikes iff `U(i) <= phi_i(potential)`.
    fn step(&mut self, uniforms: &[f64], row: &mut [u8]) {
        for (i, cell) in row.iter_mut().enumerate() {
            let p = self.spike_probability(i).as_f64();
            *cell = (uniforms[i] <= p) as u8;
        }
        self.push(row);
    }

    fn into_raster(self) -> SpikeRaster {
        let size = self.size();
        SpikeRaster::from_bits((0..size).collect(), self.t, self.bits)
    }
}

fn full_inputs<T: Scalar>(network: &ValidatedNetwork<T>) -> Vec<Vec<(usize, T)>> {
    (0..network.neuron_count()).map(|i| network.inputs(i)).collect()
}

/// Simulates `n` steps from the all-spiked past at time 0.
///
/// Uses one uniform `U_t(i)` per cell, addressed by `(seed, t, i)`, so the
/// same seed always yields the same raster.
pub fn simulate<T: Scalar>(config: &SimulationConfig<'_, T>) -> SpikeRaster {
    let network = config.network;
    let size = network.neuron_count();
    let mut process = Process::new(network, full_inputs(network), config.n);
    let mut uniforms = UniformStreams::new(config.seed, size);
    let mut u = vec![0.0; size];
    let mut row = vec![0u8; size];
    for _ in 0..config.n {
        uniforms.next_row(&mut u);
        process.step(&u, &mut row);
    }
    process.into_raster()
}

/// Continues `history` (over all neurons, in network order) up to horizon
/// `config.n`, drawing `U_t` for `t > history.n()`.
pub fn simulate_from<T: Scalar>(config: &SimulationConfig<'_, T>, history: &SpikeRaster) -> Result<SpikeRaster> {
    let network = config.network;
    let size = network.neuron_count();
    if history.neurons() != (0..size).collect::<Vec<_>>().as_slice() {
        return Err(Error::param("history must cover every neuron in network order"));
    }
    if history.n() > config.n {
        return Err(Error::param("history is longer than the horizon"));
    }
    let mut process = Process::new(network, full_inputs(network), config.n);
    for t in 1..=history.n() {
        process.push(history.row(t));
    }
    let mut uniforms = UniformStreams::starting_at(config.seed, size, history.n() + 1);
    let mut u = vec![0.0; size];
    let mut row = vec![0u8; size];
    for _ in history.n()..config.n {
        uniforms.next_row(&mut u);
        process.step(&u, &mut row);
    }
    Ok(process.into_raster())
}

/// Runs the process and its fixed-range approximation on shared uniforms.
///
/// In the approximation, `target` only listens to presynaptic neurons inside
/// `region`; every other neuron follows the full dynamics. Both start from
/// the same past.
pub fn simulate_coupled<T: Scalar>(
    config: &SimulationConfig<'_, T>,
    region: &[usize],
    target: usize,
) -> Result<CoupledResult> {
    let network = config.network;
    let size = network.neuron_count();
    if let Some(&bad) = region.iter().find(|&&k| k >= size) {
        return Err(Error::UnknownNeuron(bad));
    }
    if !region.contains(&target) {
        return Err(Error::TargetNotInRegion { target });
    }
    let inputs = full_inputs(network);
    let mut restricted = inputs.clone();
    restricted[target].retain(|(j, _)| region.contains(j));

    let mut full = Process::new(network, inputs, config.n);
    let mut approx = Process::new(network, restricted, config.n);
    let mut uniforms = UniformStreams::new(config.seed, size);
    let mut u = vec![0.0; size];
    let mut row_full = vec![0u8; size];
    let mut row_approx = vec![0u8; size];
    let mut discrepancy = vec![None; size];
    for t in 1..=config.n {
        uniforms.next_row(&mut u);
        full.step(&u, &mut row_full);
        approx.step(&u, &mut row_approx);
        for j in 0..size {
            if discrepancy[j].is_none() && row_full[j] != row_approx[j] {
                discrepancy[j] = Some(t);
            }
        }
    }
    Ok(CoupledResult { full: full.into_raster(), approx: approx.into_raster(), discrepancy })
}
