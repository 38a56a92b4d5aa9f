use crate::error::{Error, Result};

/// Binary spike record of a sampled set of neurons over times `1..=n`.
///
/// Every neuron is taken to have spiked at time 0, which gives each one a
/// finite last spike time from `t = 1` on. Cells are stored time-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeRaster {
    neurons: Vec<usize>,
    n: usize,
    bits: Vec<u8>,
}

impl SpikeRaster {
    /// All-silent raster.
    pub fn zeros(neurons: Vec<usize>, n: usize) -> Self {
        let width = neurons.len();
        SpikeRaster { neurons, n, bits: vec![0; n * width] }
    }

    /// Builds a raster from time-major rows of 0/1 entries.
    pub fn from_rows(neurons: Vec<usize>, rows: &[Vec<u8>]) -> Result<Self> {
        let width = neurons.len();
        let mut seen = neurons.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("duplicate neuron id in raster"));
        }
        let mut bits = Vec::with_capacity(rows.len() * width);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::param(format!("row {} has {} entries, expected {width}", t + 1, row.len())));
            }
            if let Some(&b) = row.iter().find(|&&b| b > 1) {
                return Err(Error::param(format!("row {} holds non-binary entry {b}", t + 1)));
            }
            bits.extend_from_slice(row);
        }
        Ok(SpikeRaster { neurons, n: rows.len(), bits })
    }

    pub(crate) fn from_bits(neurons: Vec<usize>, n: usize, bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), n * neurons.len());
        SpikeRaster { neurons, n, bits }
    }

    /// Number of observed time steps.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neurons(&self) -> &[usize] {
        &self.neurons
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    pub fn column_of(&self, neuron: usize) -> Option<usize> {
        self.neurons.iter().position(|&k| k == neuron)
    }

    /// Spike indicator at time `t` for column `col`; time 0 always reads 1.
    #[inline]
    pub fn get(&self, t: usize, col: usize) -> u8 {
        if t == 0 {
            1
        } else {
            self.bits[(t - 1) * self.neurons.len() + col]
        }
    }

    #[inline]
    pub fn set(&mut self, t: usize, col: usize, spike: bool) {
        assert!(t >= 1 && t <= self.n);
        let w = self.neurons.len();
        self.bits[(t - 1) * w + col] = spike as u8;
    }

    /// Row of time `t`, `1 <= t <= n`.
    pub fn row(&self, t: usize) -> &[u8] {
        let w = self.neurons.len();
        &self.bits[(t - 1) * w..t * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks(self.neurons.len().max(1)).take(self.n)
    }

    /// Last time `s <= t` at which column `col` spiked (0 by convention).
    pub fn last_spike(&self, col: usize, t: usize) -> usize {
        (1..=t).rev().find(|&s| self.get(s, col) == 1).unwrap_or(0)
    }

    pub fn spike_count(&self, col: usize) -> usize {
        (1..=self.n).filter(|&t| self.get(t, col) == 1).count()
    }

    /// Sub-raster on the given neurons, in the given order.
    pub fn restrict(&self, neurons: &[usize]) -> Result<SpikeRaster> {
        let cols = neurons
            .iter()
            .map(|&k| self.column_of(k).ok_or(Error::NeuronNotInRaster(k)))
            .collect::<Result<Vec<_>>>()?;
        let mut bits = Vec::with_capacity(self.n * cols.len());
        for t in 1..=self.n {
            let row = self.row(t);
            bits.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(SpikeRaster { neurons: neurons.to_vec(), n: self.n, bits })
    }

    /// Same cells under new neuron labels.
    pub fn relabel(&self, neurons: Vec<usize>) -> Result<SpikeRaster> {
        if neurons.len() != self.neurons.len() {
            return Err(Error::param("relabeling must keep the number of neurons"));
        }
        SpikeRaster::from_bits(neurons, self.n, self.bits.clone()).validated()
    }

    fn validated(self) -> Result<Self> {
        let mut seen = self.neurons.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("duplicate neuron id in raster"));
        }
        Ok(self)
    }
}
