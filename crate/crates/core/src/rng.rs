//! Uniform draws `U_t(j)` addressed by `(seed, t, j)`.
//!
//! Each neuron owns its own ChaCha8 stream keyed by the seed; the `t`-th
//! draw of stream `j` is `U_t(j)`. Any two consumers that share a seed see
//! the same uniforms, whatever order they read them in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ChaCha words consumed per `f64` draw.
const WORDS_PER_DRAW: u128 = 2;

fn stream(seed: u64, neuron: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(neuron as u64);
    rng
}

/// `U_t(neuron)` for `t >= 1`, computed directly.
pub fn uniform_at(seed: u64, t: usize, neuron: usize) -> f64 {
    assert!(t >= 1);
    let mut rng = stream(seed, neuron);
    rng.set_word_pos(WORDS_PER_DRAW * (t as u128 - 1));
    rng.random()
}

/// Sequential reader of the rows `U_t(0..neurons)`, `t = start, start+1, ...`.
pub struct UniformStreams {
    streams: Vec<ChaCha8Rng>,
}

impl UniformStreams {
    pub fn new(seed: u64, neurons: usize) -> Self {
        Self::starting_at(seed, neurons, 1)
    }

    /// Positioned so that the next row read is time `start`.
    pub fn starting_at(seed: u64, neurons: usize, start: usize) -> Self {
        assert!(start >= 1);
        let streams = (0..neurons)
            .map(|j| {
                let mut rng = stream(seed, j);
                rng.set_word_pos(WORDS_PER_DRAW * (start as u128 - 1));
                rng
            })
            .collect();
        UniformStreams { streams }
    }

    pub fn next_row(&mut self, out: &mut [f64]) {
        for (u, rng) in out.iter_mut().zip(&mut self.streams) {
            *u = rng.random();
        }
    }
}
