//! Context counting: `N(w, a)` tallies for a target neuron, the admissible
//! context set and empirical transition probabilities.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::model::{NetworkSpec, SpikeRaster};
use crate::Scalar;

/// A local past `w`: `ell` time rows over the region's other neurons.
///
/// Bits are packed row-major in (time, neuron) order. Bit 0 is the oldest
/// row (lag `ell`) and the first non-target neuron; rows run forward to lag 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContextKey {
    ell: u32,
    width: u32,
    words: SmallVec<[u64; 2]>,
}

impl ContextKey {
    pub fn from_bits<I: IntoIterator<Item = bool>>(ell: usize, width: usize, bits: I) -> Self {
        let len = ell * width;
        let mut words: SmallVec<[u64; 2]> = SmallVec::from_elem(0, len.div_ceil(64));
        let mut count = 0;
        for (k, b) in bits.into_iter().enumerate() {
            assert!(k < len, "too many bits for context of length {ell} x {width}");
            if b {
                words[k / 64] |= 1 << (k % 64);
            }
            count += 1;
        }
        assert_eq!(count, len, "context needs {len} bits");
        ContextKey { ell: ell as u32, width: width as u32, words }
    }

    /// Key made of bits `start..start + ell * width` of a packed bit stream.
    fn from_stream(ell: usize, width: usize, stream: &[u64], start: usize) -> Self {
        let len = ell * width;
        let n_words = len.div_ceil(64);
        let (first, shift) = (start / 64, start % 64);
        let mut words: SmallVec<[u64; 2]> = SmallVec::with_capacity(n_words);
        for k in 0..n_words {
            let lo = stream[first + k] >> shift;
            let hi = match (shift, stream.get(first + k + 1)) {
                (0, _) | (_, None) => 0,
                (_, Some(&next)) => next << (64 - shift),
            };
            words.push(lo | hi);
        }
        if !len.is_multiple_of(64) {
            words[n_words - 1] &= (1u64 << (len % 64)) - 1;
        }
        ContextKey { ell: ell as u32, width: width as u32, words }
    }

    /// Parses a 0/1 string such as `"0110"`.
    pub fn parse(ell: usize, width: usize, s: &str) -> Result<Self> {
        if s.len() != ell * width {
            return Err(Error::param(format!(
                "context string of length {} does not match ell = {ell}, width = {width}",
                s.len()
            )));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(format!("non-binary character {other:?} in context"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ContextKey::from_bits(ell, width, bits))
    }

    /// Past length `|w|`.
    pub fn ell(&self) -> usize {
        self.ell as usize
    }

    /// Number of non-target neurons per row.
    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn len_bits(&self) -> usize {
        self.ell() * self.width()
    }

    #[inline]
    pub fn bit(&self, k: usize) -> bool {
        (self.words[k / 64] >> (k % 64)) & 1 == 1
    }

    /// Value of neuron column `col` at row `row` (row 0 is lag `ell`).
    pub fn cell(&self, row: usize, col: usize) -> bool {
        self.bit(row * self.width() + col)
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len_bits()).map(|k| self.bit(k))
    }

    /// Same context with neuron column `col` removed from every row.
    pub fn without_column(&self, col: usize) -> ContextKey {
        let w = self.width();
        let bits = (0..self.len_bits()).filter(|k| k % w != col).map(|k| self.bit(k));
        ContextKey::from_bits(self.ell(), w - 1, bits)
    }
}

impl fmt::Display for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Ord for ContextKey {
    /// By past length, then lexicographically on the bit string.
    fn cmp(&self, other: &Self) -> Ordering {
        self.ell.cmp(&other.ell).then(self.width.cmp(&other.width)).then_with(|| self.bits().cmp(other.bits()))
    }
}

impl PartialOrd for ContextKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `(N(w, 0), N(w, 1))`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub n0: u64,
    pub n1: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.n0 + self.n1
    }
}

/// Occurrence counts of every observed context for one target neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextTable {
    target: usize,
    region: Vec<usize>,
    n: usize,
    counts: HashMap<ContextKey, Counts>,
}

impl ContextTable {
    /// Table from explicit counts; keys must have width `|region| - 1`.
    pub fn from_counts<I>(target: usize, region: Vec<usize>, n: usize, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ContextKey, Counts)>,
    {
        if !region.contains(&target) {
            return Err(Error::TargetNotInRegion { target });
        }
        let width = region.len() - 1;
        let mut map = HashMap::new();
        for (k, c) in counts {
            if k.width() != width {
                return Err(Error::param(format!("context width {} does not match region", k.width())));
            }
            let e: &mut Counts = map.entry(k).or_default();
            e.n0 += c.n0;
            e.n1 += c.n1;
        }
        Ok(ContextTable { target, region, n, counts: map })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Sampling region `F`, in raster column order.
    pub fn region(&self) -> &[usize] {
        &self.region
    }

    /// Neurons of `F` other than the target, in key column order.
    pub fn others(&self) -> impl Iterator<Item = usize> + '_ {
        self.region.iter().copied().filter(move |&k| k != self.target)
    }

    /// Key column of neuron `j`, if `j` is a non-target member of the region.
    pub fn column_of(&self, j: usize) -> Option<usize> {
        self.others().position(|k| k == j)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, key: &ContextKey) -> Counts {
        self.counts.get(key).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContextKey, &Counts)> {
        self.counts.iter()
    }

    /// Entries ordered by key.
    pub fn sorted(&self) -> Vec<(&ContextKey, Counts)> {
        let mut v: Vec<_> = self.counts.iter().map(|(k, c)| (k, *c)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Sum of `N(w)` over every key.
    pub fn total(&self) -> u64 {
        self.counts.values().map(Counts::total).sum()
    }
}

/// Counts every context of `target` in one pass over the raster.
///
/// At time `t` the target's previous spike fixes the only eligible past
/// length `ell`, so each `t` adds to at most one key.
pub fn count_contexts(raster: &SpikeRaster, target: usize) -> Result<ContextTable> {
    count_contexts_capped(raster, target, None)
}

/// As [`count_contexts`], skipping contexts longer than `max_ell`.
pub fn count_contexts_capped(raster: &SpikeRaster, target: usize, max_ell: Option<usize>) -> Result<ContextTable> {
    let col = raster.column_of(target).ok_or(Error::NeuronNotInRaster(target))?;
    let n = raster.n();
    if n < 3 {
        return Err(Error::param(format!("sample length n = {n} must be at least 3")));
    }
    let others: Vec<usize> = (0..raster.width()).filter(|&c| c != col).collect();
    let width = others.len();
    let cap = max_ell.unwrap_or(n - 2).min(n - 2);

    // the other neurons' spikes packed in key order; row s starts at bit (s - 1) * width
    let mut stream = vec![0u64; (n * width).div_ceil(64)];
    for s in 1..=n {
        let row = raster.row(s);
        for (k, &c) in others.iter().enumerate() {
            if row[c] == 1 {
                let bit = (s - 1) * width + k;
                stream[bit / 64] |= 1 << (bit % 64);
            }
        }
    }

    let mut counts: HashMap<ContextKey, Counts> = HashMap::new();
    // last spike of the target strictly before t, inside the sample
    let mut prev_spike: Option<usize> = None;
    for t in 1..=n {
        if let Some(last) = prev_spike {
            let ell = t - 1 - last;
            if ell >= 1 && ell <= cap {
                let key = ContextKey::from_stream(ell, width, &stream, (t - ell - 1) * width);
                let e = counts.entry(key).or_default();
                if raster.get(t, col) == 1 {
                    e.n1 += 1;
                } else {
                    e.n0 += 1;
                }
            }
        }
        if raster.get(t, col) == 1 {
            prev_spike = Some(t);
        }
    }
    Ok(ContextTable { target, region: raster.neurons().to_vec(), n, counts })
}

pub(crate) fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi < 0.5 {
        Ok(())
    } else {
        Err(Error::param(format!("xi = {xi} must lie in (0, 1/2)")))
    }
}

/// `n^(1/2 + xi)`, the occurrence count a context needs to be admissible.
pub fn admissibility_threshold(n: usize, xi: f64) -> f64 {
    (n as f64).powf(0.5 + xi)
}

/// Longest past length that can still reach the admissibility threshold:
/// a context of length `ell` occurs at most `n - ell - 1` times.
pub fn max_admissible_ell(n: usize, xi: f64) -> usize {
    let bound = n as f64 - 1.0 - admissibility_threshold(n, xi);
    if bound < 1.0 {
        0
    } else {
        bound.floor() as usize
    }
}

/// Contexts observed at least `n^(1/2 + xi)` times, in key order.
pub fn admissible_set(table: &ContextTable, xi: f64) -> Result<Vec<ContextKey>> {
    check_xi(xi)?;
    let threshold = admissibility_threshold(table.n(), xi);
    let mut keys: Vec<ContextKey> =
        table.iter().filter(|(_, c)| c.total() as f64 >= threshold).map(|(k, _)| k.clone()).collect();
    keys.sort();
    Ok(keys)
}

/// `N(w, 1) / N(w)`; undefined when `w` never occurred.
pub fn empirical_prob<T: Scalar>(table: &ContextTable, key: &ContextKey) -> Result<T> {
    let c = table.get(key);
    if c.total() == 0 {
        return Err(Error::UndefinedProbability);
    }
    Ok(T::lit(c.n1 as f64) / T::lit(c.total() as f64))
}

/// Exact `p_i(1 | w)` for a context over `region \ {target}`, valid when
/// every presynaptic neuron of `target` lies in the region.
pub fn true_transition_prob<T: Scalar>(
    spec: &NetworkSpec<T>,
    target: usize,
    region: &[usize],
    key: &ContextKey,
) -> Result<T> {
    let others: Vec<usize> = region.iter().copied().filter(|&k| k != target).collect();
    if key.width() != others.len() {
        return Err(Error::param("context width does not match the region"));
    }
    let ell = key.ell();
    let mut u = T::zero();
    for j in spec.true_neighborhood(target) {
        let col = others.iter().position(|&k| k == j).ok_or(Error::MissingPresynaptic { presynaptic: j, target })?;
        let g = spec.pulse(j);
        let mut drive = T::zero();
        for row in 0..ell {
            if key.cell(row, col) {
                drive = drive + g.eval(ell - row);
            }
        }
        u = u + spec.weight(j, target) * drive;
    }
    Ok(spec.rate(target).eval(u))
}
