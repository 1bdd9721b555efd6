//! Alphabets, probability vectors, tuple indexing, transcripts and the
//! seeded common-randomness source shared by all modules.

use crate::error::{Error, Result};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normalization tolerance for [`Dist`].
pub const PROB_TOL: f64 = 1e-12;
/// Entries above `-NEG_TOL` are accepted and clamped to zero.
pub const NEG_TOL: f64 = 1e-15;
/// Largest alphabet (or tuple alphabet) the crate will index.
pub const MAX_ALPHABET: u64 = 1 << 20;
/// Default cap on jointly enumerated outcomes.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 16;

/// Cap on jointly enumerated outcomes, overridable through `UCLAB_ENUM_CAP`.
pub fn enum_cap() -> u64 {
    std::env::var("UCLAB_ENUM_CAP")
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_ENUM_CAP)
}

/// Checked `base^exp`, failing with [`Error::Overflow`] above `cap`.
pub fn checked_pow(base: usize, exp: usize, cap: u64, what: &str) -> Result<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc
            .checked_mul(base as u64)
            .filter(|&v| v <= cap)
            .ok_or_else(|| Error::Overflow {
                what: what.to_string(),
                cap,
            })?;
    }
    Ok(acc)
}

/// A finite alphabet `{0, .., size-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size as u64 > MAX_ALPHABET {
            return Err(Error::InvalidAlphabet(size));
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn check(&self, symbol: usize) -> Result<()> {
        if symbol < self.size {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol,
                size: self.size,
            })
        }
    }
}

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    /// Validates `p` (nonnegative, sums to one within [`PROB_TOL`]).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        validate_dist(p)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty alphabet");
        Dist {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, at: usize) -> Self {
        assert!(at < n);
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Dist { probs }
    }

    /// Normalizes a nonnegative weight vector.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptyDist);
        }
        if let Some((i, &v)) = w.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
            return Err(Error::NegativeMass { index: i, value: v });
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::NotNormalized { sum: total });
        }
        Ok(Dist {
            probs: w.iter().map(|v| v / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Returns a [`Dist`] iff `p` is nonnegative and sums to one within 1e-12.
pub fn validate_dist(mut p: Vec<f64>) -> Result<Dist> {
    if p.is_empty() {
        return Err(Error::EmptyDist);
    }
    for (i, v) in p.iter_mut().enumerate() {
        if v.is_nan() || *v < -NEG_TOL {
            return Err(Error::NegativeMass { index: i, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::NotNormalized { sum });
    }
    Ok(Dist { probs: p })
}

/// Sum of absolute differences between two distributions on the same alphabet.
pub fn l1_distance(p: &Dist, q: &Dist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(l1(p.probs(), q.probs()))
}

/// Unchecked L1 distance between equally long slices.
pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Bijection between `k`-tuples over an alphabet and `0..size^k`,
/// most-significant symbol first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleCodec {
    base: usize,
    k: usize,
    count: usize,
}

impl TupleCodec {
    pub fn new(k: usize, alphabet: Alphabet) -> Result<Self> {
        Self::with_cap(k, alphabet, MAX_ALPHABET)
    }

    pub fn with_cap(k: usize, alphabet: Alphabet, cap: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgs("tuple length must be positive".into()));
        }
        let count = checked_pow(alphabet.size(), k, cap, "tuple alphabet")? as usize;
        Ok(TupleCodec {
            base: alphabet.size(),
            k,
            count,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Number of tuples, `base^k`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn index_of(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "tuple of length {} for codec of length {}",
                tuple.len(),
                self.k
            )));
        }
        let mut idx = 0usize;
        for &s in tuple {
            if s >= self.base {
                return Err(Error::SymbolOutOfRange {
                    symbol: s,
                    size: self.base,
                });
            }
            idx = idx * self.base + s;
        }
        Ok(idx)
    }

    pub fn tuple_of(&self, index: usize) -> Result<Vec<usize>> {
        let mut out = vec![0; self.k];
        self.tuple_into(index, &mut out)?;
        Ok(out)
    }

    pub fn tuple_into(&self, mut index: usize, out: &mut [usize]) -> Result<()> {
        if index >= self.count {
            return Err(Error::SymbolOutOfRange {
                symbol: index,
                size: self.count,
            });
        }
        for slot in out.iter_mut().rev() {
            *slot = index % self.base;
            index /= self.base;
        }
        Ok(())
    }
}

/// Realized input/output sequence of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

impl Transcript {
    pub fn new(x: Vec<usize>, y: Vec<usize>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "transcript with {} inputs and {} outputs",
                x.len(),
                y.len()
            )));
        }
        Ok(Transcript { x, y })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn push(&mut self, x: usize, y: usize) {
        self.x.push(x);
        self.y.push(y);
    }

    pub fn validate(&self, inputs: Alphabet, outputs: Alphabet) -> Result<()> {
        self.x.iter().try_for_each(|&s| inputs.check(s))?;
        self.y.iter().try_for_each(|&s| outputs.check(s))
    }
}

/// SplitMix64 finalizer; the stateless mixing step behind stream ids and
/// common-randomness lookups.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a list of labels into one stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5851_f42d_4c95_7f2d, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Seeded counter-based generator: `(seed, stream)` fully determines the draws.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomSource { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh source sharing this seed on a stream derived from `labels`.
    pub fn fork(&self, labels: &[u64]) -> RandomSource {
        let mut parts = Vec::with_capacity(labels.len() + 1);
        parts.push(self.stream);
        parts.extend_from_slice(labels);
        RandomSource::new(self.seed, stream_id(&parts))
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Index drawn from `weights` (need not be normalized).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.unit() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        weights
            .iter()
            .rposition(|&w| w > 0.0)
            .unwrap_or(weights.len() - 1)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand_chacha::rand_core::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
