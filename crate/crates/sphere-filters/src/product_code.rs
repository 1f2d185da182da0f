//! Random product codes: the structured family of filter axes.
//!
//! A code is the Cartesian product `C = C_1 x ... x C_m` of `m` subcodes,
//! each holding `b` independent uniform unit vectors in `R^{d_pad/m}`. The
//! full code word for an index tuple `(j_1, ..., j_m)` is the concatenation
//! `(1/sqrt(m)) (c_{1,j_1}, ..., c_{m,j_m})`, a unit vector in `R^{d_pad}`.
//! The product structure is what lets the decoder enumerate only the code
//! words whose inner product with a target lies in a given range, instead of
//! scanning all `t = b^m` of them.
//!
//! Dimensions not divisible by `m` are zero-padded to the least multiple
//! `d_pad >= d`; since every stored point and query receives identical
//! padding, no angle between data vectors changes.

use crate::error::{Error, Result};
use crate::sphere_geometry::{sample_unit_vector, UnitVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest supported code size; bucket ordinals must fit comfortably in u64.
const MAX_CODE_SIZE: u128 = 1 << 62;

/// Default number of blocks for dimension `d`: `ceil(ln^2 d)` clamped to
/// `[1, d]`, so that `b = t^{1/m}` stays sub-polynomial in realistic setups.
pub fn default_m(d: u32) -> u32 {
    if d == 0 {
        return 1;
    }
    let l = (d as f64).ln();
    let m = (l * l).ceil() as u32;
    m.clamp(1, d)
}

/// Smallest integer `b >= 1` with `b^m >= t_min`, computed exactly (the
/// floating-point root is only a starting guess; integer comparisons decide).
pub(crate) fn smallest_base(t_min: u64, m: u32) -> u64 {
    debug_assert!(t_min >= 1 && m >= 1);
    let mut b = (t_min as f64).powf(1.0 / m as f64).round().max(1.0) as u64;
    while b > 1 && checked_pow(b - 1, m).is_some_and(|p| p >= t_min as u128) {
        b -= 1;
    }
    while checked_pow(b, m).is_none_or(|p| p < t_min as u128) {
        b += 1;
    }
    b
}

fn checked_pow(base: u64, exp: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
        if acc > u128::MAX / 2 {
            return None;
        }
    }
    Some(acc)
}

/// An index tuple identifying one code word: `m` entries, each in `[0, b)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodeIndex(pub Vec<u32>);

impl CodeIndex {
    /// The per-block indices.
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

/// The sampled product code. Immutable after construction; fully determined
/// by the `(d, m, b, seed)` quadruple, which is all that persistence stores.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCode {
    d: u32,
    d_pad: u32,
    m: u32,
    block_dim: u32,
    b: u32,
    seed: u64,
    /// Flat storage: block `k`, word `j` occupies
    /// `[(k*b + j)*block_dim, (k*b + j + 1)*block_dim)`.
    words: Vec<f64>,
}

impl ProductCode {
    /// Samples a code with at least `t_min` code words, using `m` blocks:
    /// `b` is the smallest integer with `b^m >= t_min`. Deterministic for a
    /// fixed `(d, t_min, m, seed)`.
    pub fn sample(d: u32, t_min: u64, m: u32, seed: u64) -> Result<Self> {
        if t_min < 1 {
            return Err(Error::InvalidParameter(
                "requested code size must be at least 1".to_string(),
            ));
        }
        let b = smallest_base(t_min, m);
        if b > u32::MAX as u64 {
            return Err(Error::FilterCountOverflow(t_min as u128));
        }
        Self::from_parts(d, m, b as u32, seed)
    }

    /// Rebuilds a code from its defining quadruple (used by persistence).
    /// The RNG stream is consumed in a fixed order — block by block, word by
    /// word — so equal quadruples give bitwise-equal codes.
    pub fn from_parts(d: u32, m: u32, b: u32, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "code dimension d = {d} must be at least 2"
            )));
        }
        if m < 1 || m > 4096 {
            return Err(Error::InvalidParameter(format!(
                "block count m = {m} must be in [1, 4096]"
            )));
        }
        if b < 1 {
            return Err(Error::InvalidParameter(
                "per-block code size b must be at least 1".to_string(),
            ));
        }
        let t = checked_pow(b as u64, m).filter(|&t| t <= MAX_CODE_SIZE);
        let Some(_) = t else {
            return Err(Error::FilterCountOverflow(
                checked_pow(b as u64, m).unwrap_or(u128::MAX),
            ));
        };
        let d_pad = d.div_ceil(m) * m;
        let block_dim = d_pad / m;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words = Vec::with_capacity(m as usize * b as usize * block_dim as usize);
        for _ in 0..m {
            for _ in 0..b {
                let w = sample_unit_vector(block_dim, &mut rng)?;
                words.extend_from_slice(w.as_slice());
            }
        }
        Ok(ProductCode {
            d,
            d_pad,
            m,
            block_dim,
            b,
            seed,
            words,
        })
    }

    /// Original (unpadded) dimension.
    pub fn d(&self) -> u32 {
        self.d
    }

    /// Padded dimension `m * block_dim`.
    pub fn d_pad(&self) -> u32 {
        self.d_pad
    }

    /// Number of blocks.
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Per-block code size.
    pub fn b(&self) -> u32 {
        self.b
    }

    /// Dimension of each block sphere.
    pub fn block_dim(&self) -> u32 {
        self.block_dim
    }

    /// RNG seed the code was sampled from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total number of code words, `b^m`.
    pub fn t(&self) -> u64 {
        checked_pow(self.b as u64, self.m).expect("validated at construction") as u64
    }

    /// The unscaled block word `c_{k,j}`.
    pub fn block_word(&self, k: u32, j: u32) -> &[f64] {
        assert!(k < self.m && j < self.b, "block word index out of range");
        let start = (k as usize * self.b as usize + j as usize) * self.block_dim as usize;
        &self.words[start..start + self.block_dim as usize]
    }

    /// The full code word for an index tuple: blocks concatenated and scaled
    /// by `1/sqrt(m)`, a unit vector in `R^{d_pad}`.
    pub fn codeword(&self, idx: &CodeIndex) -> Result<UnitVector> {
        self.check_index(idx)?;
        let scale = 1.0 / (self.m as f64).sqrt();
        let mut v = Vec::with_capacity(self.d_pad as usize);
        for (k, &j) in idx.0.iter().enumerate() {
            for &x in self.block_word(k as u32, j) {
                v.push(scale * x);
            }
        }
        UnitVector::new(v)
    }

    fn check_index(&self, idx: &CodeIndex) -> Result<()> {
        if idx.0.len() != self.m as usize {
            return Err(Error::DimensionMismatch {
                left: idx.0.len(),
                right: self.m as usize,
            });
        }
        if let Some(&j) = idx.0.iter().find(|&&j| j >= self.b) {
            return Err(Error::InvalidParameter(format!(
                "block index {j} out of range for b = {}",
                self.b
            )));
        }
        Ok(())
    }

    /// All blockwise scores of a target vector, sorted for the decoder.
    ///
    /// The target may have any dimension up to `d_pad`; missing coordinates
    /// are treated as zero (the padding convention). Score of word `j` in
    /// block `k` is `<c_{k,j}, target_k> / sqrt(m)`, so the sum over blocks
    /// of an index tuple's scores is the full inner product with the code
    /// word.
    pub fn block_scores(&self, target: &UnitVector) -> Result<BlockScores> {
        if target.dim() > self.d_pad as usize {
            return Err(Error::DimensionMismatch {
                left: target.dim(),
                right: self.d_pad as usize,
            });
        }
        let t = target.as_slice();
        let scale = 1.0 / (self.m as f64).sqrt();
        let bd = self.block_dim as usize;
        let mut entries = Vec::with_capacity(self.m as usize * self.b as usize);
        for k in 0..self.m {
            let t_block_start = k as usize * bd;
            for j in 0..self.b {
                let w = self.block_word(k, j);
                let mut s = 0.0;
                // Zero-padded coordinates contribute nothing.
                let upto = bd.min(t.len().saturating_sub(t_block_start));
                for i in 0..upto {
                    s += w[i] * t[t_block_start + i];
                }
                entries.push((j, s * scale));
            }
            let block = &mut entries[(k as usize * self.b as usize)..];
            block.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        }
        Ok(BlockScores {
            m: self.m,
            b: self.b,
            entries,
        })
    }
}

/// Per-block inner-product scores of one target against a code, each block
/// sorted by decreasing score (ties by ascending word index, making the
/// decoder's enumeration order deterministic).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockScores {
    m: u32,
    b: u32,
    /// Block `k` occupies `entries[k*b .. (k+1)*b]`, sorted descending.
    entries: Vec<(u32, f64)>,
}

impl BlockScores {
    /// Number of blocks.
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Words per block.
    pub fn b(&self) -> u32 {
        self.b
    }

    /// The sorted `(word index, score)` list of block `k`.
    pub fn block(&self, k: u32) -> &[(u32, f64)] {
        assert!(k < self.m, "block index out of range");
        &self.entries[(k as usize * self.b as usize)..((k as usize + 1) * self.b as usize)]
    }

    /// Score of a specific word in a specific block (linear scan; intended
    /// for tests and the brute-force oracle, not hot paths).
    pub fn score_of(&self, k: u32, j: u32) -> f64 {
        self.block(k)
            .iter()
            .find(|&&(jj, _)| jj == j)
            .map(|&(_, s)| s)
            .expect("word index out of range")
    }

    /// Total score of an index tuple, accumulated block by block in order —
    /// the same association order the decoder uses, so the two agree exactly
    /// in floating point.
    pub fn total(&self, idx: &CodeIndex) -> f64 {
        assert_eq!(idx.0.len(), self.m as usize, "index length mismatch");
        let mut s = 0.0;
        for (k, &j) in idx.0.iter().enumerate() {
            s += self.score_of(k as u32, j);
        }
        s
    }
}
