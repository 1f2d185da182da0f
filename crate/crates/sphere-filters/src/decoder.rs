//! Output-sensitive enumeration of code words by inner-product interval.
//!
//! Given the sorted per-block scores of a target (see
//! [`ProductCode::block_scores`]), the decoder walks the depth-`m` block tree
//! and reports exactly the index tuples whose total score lies in a requested
//! range, without touching the vast majority of the `b^m` code words.
//!
//! Pruning is sound in the only orientation that works with descending
//! sorted scores: a subtree with partial sum `s` after `k` blocks can still
//!
//! * reach above the lower bound only if `s + suffix_max_k` does, where
//!   `suffix_max_k` sums the per-block *maxima* of the remaining blocks, and
//! * stay at or below the upper bound only if `s + suffix_min_k` does, with
//!   the per-block *minima*.
//!
//! Both conditions are monotone in the sorted child score, so the live
//! children of any node form a contiguous range found by two binary
//! searches. At the leaves the suffix terms vanish and the very same
//! comparisons become the exact membership test, which is why the decoder
//! agrees bit-for-bit with brute-force enumeration.

use crate::error::{Error, Result};
use crate::product_code::{BlockScores, CodeIndex, ProductCode};
use crate::sphere_geometry::UnitVector;

/// Per-level pruning bounds: `suffix_max[k]` / `suffix_min[k]` are the sums
/// of the blockwise maximum / minimum scores over blocks `k..m`, with the
/// convention `suffix_max[m] = suffix_min[m] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PruningBounds {
    pub suffix_max: Vec<f64>,
    pub suffix_min: Vec<f64>,
}

impl PruningBounds {
    /// Precomputes the suffix bounds of sorted block scores.
    pub fn new(scores: &BlockScores) -> Self {
        let m = scores.m() as usize;
        let b = scores.b() as usize;
        let mut suffix_max = vec![0.0; m + 1];
        let mut suffix_min = vec![0.0; m + 1];
        for k in (0..m).rev() {
            let block = scores.block(k as u32);
            suffix_max[k] = block[0].1 + suffix_max[k + 1];
            suffix_min[k] = block[b - 1].1 + suffix_min[k + 1];
        }
        PruningBounds {
            suffix_max,
            suffix_min,
        }
    }
}

/// Work counters from one decoding pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeCost {
    /// Tree nodes expanded (root plus every live child descended into).
    pub visited: u64,
    /// Index tuples reported.
    pub emitted: u64,
}

/// One pending node on the explicit DFS stack: the contiguous live range
/// `[next, end)` of its children in sorted order, and its prefix sum.
struct Frame {
    level: u32,
    next: u32,
    end: u32,
    prefix: f64,
}

/// Core tree walk shared by all decode entry points and by the filter index.
///
/// Enumerates index tuples whose total score `s` satisfies `s > low`
/// (`s >= low` when `inclusive_low`) and `s <= high`; calls `on_leaf` with
/// the tuple of original word indices for each hit. `high = +inf` expresses
/// a pure lower-bound decode. Returns the work counters.
///
/// The walk order is deterministic: children are taken in descending score
/// order (ties already broken by ascending word index during sorting).
pub fn walk_interval<F: FnMut(&[u32])>(
    scores: &BlockScores,
    bounds: &PruningBounds,
    low: f64,
    high: f64,
    inclusive_low: bool,
    mut on_leaf: F,
) -> DecodeCost {
    let m = scores.m();
    let mut cost = DecodeCost {
        visited: 1, // the root is always examined
        emitted: 0,
    };
    let passes_low = |x: f64| if inclusive_low { x >= low } else { x > low };

    let mut path = vec![0u32; m as usize];
    let mut stack: Vec<Frame> = Vec::with_capacity(m as usize);
    let (next, end) = live_child_range(scores, bounds, 0, 0.0, &passes_low, high);
    stack.push(Frame {
        level: 0,
        next,
        end,
        prefix: 0.0,
    });

    while let Some(frame) = stack.last_mut() {
        if frame.next >= frame.end {
            stack.pop();
            continue;
        }
        let level = frame.level;
        let (word, score) = scores.block(level)[frame.next as usize];
        frame.next += 1;
        let sum = frame.prefix + score;
        path[level as usize] = word;
        cost.visited += 1;
        if level + 1 == m {
            // Leaf: the live conditions with zero suffixes are exactly the
            // membership test, so every consumed leaf is a hit.
            cost.emitted += 1;
            on_leaf(&path);
        } else {
            let (next, end) = live_child_range(scores, bounds, level + 1, sum, &passes_low, high);
            stack.push(Frame {
                level: level + 1,
                next,
                end,
                prefix: sum,
            });
        }
    }
    cost
}

/// Live children of a node at `level` with prefix sum `prefix`: the sorted
/// positions `j` whose score `d_j` satisfies both subtree conditions. Both
/// predicates are monotone along the descending sort, so the range is found
/// with two binary searches.
fn live_child_range<P: Fn(f64) -> bool>(
    scores: &BlockScores,
    bounds: &PruningBounds,
    level: u32,
    prefix: f64,
    passes_low: &P,
    high: f64,
) -> (u32, u32) {
    let block = scores.block(level);
    let suffix_max = bounds.suffix_max[level as usize + 1];
    let suffix_min = bounds.suffix_min[level as usize + 1];
    // Scores descend, so "can still exceed the lower bound" holds on a
    // prefix of the block...
    let end = block.partition_point(|&(_, d)| passes_low(prefix + d + suffix_max)) as u32;
    // ...and "already overshoots the upper bound" holds on a (possibly
    // empty) shorter prefix; the live range is what lies between.
    let next = block.partition_point(|&(_, d)| prefix + d + suffix_min > high) as u32;
    (next.min(end), end)
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_nan() {
        return Err(Error::InvalidParameter(format!("{name} must not be NaN")));
    }
    Ok(())
}

fn collect_walk(
    code: &ProductCode,
    target: &UnitVector,
    low: f64,
    high: f64,
    inclusive_low: bool,
) -> Result<(Vec<CodeIndex>, DecodeCost)> {
    let scores = code.block_scores(target)?;
    let bounds = PruningBounds::new(&scores);
    let mut out = Vec::new();
    let cost = walk_interval(&scores, &bounds, low, high, inclusive_low, |path| {
        out.push(CodeIndex(path.to_vec()));
    });
    Ok((out, cost))
}

/// All index tuples whose code word has inner product `>= alpha` with the
/// target (ties at exactly `alpha` included). Upper bound is `+inf` rather
/// than a nominal `1` so the `>= alpha` contract holds exactly even when
/// rounding pushes a score a few ulps above one.
pub fn decode_above(code: &ProductCode, target: &UnitVector, alpha: f64) -> Result<Vec<CodeIndex>> {
    check_finite("alpha", alpha)?;
    Ok(collect_walk(code, target, alpha, f64::INFINITY, true)?.0)
}

/// All index tuples whose inner product with the target lies in the
/// half-open interval `(alpha_low, alpha_high]`.
pub fn decode_interval(
    code: &ProductCode,
    target: &UnitVector,
    alpha_low: f64,
    alpha_high: f64,
) -> Result<Vec<CodeIndex>> {
    check_finite("alpha_low", alpha_low)?;
    check_finite("alpha_high", alpha_high)?;
    if !(alpha_low < alpha_high) {
        return Err(Error::InvalidParameter(format!(
            "interval bounds must satisfy alpha_low < alpha_high (got {alpha_low}, {alpha_high})"
        )));
    }
    Ok(collect_walk(code, target, alpha_low, alpha_high, false)?.0)
}

/// Work counters of `decode_interval` without materializing the output.
pub fn decode_cost(
    code: &ProductCode,
    target: &UnitVector,
    alpha_low: f64,
    alpha_high: f64,
) -> Result<DecodeCost> {
    check_finite("alpha_low", alpha_low)?;
    check_finite("alpha_high", alpha_high)?;
    if !(alpha_low < alpha_high) {
        return Err(Error::InvalidParameter(format!(
            "interval bounds must satisfy alpha_low < alpha_high (got {alpha_low}, {alpha_high})"
        )));
    }
    let scores = code.block_scores(target)?;
    let bounds = PruningBounds::new(&scores);
    Ok(walk_interval(&scores, &bounds, alpha_low, alpha_high, false, |_| {}))
}
