//! Brute-force reference implementations.
//!
//! Everything here is intentionally naive: a linear-scan nearest neighbor
//! and a full-enumeration decoder. They are the ground truth against which
//! the fast paths (tree decoding, bucketed queries) are validated, so they
//! must be simple enough to be obviously correct.

use crate::error::{Error, Result};
use crate::product_code::{CodeIndex, ProductCode};
use crate::sphere_geometry::{angle_between, Angle, UnitVector};

/// Default refusal threshold for brute-force code enumeration.
pub const DEFAULT_BRUTE_CAP: u64 = 1 << 20;

/// Exact nearest neighbor by linear scan: the dataset index minimizing the
/// angle to `query`, ties broken toward the smallest index.
pub fn linear_nn(dataset: &[UnitVector], query: &UnitVector) -> Result<(usize, Angle)> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter(
            "linear_nn requires a non-empty dataset".to_string(),
        ));
    }
    let mut best_id = 0usize;
    let mut best_dot = f64::NEG_INFINITY;
    for (id, p) in dataset.iter().enumerate() {
        if p.dim() != query.dim() {
            return Err(Error::DimensionMismatch {
                left: p.dim(),
                right: query.dim(),
            });
        }
        let dot = p.dot(query);
        // Strictly-greater keeps the earliest id on exact ties.
        if dot > best_dot {
            best_dot = dot;
            best_id = id;
        }
    }
    Ok((best_id, angle_between(&dataset[best_id], query)?))
}

/// Full-enumeration interval decode: every index tuple whose total blockwise
/// score lies in `(alpha_low, alpha_high]`, by scanning all `b^m` tuples.
/// Refuses codes larger than [`DEFAULT_BRUTE_CAP`]; see
/// [`brute_decode_with_cap`] to override.
pub fn brute_decode(
    code: &ProductCode,
    target: &UnitVector,
    alpha_low: f64,
    alpha_high: f64,
) -> Result<Vec<CodeIndex>> {
    brute_decode_with_cap(code, target, alpha_low, alpha_high, DEFAULT_BRUTE_CAP)
}

/// [`brute_decode`] with an explicit size cap.
pub fn brute_decode_with_cap(
    code: &ProductCode,
    target: &UnitVector,
    alpha_low: f64,
    alpha_high: f64,
    cap: u64,
) -> Result<Vec<CodeIndex>> {
    if !(alpha_low < alpha_high) {
        return Err(Error::InvalidParameter(format!(
            "interval bounds must satisfy alpha_low < alpha_high (got {alpha_low}, {alpha_high})"
        )));
    }
    enumerate(code, target, alpha_low, alpha_high, false, cap)
}

/// Full-enumeration threshold decode: every tuple with score `>= alpha`
/// (ties included), mirroring the fast `decode_above`.
pub fn brute_decode_above(
    code: &ProductCode,
    target: &UnitVector,
    alpha: f64,
) -> Result<Vec<CodeIndex>> {
    enumerate(code, target, alpha, f64::INFINITY, true, DEFAULT_BRUTE_CAP)
}

fn enumerate(
    code: &ProductCode,
    target: &UnitVector,
    low: f64,
    high: f64,
    inclusive_low: bool,
    cap: u64,
) -> Result<Vec<CodeIndex>> {
    let t = code.t();
    if t > cap {
        return Err(Error::BruteForceTooLarge { t, cap });
    }
    let scores = code.block_scores(target)?;
    let m = code.m() as usize;
    let b = code.b();
    // Raw-index score table so the per-tuple sum uses exactly the same
    // blockwise values (and accumulation order) as the tree decoder.
    let mut raw = vec![0.0f64; m * b as usize];
    for k in 0..code.m() {
        for &(j, s) in scores.block(k) {
            raw[k as usize * b as usize + j as usize] = s;
        }
    }
    let mut out = Vec::new();
    let mut idx = vec![0u32; m];
    for ordinal in 0..t {
        let mut rest = ordinal;
        for k in (0..m).rev() {
            idx[k] = (rest % b as u64) as u32;
            rest /= b as u64;
        }
        let mut s = 0.0;
        for (k, &j) in idx.iter().enumerate() {
            s += raw[k * b as usize + j as usize];
        }
        let lo_ok = if inclusive_low { s >= low } else { s > low };
        if lo_ok && s <= high {
            out.push(CodeIndex(idx.clone()));
        }
    }
    Ok(out)
}
