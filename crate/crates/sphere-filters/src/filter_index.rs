//! The mutable near-neighbor data structure: `t` filter buckets over a
//! random product code.
//!
//! Every stored point `p` lives in exactly the buckets whose code words
//! score at least `alpha_u` against it (its *update set*); a query `q`
//! scans exactly the buckets whose code words score at least `alpha_q`
//! (its *query set*) and compares `q` against the points found there,
//! deduplicated. Both sets are enumerated by the interval decoder, so the
//! per-operation cost is proportional to the number of buckets involved,
//! never to `t`.
//!
//! Only non-empty buckets are stored (`t` routinely exceeds the number of
//! stored entries by orders of magnitude), each bucket keeps its ids
//! sorted ascending, and bucket membership is a pure function of the code
//! and the point set — [`FilterIndex::audit`] recomputes it from scratch
//! and [`FilterIndex::load`] rebuilds it rather than reading it from disk.
//!
//! Concurrency contract: queries take `&self` and are safe to run from
//! many threads at once (statistics are atomic); `insert`/`delete` take
//! `&mut self`, so the borrow checker enforces the single-writer rule.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::decoder::{walk_interval, PruningBounds};
use crate::error::{Error, Result};
use crate::planner::PlanParams;
use crate::product_code::{BlockScores, CodeIndex, ProductCode};
use crate::sphere_geometry::{angle_between, Angle, UnitVector};

const MAGIC: &[u8; 4] = b"SPHI";
const FORMAT_VERSION: u32 = 1;
/// Bucket membership is decided on block-score sums; the audit re-checks
/// it against a plain inner product, whose different summation order can
/// disagree by a few ulps at the threshold.
const AUDIT_SCORE_SLACK: f64 = 1e-9;
/// Upper bound on the serialized plan blob, to fail fast on garbage files.
const MAX_PARAMS_BYTES: u64 = 1 << 24;

/// A bucket's id list. The overwhelmingly common case at realistic scales
/// is a single occupant, which this representation stores without a heap
/// allocation; the multi-occupant vector is boxed so the in-map footprint
/// stays at 16 bytes (reference builds hold tens of millions of buckets).
#[derive(Debug, Clone, PartialEq, Eq)]
enum Bucket {
    One(u64),
    Many(Box<Vec<u64>>),
}

impl Bucket {
    fn ids(&self) -> &[u64] {
        match self {
            Bucket::One(id) => std::slice::from_ref(id),
            Bucket::Many(v) => v,
        }
    }

    fn insert(&mut self, id: u64) {
        match self {
            Bucket::One(existing) => {
                let existing = *existing;
                debug_assert_ne!(existing, id, "duplicate id in bucket");
                let pair = if id < existing {
                    vec![id, existing]
                } else {
                    vec![existing, id]
                };
                *self = Bucket::Many(Box::new(pair));
            }
            Bucket::Many(v) => match v.binary_search(&id) {
                Ok(_) => debug_assert!(false, "duplicate id in bucket"),
                Err(pos) => v.insert(pos, id),
            },
        }
    }

    /// Removes `id`; returns true when the bucket is now empty and should
    /// be dropped from the map.
    fn remove(&mut self, id: u64) -> bool {
        let survivor = match self {
            Bucket::One(existing) => {
                debug_assert_eq!(*existing, id, "id missing from bucket");
                return true;
            }
            Bucket::Many(v) => {
                match v.binary_search(&id) {
                    Ok(pos) => {
                        v.remove(pos);
                    }
                    Err(_) => debug_assert!(false, "id missing from bucket"),
                }
                match v.len() {
                    0 => return true,
                    1 => Some(v[0]),
                    _ => None,
                }
            }
        };
        if let Some(only) = survivor {
            *self = Bucket::One(only);
        }
        false
    }
}

/// Monotone operation counters, updated with relaxed atomics so read-only
/// queries can record work through `&self`.
#[derive(Debug, Default)]
struct Stats {
    inserts: AtomicU64,
    deletes: AtomicU64,
    queries: AtomicU64,
    candidates_scanned: AtomicU64,
    buckets_touched: AtomicU64,
}

/// A point-in-time copy of the operation counters.
///
/// `buckets_touched` accumulates the buckets written by inserts and
/// deletes plus the bucket lookups performed by queries;
/// `candidates_scanned` accumulates deduplicated candidate comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StatsSnapshot {
    pub inserts: u64,
    pub deletes: u64,
    pub queries: u64,
    pub candidates_scanned: u64,
    pub buckets_touched: u64,
}

/// Query behavior switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct QueryOptions {
    /// Scan every candidate and return the overall best instead of
    /// stopping at the first point within the target angle.
    pub exhaustive: bool,
}

/// Outcome of a query.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QueryResult {
    /// Best candidate seen: `(id, angle to the query)`. `None` only when
    /// no candidate collided at all.
    pub best: Option<(u64, Angle)>,
    /// Deduplicated candidates compared against the query.
    pub candidates_examined: u64,
    /// Bucket entries iterated, counting a point once per shared bucket.
    /// This is the raw scan work; `candidates_examined` deduplicates.
    pub entries_scanned: u64,
    /// Decoded bucket ordinals looked up (stored or not).
    pub buckets_visited: u64,
    /// Whether a point at angle `<= target_angle` was found.
    pub found_within_target: bool,
    /// For probed queries: the 0-based schedule interval in which the
    /// accepted point was found. `None` for plain queries and misses.
    pub first_hit_interval: Option<usize>,
}

/// A descending probing sequence `1 = a_0 > a_1 > ... > a_T >= 0`.
///
/// Probe `i` (0-based) covers scores in `(a_{i+1}, a_i]`, except that the
/// first probe is unbounded above and the last includes its lower end, so
/// the probes exactly partition the score set `{s >= a_T}` — running all
/// of them visits precisely the buckets of a plain query at threshold
/// `a_T`, each once.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeSchedule {
    thresholds: Vec<f64>,
}

impl ProbeSchedule {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::InvalidParameter(
                "a probe schedule needs at least two thresholds (one interval)".to_string(),
            ));
        }
        if thresholds[0] != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "a probe schedule must start at exactly 1 (got {})",
                thresholds[0]
            )));
        }
        for pair in thresholds.windows(2) {
            if !(pair[1].is_finite() && pair[1] < pair[0]) {
                return Err(Error::InvalidParameter(format!(
                    "probe thresholds must be finite and strictly decreasing (got {} then {})",
                    pair[0], pair[1]
                )));
            }
        }
        if *thresholds.last().unwrap() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "the final probe threshold must be non-negative (got {})",
                thresholds.last().unwrap()
            )));
        }
        Ok(ProbeSchedule { thresholds })
    }

    /// Evenly spaced schedule from 1 down to `final_threshold` with the
    /// given number of intervals; the final threshold is hit exactly.
    pub fn linear(final_threshold: f64, intervals: usize) -> Result<Self> {
        if intervals < 1 {
            return Err(Error::InvalidParameter(
                "a probe schedule needs at least one interval".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&final_threshold) {
            return Err(Error::InvalidParameter(format!(
                "the final probe threshold {final_threshold} must lie in [0, 1)"
            )));
        }
        let mut thresholds = Vec::with_capacity(intervals + 1);
        for i in 0..intervals {
            thresholds.push(1.0 - (1.0 - final_threshold) * (i as f64 / intervals as f64));
        }
        thresholds.push(final_threshold);
        Self::new(thresholds)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Number of probe intervals (`T`).
    pub fn intervals(&self) -> usize {
        self.thresholds.len() - 1
    }

    pub fn final_threshold(&self) -> f64 {
        *self.thresholds.last().unwrap()
    }
}

/// The filter data structure; see the module docs for the contract.
#[derive(Debug)]
pub struct FilterIndex {
    code: ProductCode,
    params: PlanParams,
    buckets: HashMap<u64, Bucket>,
    points: HashMap<u64, UnitVector>,
    stats: Stats,
}

impl FilterIndex {
    /// Wraps an existing code. The code's shape must match the plan
    /// exactly; the plan supplies the thresholds `alpha_q`/`alpha_u`.
    pub fn new(code: ProductCode, params: PlanParams) -> Result<Self> {
        if code.d() != params.d {
            return Err(Error::DimensionMismatch {
                left: code.d() as usize,
                right: params.d as usize,
            });
        }
        if code.m() != params.m || code.b() != params.b || code.t() != params.t {
            return Err(Error::InvalidParameter(format!(
                "code shape (m = {}, b = {}, t = {}) does not match the plan (m = {}, b = {}, t = {})",
                code.m(),
                code.b(),
                code.t(),
                params.m,
                params.b,
                params.t
            )));
        }
        Ok(FilterIndex {
            code,
            params,
            buckets: HashMap::new(),
            points: HashMap::new(),
            stats: Stats::default(),
        })
    }

    /// Samples a fresh code for the plan and wraps it.
    pub fn from_plan(params: PlanParams, seed: u64) -> Result<Self> {
        let code = ProductCode::from_parts(params.d, params.m, params.b, seed)?;
        Self::new(code, params)
    }

    pub fn params(&self) -> &PlanParams {
        &self.params
    }

    pub fn code(&self) -> &ProductCode {
        &self.code
    }

    /// Number of stored points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of non-empty buckets currently stored.
    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// Total bucket entries (sum of bucket sizes).
    pub fn entry_count(&self) -> u64 {
        self.buckets.values().map(|b| b.ids().len() as u64).sum()
    }

    /// Pre-sizes the hash maps for a bulk load of `additional` points,
    /// using the plan's expected buckets-per-update as the bucket hint.
    pub fn reserve_for_points(&mut self, additional: usize) {
        self.points.reserve(additional);
        if let Ok(per_point) = crate::planner::predicted_update_buckets(&self.params) {
            let hint = (per_point.max(1.0) * additional as f64).min(1e9);
            self.buckets.reserve(hint as usize);
        }
    }

    fn check_dim(&self, v: &UnitVector) -> Result<()> {
        if v.dim() != self.params.d as usize {
            return Err(Error::DimensionMismatch {
                left: v.dim(),
                right: self.params.d as usize,
            });
        }
        Ok(())
    }

    /// Bucket ordinal of an index tuple: its base-`b` evaluation. Fits in
    /// u64 because code construction caps `b^m` at `2^62`.
    fn ordinal_of_path(b: u64, path: &[u32]) -> u64 {
        path.iter().fold(0u64, |acc, &w| acc * b + w as u64)
    }

    fn index_of_ordinal(&self, mut ordinal: u64) -> CodeIndex {
        let m = self.code.m() as usize;
        let b = self.code.b() as u64;
        let mut idx = vec![0u32; m];
        for slot in idx.iter_mut().rev() {
            *slot = (ordinal % b) as u32;
            ordinal /= b;
        }
        CodeIndex(idx)
    }

    fn ordinals_from_walk(
        &self,
        scores: &BlockScores,
        bounds: &PruningBounds,
        low: f64,
        high: f64,
        inclusive_low: bool,
    ) -> Vec<u64> {
        let b = self.code.b() as u64;
        let mut out = Vec::new();
        walk_interval(scores, bounds, low, high, inclusive_low, |path| {
            out.push(Self::ordinal_of_path(b, path));
        });
        out
    }

    fn decode_ordinals_above(&self, target: &UnitVector, alpha: f64) -> Result<Vec<u64>> {
        let scores = self.code.block_scores(target)?;
        let bounds = PruningBounds::new(&scores);
        Ok(self.ordinals_from_walk(&scores, &bounds, alpha, f64::INFINITY, true))
    }

    /// Bucket ordinals a point is (or would be) stored in.
    pub fn update_ordinals(&self, p: &UnitVector) -> Result<Vec<u64>> {
        self.check_dim(p)?;
        self.decode_ordinals_above(p, self.params.alpha_u)
    }

    /// Bucket ordinals a query scans.
    pub fn query_ordinals(&self, q: &UnitVector) -> Result<Vec<u64>> {
        self.check_dim(q)?;
        self.decode_ordinals_above(q, self.params.alpha_q)
    }

    /// Stores `p` under `id` in every bucket of its update set. Returns
    /// the number of buckets touched (= the update set size, exactly).
    pub fn insert(&mut self, id: u64, p: &UnitVector) -> Result<u64> {
        self.check_dim(p)?;
        if self.points.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        let ordinals = self.decode_ordinals_above(p, self.params.alpha_u)?;
        for &ordinal in &ordinals {
            match self.buckets.entry(ordinal) {
                Entry::Occupied(mut slot) => slot.get_mut().insert(id),
                Entry::Vacant(slot) => {
                    slot.insert(Bucket::One(id));
                }
            }
        }
        self.points.insert(id, p.clone());
        let touched = ordinals.len() as u64;
        self.stats.inserts.fetch_add(1, Ordering::Relaxed);
        self.stats.buckets_touched.fetch_add(touched, Ordering::Relaxed);
        Ok(touched)
    }

    /// Removes `id` from every bucket of its update set, dropping buckets
    /// that become empty. Returns the number of buckets touched.
    pub fn delete(&mut self, id: u64) -> Result<u64> {
        let p = self.points.get(&id).cloned().ok_or(Error::UnknownId(id))?;
        let ordinals = self.decode_ordinals_above(&p, self.params.alpha_u)?;
        for &ordinal in &ordinals {
            match self.buckets.get_mut(&ordinal) {
                Some(bucket) => {
                    if bucket.remove(id) {
                        self.buckets.remove(&ordinal);
                    }
                }
                None => debug_assert!(false, "bucket {ordinal} missing during delete"),
            }
        }
        self.points.remove(&id);
        let touched = ordinals.len() as u64;
        self.stats.deletes.fetch_add(1, Ordering::Relaxed);
        self.stats.buckets_touched.fetch_add(touched, Ordering::Relaxed);
        Ok(touched)
    }

    /// Scans the given buckets in order. Returns true on early exit (a
    /// candidate within the target angle was found and `exhaustive` is
    /// off). Candidates are deduplicated across buckets via `seen`.
    #[allow(clippy::too_many_arguments)]
    fn scan_buckets(
        &self,
        ordinals: &[u64],
        q: &UnitVector,
        target: Angle,
        exhaustive: bool,
        seen: &mut HashSet<u64>,
        best: &mut Option<(u64, Angle)>,
        candidates: &mut u64,
        entries: &mut u64,
        buckets: &mut u64,
    ) -> Result<bool> {
        for &ordinal in ordinals {
            *buckets += 1;
            let Some(bucket) = self.buckets.get(&ordinal) else {
                continue;
            };
            for &id in bucket.ids() {
                *entries += 1;
                if !seen.insert(id) {
                    continue;
                }
                *candidates += 1;
                let p = self
                    .points
                    .get(&id)
                    .expect("bucket entry without a stored point");
                let angle = angle_between(q, p)?;
                if best.map_or(true, |(_, cur)| angle.radians() < cur.radians()) {
                    *best = Some((id, angle));
                }
                if !exhaustive && angle.radians() <= target.radians() {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Scans the query set of `q` and returns the first point found at
    /// angle `<= target_angle`, or the best-angle candidate with
    /// `found_within_target = false` if none qualifies.
    pub fn query(&self, q: &UnitVector, target_angle: Angle) -> Result<QueryResult> {
        self.query_with(q, target_angle, QueryOptions::default())
    }

    /// [`FilterIndex::query`] with behavior switches.
    pub fn query_with(
        &self,
        q: &UnitVector,
        target_angle: Angle,
        options: QueryOptions,
    ) -> Result<QueryResult> {
        self.check_dim(q)?;
        let ordinals = self.decode_ordinals_above(q, self.params.alpha_q)?;
        let mut seen = HashSet::new();
        let mut best = None;
        let (mut candidates, mut entries, mut buckets) = (0u64, 0u64, 0u64);
        let hit = self.scan_buckets(
            &ordinals,
            q,
            target_angle,
            options.exhaustive,
            &mut seen,
            &mut best,
            &mut candidates,
            &mut entries,
            &mut buckets,
        )?;
        let found = hit
            || best.is_some_and(|(_, angle)| angle.radians() <= target_angle.radians());
        self.record_query(candidates, buckets);
        Ok(QueryResult {
            best,
            candidates_examined: candidates,
            entries_scanned: entries,
            buckets_visited: buckets,
            found_within_target: found,
            first_hit_interval: None,
        })
    }

    /// Runs the probes of `schedule` in order on one shared block-score
    /// computation, stopping at the first point within the target angle.
    /// With a schedule ending at `alpha_q` this visits exactly the buckets
    /// of [`FilterIndex::query`], each at most once.
    pub fn query_probed(
        &self,
        q: &UnitVector,
        target_angle: Angle,
        schedule: &ProbeSchedule,
    ) -> Result<QueryResult> {
        self.check_dim(q)?;
        let scores = self.code.block_scores(q)?;
        let bounds = PruningBounds::new(&scores);
        let mut seen = HashSet::new();
        let mut best = None;
        let (mut candidates, mut entries, mut buckets) = (0u64, 0u64, 0u64);
        let mut first_hit_interval = None;
        for i in 0..schedule.intervals() {
            let thresholds = schedule.thresholds();
            let high = if i == 0 { f64::INFINITY } else { thresholds[i] };
            let low = thresholds[i + 1];
            let inclusive_low = i + 1 == thresholds.len() - 1;
            let ordinals = self.ordinals_from_walk(&scores, &bounds, low, high, inclusive_low);
            let hit = self.scan_buckets(
                &ordinals,
                q,
                target_angle,
                false,
                &mut seen,
                &mut best,
                &mut candidates,
                &mut entries,
                &mut buckets,
            )?;
            if hit {
                first_hit_interval = Some(i);
                break;
            }
        }
        self.record_query(candidates, buckets);
        Ok(QueryResult {
            best,
            candidates_examined: candidates,
            entries_scanned: entries,
            buckets_visited: buckets,
            found_within_target: first_hit_interval.is_some(),
            first_hit_interval,
        })
    }

    fn record_query(&self, candidates: u64, buckets: u64) {
        self.stats.queries.fetch_add(1, Ordering::Relaxed);
        self.stats
            .candidates_scanned
            .fetch_add(candidates, Ordering::Relaxed);
        self.stats
            .buckets_touched
            .fetch_add(buckets, Ordering::Relaxed);
    }

    pub fn stats(&self) -> StatsSnapshot {
        StatsSnapshot {
            inserts: self.stats.inserts.load(Ordering::Relaxed),
            deletes: self.stats.deletes.load(Ordering::Relaxed),
            queries: self.stats.queries.load(Ordering::Relaxed),
            candidates_scanned: self.stats.candidates_scanned.load(Ordering::Relaxed),
            buckets_touched: self.stats.buckets_touched.load(Ordering::Relaxed),
        }
    }

    fn reset_stats(&mut self) {
        self.stats = Stats::default();
    }

    /// Recomputes every point's update set from scratch and verifies the
    /// bucket map matches it exactly (and that stored entries clear the
    /// score threshold, up to summation-order slack).
    pub fn audit(&self) -> Result<()> {
        let mut ids: Vec<u64> = self.points.keys().copied().collect();
        ids.sort_unstable();
        let mut expected: HashMap<u64, Vec<u64>> = HashMap::with_capacity(self.buckets.len());
        for &id in &ids {
            for ordinal in self.decode_ordinals_above(&self.points[&id], self.params.alpha_u)? {
                expected.entry(ordinal).or_default().push(id);
            }
        }
        if expected.len() != self.buckets.len() {
            return Err(Error::AuditFailure(format!(
                "stored {} non-empty buckets but decoding the point set yields {}",
                self.buckets.len(),
                expected.len()
            )));
        }
        for (ordinal, want) in &expected {
            match self.buckets.get(ordinal) {
                Some(bucket) if bucket.ids() == want.as_slice() => {}
                Some(bucket) => {
                    return Err(Error::AuditFailure(format!(
                        "bucket {ordinal} holds {:?} but decoding yields {:?}",
                        bucket.ids(),
                        want
                    )))
                }
                None => {
                    return Err(Error::AuditFailure(format!(
                        "bucket {ordinal} is missing ({} expected entries)",
                        want.len()
                    )))
                }
            }
        }
        let d_pad = self.code.d_pad() as usize;
        for (&ordinal, bucket) in &self.buckets {
            let word = self.code.codeword(&self.index_of_ordinal(ordinal))?;
            for &id in bucket.ids() {
                let p = &self.points[&id];
                let mut score = 0.0;
                for (x, y) in p.as_slice().iter().zip(&word.as_slice()[..d_pad]) {
                    score += x * y;
                }
                if score < self.params.alpha_u - AUDIT_SCORE_SLACK {
                    return Err(Error::AuditFailure(format!(
                        "bucket {ordinal} holds id {id} at score {score}, below alpha_u = {}",
                        self.params.alpha_u
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializes the code quadruple, the plan, and the point set (ids
    /// ascending, coordinates as little-endian f64). Buckets are derived
    /// state and are not written.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.code.d().to_le_bytes())?;
        w.write_all(&self.code.m().to_le_bytes())?;
        w.write_all(&self.code.b().to_le_bytes())?;
        w.write_all(&self.code.seed().to_le_bytes())?;
        let params = serde_json::to_vec(&self.params)
            .map_err(|e| Error::Io(format!("encoding plan parameters: {e}")))?;
        w.write_all(&(params.len() as u64).to_le_bytes())?;
        w.write_all(&params)?;
        let mut ids: Vec<u64> = self.points.keys().copied().collect();
        ids.sort_unstable();
        w.write_all(&(ids.len() as u64).to_le_bytes())?;
        for id in ids {
            w.write_all(&id.to_le_bytes())?;
            for &x in self.points[&id].as_slice() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`FilterIndex::save`], re-samples the code
    /// from its quadruple, and rebuilds all buckets by decoding the stored
    /// points. Counters start at zero.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::MalformedFile(format!(
                "bad magic {magic:?}; expected {MAGIC:?}"
            )));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::MalformedFile(format!(
                "unsupported index format version {version}"
            )));
        }
        let d = read_u32(&mut r)?;
        let m = read_u32(&mut r)?;
        let b = read_u32(&mut r)?;
        let seed = read_u64(&mut r)?;
        let params_len = read_u64(&mut r)?;
        if params_len > MAX_PARAMS_BYTES {
            return Err(Error::MalformedFile(format!(
                "plan parameter blob of {params_len} bytes is implausibly large"
            )));
        }
        let mut params_buf = vec![0u8; params_len as usize];
        r.read_exact(&mut params_buf)?;
        let params: PlanParams = serde_json::from_slice(&params_buf)
            .map_err(|e| Error::MalformedFile(format!("plan parameters: {e}")))?;
        let code = ProductCode::from_parts(d, m, b, seed)?;
        let mut index = FilterIndex::new(code, params)?;
        let count = read_u64(&mut r)?;
        index.reserve_for_points(count as usize);
        for _ in 0..count {
            let id = read_u64(&mut r)?;
            let mut coords = vec![0.0f64; d as usize];
            for slot in &mut coords {
                *slot = read_f64(&mut r)?;
            }
            let p = UnitVector::new(coords)
                .map_err(|e| Error::MalformedFile(format!("stored point {id}: {e}")))?;
            match index.insert(id, &p) {
                Ok(_) => {}
                Err(Error::DuplicateId(id)) => {
                    return Err(Error::MalformedFile(format!("duplicate stored id {id}")))
                }
                Err(e) => return Err(e),
            }
        }
        index.reset_stats();
        Ok(index)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::decode_above;
    use crate::planner::Regime;
    use crate::sphere_geometry::sample_unit_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_3;

    fn tiny_params(d: u32, m: u32, b: u32, alpha_q: f64, alpha_u: f64) -> PlanParams {
        PlanParams {
            regime: Regime::Sparse,
            n: 64,
            d,
            theta: Angle::from_radians(FRAC_PI_3).unwrap(),
            beta: alpha_q / alpha_u,
            alpha_q,
            alpha_u,
            t: (b as u64).pow(m),
            t_requested: (b as u64).pow(m),
            b,
            m,
            d_pad: d.div_ceil(m) * m,
            rho_q: 0.0,
            rho_u: 0.0,
            kappa: 4.0,
        }
    }

    fn tiny_index(seed: u64) -> FilterIndex {
        let params = tiny_params(8, 2, 12, 0.25, 0.3);
        FilterIndex::from_plan(params, seed).unwrap()
    }

    #[test]
    fn bucket_representation_stays_compact_and_sorted() {
        let mut bucket = Bucket::One(5);
        bucket.insert(2);
        bucket.insert(9);
        assert_eq!(bucket.ids(), &[2, 5, 9]);
        assert!(!bucket.remove(5));
        assert!(!bucket.remove(9));
        assert_eq!(bucket, Bucket::One(2));
        assert!(bucket.remove(2));
    }

    #[test]
    fn insert_then_delete_restores_the_exact_state() {
        let mut index = tiny_index(7);
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for id in 0..50u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(id, &p).unwrap();
        }
        let buckets_before = index.buckets.clone();
        let extra = sample_unit_vector(8, &mut rng).unwrap();
        let touched_in = index.insert(999, &extra).unwrap();
        let touched_out = index.delete(999).unwrap();
        assert_eq!(touched_in, touched_out);
        assert_eq!(index.buckets, buckets_before);
        assert_eq!(index.len(), 50);
        index.audit().unwrap();
    }

    #[test]
    fn buckets_touched_equals_decoded_set_size() {
        let mut index = tiny_index(8);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for id in 0..40u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            let expected = decode_above(index.code(), &p, index.params().alpha_u)
                .unwrap()
                .len() as u64;
            assert_eq!(index.insert(id, &p).unwrap(), expected);
            assert_eq!(index.update_ordinals(&p).unwrap().len() as u64, expected);
        }
        for id in 0..40u64 {
            let p = index.points[&id].clone();
            let expected = decode_above(index.code(), &p, index.params().alpha_u)
                .unwrap()
                .len() as u64;
            assert_eq!(index.delete(id).unwrap(), expected);
        }
        assert!(index.is_empty());
        assert_eq!(index.bucket_count(), 0);
    }

    #[test]
    fn query_finds_an_identical_point_with_high_probability() {
        // A stored point is its own best query; with t = 144 filters at
        // these thresholds a shared filter exists in almost every draw.
        let mut found = 0;
        for seed in 0..100u64 {
            let mut index = tiny_index(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(500));
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(1, &p).unwrap();
            let result = index
                .query(&p, Angle::from_radians(1e-6).unwrap())
                .unwrap();
            if result.found_within_target {
                assert_eq!(result.best.unwrap().0, 1);
                // acos amplifies rounding near 1: acos(1 - eps) ~ sqrt(2 eps),
                // so a self-dot a few ulps under 1 still reads as ~1e-8 rad.
                assert!(result.best.unwrap().1.radians() < 1e-6);
                found += 1;
            }
        }
        assert!(found >= 90, "identical point found in only {found}/100 draws");
    }

    #[test]
    fn query_returns_best_candidate_when_nothing_is_within_target() {
        let mut index = tiny_index(9);
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        for id in 0..60u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(id, &p).unwrap();
        }
        let q = sample_unit_vector(8, &mut rng).unwrap();
        let strict = index.query(&q, Angle::from_radians(0.0).unwrap()).unwrap();
        if let Some((id, angle)) = strict.best {
            assert!(!strict.found_within_target);
            assert!(angle.radians() > 0.0);
            // The reported candidate really is the best among those scanned:
            // an exhaustive re-run finds the same angle.
            let exhaustive = index
                .query_with(
                    &q,
                    Angle::from_radians(0.0).unwrap(),
                    QueryOptions { exhaustive: true },
                )
                .unwrap();
            assert_eq!(exhaustive.best.unwrap(), (id, angle));
            assert_eq!(exhaustive.candidates_examined, strict.candidates_examined);
        } else {
            assert_eq!(strict.candidates_examined, 0);
        }
    }

    #[test]
    fn empty_index_yields_an_empty_result() {
        let index = tiny_index(10);
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let q = sample_unit_vector(8, &mut rng).unwrap();
        let result = index.query(&q, Angle::from_radians(0.5).unwrap()).unwrap();
        assert_eq!(result.best, None);
        assert!(!result.found_within_target);
        assert_eq!(result.candidates_examined, 0);
    }

    #[test]
    fn probed_query_with_trivial_schedule_matches_plain_query() {
        let mut index = tiny_index(11);
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        for id in 0..80u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(id, &p).unwrap();
        }
        let schedule = ProbeSchedule::new(vec![1.0, index.params().alpha_q]).unwrap();
        for trial in 0..20 {
            let q = sample_unit_vector(8, &mut rng).unwrap();
            let target = Angle::from_radians(if trial % 2 == 0 { 0.9 } else { 0.2 }).unwrap();
            let plain = index.query(&q, target).unwrap();
            let probed = index.query_probed(&q, target, &schedule).unwrap();
            assert_eq!(probed.best, plain.best);
            assert_eq!(probed.candidates_examined, plain.candidates_examined);
            assert_eq!(probed.buckets_visited, plain.buckets_visited);
            assert_eq!(probed.found_within_target, plain.found_within_target);
            assert_eq!(
                probed.first_hit_interval,
                plain.found_within_target.then_some(0)
            );
        }
    }

    #[test]
    fn refined_schedule_visits_the_same_buckets_exactly_once() {
        let mut index = tiny_index(12);
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        for id in 0..80u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(id, &p).unwrap();
        }
        let alpha_q = index.params().alpha_q;
        let schedule = ProbeSchedule::linear(alpha_q, 4).unwrap();
        assert_eq!(schedule.intervals(), 4);
        assert_eq!(schedule.final_threshold(), alpha_q);
        // An unreachable target forces both paths to scan everything, so
        // equal bucket counts prove the probes partition the query set
        // (any overlap would double-count a bucket).
        let target = Angle::from_radians(0.0).unwrap();
        for _ in 0..20 {
            let q = sample_unit_vector(8, &mut rng).unwrap();
            let plain = index.query(&q, target).unwrap();
            let probed = index.query_probed(&q, target, &schedule).unwrap();
            assert_eq!(probed.buckets_visited, plain.buckets_visited);
            assert_eq!(probed.candidates_examined, plain.candidates_examined);
            assert_eq!(probed.best, plain.best);
        }
    }

    #[test]
    fn probe_schedule_validation_rejects_malformed_sequences() {
        assert!(ProbeSchedule::new(vec![1.0]).is_err());
        assert!(ProbeSchedule::new(vec![0.9, 0.5]).is_err());
        assert!(ProbeSchedule::new(vec![1.0, 0.5, 0.5]).is_err());
        assert!(ProbeSchedule::new(vec![1.0, 0.5, 0.7]).is_err());
        assert!(ProbeSchedule::new(vec![1.0, -0.1]).is_err());
        assert!(ProbeSchedule::new(vec![1.0, 0.5, 0.0]).is_ok());
        assert!(ProbeSchedule::linear(0.3, 0).is_err());
        assert!(ProbeSchedule::linear(1.0, 3).is_err());
        let s = ProbeSchedule::linear(0.3, 3).unwrap();
        assert_eq!(s.thresholds()[0], 1.0);
        assert_eq!(s.final_threshold(), 0.3);
    }

    #[test]
    fn stats_match_independent_tallies() {
        let mut index = tiny_index(13);
        let fresh = index.stats();
        assert_eq!(
            fresh,
            StatsSnapshot {
                inserts: 0,
                deletes: 0,
                queries: 0,
                candidates_scanned: 0,
                buckets_touched: 0
            }
        );
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        let mut tally_buckets = 0;
        for id in 0..30u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            tally_buckets += index.insert(id, &p).unwrap();
        }
        for id in 0..5u64 {
            tally_buckets += index.delete(id).unwrap();
        }
        let mut tally_candidates = 0;
        for _ in 0..10 {
            let q = sample_unit_vector(8, &mut rng).unwrap();
            let r = index.query(&q, Angle::from_radians(0.1).unwrap()).unwrap();
            tally_candidates += r.candidates_examined;
            tally_buckets += r.buckets_visited;
        }
        let snap = index.stats();
        assert_eq!(snap.inserts, 30);
        assert_eq!(snap.deletes, 5);
        assert_eq!(snap.queries, 10);
        assert_eq!(snap.candidates_scanned, tally_candidates);
        assert_eq!(snap.buckets_touched, tally_buckets);
    }

    #[test]
    fn concurrent_queries_agree_with_serial_execution() {
        let mut index = tiny_index(14);
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for id in 0..100u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(id, &p).unwrap();
        }
        let queries: Vec<UnitVector> = (0..40)
            .map(|_| sample_unit_vector(8, &mut rng).unwrap())
            .collect();
        let target = Angle::from_radians(0.8).unwrap();
        let serial: Vec<QueryResult> = queries
            .iter()
            .map(|q| index.query(q, target).unwrap())
            .collect();
        let queries_before = index.stats().queries;
        let index_ref = &index;
        let parallel: Vec<QueryResult> = std::thread::scope(|scope| {
            let handles: Vec<_> = queries
                .chunks(10)
                .map(|chunk| {
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|q| index_ref.query(q, target).unwrap())
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        assert_eq!(parallel, serial);
        assert_eq!(index.stats().queries, queries_before + 40);
    }

    #[test]
    fn audit_detects_a_tampered_bucket() {
        let mut index = tiny_index(15);
        let mut rng = ChaCha8Rng::seed_from_u64(108);
        for id in 0..30u64 {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(id, &p).unwrap();
        }
        index.audit().unwrap();
        let victim = *index.buckets.keys().next().unwrap();
        let original = index.buckets.get(&victim).unwrap().clone();
        index.buckets.get_mut(&victim).unwrap().insert(424242);
        // The spurious id has no stored point, so the recomputed map differs.
        assert!(matches!(index.audit(), Err(Error::AuditFailure(_))));
        index.buckets.insert(victim, original);
        index.audit().unwrap();
        index.buckets.remove(&victim);
        assert!(matches!(index.audit(), Err(Error::AuditFailure(_))));
    }

    #[test]
    fn save_load_round_trips_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut index = tiny_index(16);
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        for id in (0..50u64).rev() {
            let p = sample_unit_vector(8, &mut rng).unwrap();
            index.insert(id, &p).unwrap();
        }
        let path_a = dir.path().join("index_a.sphi");
        let path_b = dir.path().join("index_b.sphi");
        index.save(&path_a).unwrap();
        index.save(&path_b).unwrap();
        assert_eq!(
            std::fs::read(&path_a).unwrap(),
            std::fs::read(&path_b).unwrap(),
            "serialization is not deterministic"
        );

        let loaded = FilterIndex::load(&path_a).unwrap();
        assert_eq!(loaded.params(), index.params());
        assert_eq!(loaded.code().seed(), index.code().seed());
        assert_eq!(loaded.buckets, index.buckets);
        assert_eq!(loaded.points, index.points);
        assert_eq!(loaded.stats().inserts, 0);
        loaded.audit().unwrap();

        // Queries behave identically on the reloaded index.
        let q = sample_unit_vector(8, &mut rng).unwrap();
        let target = Angle::from_radians(0.7).unwrap();
        assert_eq!(
            loaded.query(&q, target).unwrap(),
            index.query(&q, target).unwrap()
        );
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.sphi");
        std::fs::write(&path, b"not an index file at all").unwrap();
        assert!(matches!(
            FilterIndex::load(&path),
            Err(Error::MalformedFile(_))
        ));
        let short = dir.path().join("short.sphi");
        std::fs::write(&short, b"SP").unwrap();
        assert!(FilterIndex::load(&short).is_err());
    }

    #[test]
    fn input_validation_errors() {
        let mut index = tiny_index(17);
        let mut rng = ChaCha8Rng::seed_from_u64(110);
        let p = sample_unit_vector(8, &mut rng).unwrap();
        let wrong_dim = sample_unit_vector(9, &mut rng).unwrap();
        assert!(matches!(
            index.insert(1, &wrong_dim),
            Err(Error::DimensionMismatch { .. })
        ));
        index.insert(1, &p).unwrap();
        assert!(matches!(index.insert(1, &p), Err(Error::DuplicateId(1))));
        assert!(matches!(index.delete(2), Err(Error::UnknownId(2))));
        assert!(matches!(
            index.query(&wrong_dim, Angle::from_radians(0.5).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        // A mismatched code/plan pair is rejected at construction.
        let code = ProductCode::from_parts(8, 2, 12, 0).unwrap();
        let params = tiny_params(8, 2, 13, 0.25, 0.3);
        assert!(FilterIndex::new(code, params).is_err());
    }
}
