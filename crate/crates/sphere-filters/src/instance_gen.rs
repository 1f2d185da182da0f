//! Planted random instances for near-neighbor experiments, and the
//! density-reduction subsampling that converts dense instances into
//! critically dense ones.
//!
//! Both models draw `n` i.i.d. uniform points on `S^{d-1}` plus a uniform
//! query; they differ in how `n` relates to `d`. In the *sparse* model
//! (`n = 2^{o(d)}`) uniform points concentrate at right angles from the
//! query, so the far-angle promise holds with overwhelming probability
//! without rejection sampling; in the *dense* model (`n = 2^{Theta(d)}`)
//! accidental nearby points are expected and quantified by cap volumes.
//! A *planted* instance additionally replaces one randomly chosen point
//! with `cos(theta) q + sin(theta) r` (`r` uniform orthogonal to `q`), a
//! point at exactly the promise angle.
//!
//! Everything is deterministic given the [`InstanceSpec`] seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sphere_geometry::{sample_at_angle, sample_unit_vector, Angle, UnitVector};

/// Relative haircut applied before the ceiling in the subsample-size
/// computation, so targets that are exact integers in exact arithmetic
/// (e.g. `(1/sin(pi/6))^10 = 1024`) are not bumped to the next integer by
/// floating-point noise in the log-domain evaluation.
const SIZE_ROUNDING_SLACK: f64 = 1e-12;

/// Which `n`-versus-`d` scaling an instance is meant to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Sparse,
    Dense,
}

/// Parameters of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InstanceSpec {
    pub model: Model,
    pub n: u64,
    pub d: u32,
    /// Promise angle of the planted pair.
    pub theta: Angle,
    /// Far-angle promise; `pi/2` in the sparse model.
    pub psi: Angle,
    pub planted: bool,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter(
                "an instance needs at least one point".to_string(),
            ));
        }
        if self.d < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension d = {} must be at least 2",
                self.d
            )));
        }
        let theta = self.theta.radians();
        let psi = self.psi.radians();
        if !(0.0 < theta && theta < psi && psi <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "angles must satisfy 0 < theta < psi <= pi/2 (got theta = {theta}, psi = {psi})"
            )));
        }
        Ok(())
    }
}

/// A generated dataset/query pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub dataset: Vec<UnitVector>,
    pub query: UnitVector,
    /// Position of the planted point in `dataset`, when one exists.
    pub planted_id: Option<usize>,
}

impl Instance {
    /// Angle between the planted point and the query, if planted.
    pub fn planted_angle(&self) -> Option<Angle> {
        self.planted_id
            .map(|id| crate::sphere_geometry::angle_between(&self.dataset[id], &self.query).unwrap())
    }
}

/// Draws an instance: the query, then `n` uniform points, then (if
/// planted) the planted position and its replacement — a fixed draw order,
/// so identical specs yield identical instances.
pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let query = sample_unit_vector(spec.d, &mut rng)?;
    let mut dataset = Vec::with_capacity(spec.n as usize);
    for _ in 0..spec.n {
        dataset.push(sample_unit_vector(spec.d, &mut rng)?);
    }
    let planted_id = if spec.planted {
        let id = rng.gen_range(0..spec.n as usize);
        dataset[id] = sample_at_angle(&query, spec.theta, &mut rng)?;
        Some(id)
    } else {
        None
    };
    Ok(Instance {
        dataset,
        query,
        planted_id,
    })
}

/// Subsample size for density reduction at nearby angle `theta`:
/// `ceil(multiplier * (1/sin theta)^d)`, evaluated in the log domain.
pub fn reduced_size(theta: Angle, d: u32, multiplier: f64) -> Result<u64> {
    if !(multiplier.is_finite() && multiplier > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "subsample multiplier {multiplier} must be positive and finite"
        )));
    }
    let sin_theta = theta.sin();
    if !(sin_theta > 0.0) {
        return Err(Error::InvalidParameter(
            "density reduction needs 0 < theta".to_string(),
        ));
    }
    let ln_target = multiplier.ln() - d as f64 * sin_theta.ln();
    if ln_target >= 63.0 * std::f64::consts::LN_2 {
        return Err(Error::InvalidParameter(format!(
            "subsample size exp({ln_target:.2}) overflows; reduce the multiplier or dimension"
        )));
    }
    let target = ln_target.exp();
    Ok(((target * (1.0 - SIZE_ROUNDING_SLACK)).ceil() as u64).max(1))
}

/// Takes a uniformly random subset of size `n' = ceil(multiplier *
/// (1/sin theta)^d)` from the instance (error if `n'` exceeds the dataset
/// size). The planted point survives with probability `n'/n` like any
/// other point; `force_retain_planted` instead swaps it into the sample —
/// a benchmark convenience that makes recall measurable on the reduced
/// instance at the cost of exact subsample uniformity.
pub fn reduce_density(
    instance: &Instance,
    theta: Angle,
    multiplier: f64,
    seed: u64,
    force_retain_planted: bool,
) -> Result<Instance> {
    let n = instance.dataset.len();
    let target = reduced_size(theta, instance_dim(instance)?, multiplier)?;
    if target > n as u64 {
        return Err(Error::InvalidParameter(format!(
            "subsample of {target} points exceeds the instance's {n} points; \
             density reduction does not apply"
        )));
    }
    let target = target as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    if force_retain_planted {
        if let Some(planted) = instance.planted_id {
            let pos = order.iter().position(|&i| i == planted).unwrap();
            if pos >= target {
                order.swap(pos, target - 1);
            }
        }
    }
    let kept = &order[..target];
    let dataset: Vec<UnitVector> = kept.iter().map(|&i| instance.dataset[i].clone()).collect();
    let planted_id = instance
        .planted_id
        .and_then(|planted| kept.iter().position(|&i| i == planted));
    Ok(Instance {
        dataset,
        query: instance.query.clone(),
        planted_id,
    })
}

fn instance_dim(instance: &Instance) -> Result<u32> {
    let d = instance.query.dim();
    if d < 2 || d > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "instance dimension {d} out of range"
        )));
    }
    Ok(d as u32)
}
