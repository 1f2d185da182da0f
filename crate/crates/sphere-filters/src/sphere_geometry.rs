//! Geometry of spherical caps and wedges on the unit sphere in `R^d`.
//!
//! A *cap* `C(u, alpha)` is the set of unit vectors whose inner product with
//! the axis `u` is at least `alpha`. A *wedge* `W(alpha1, alpha2, theta)` is
//! the intersection of two caps whose axes subtend an angle `theta`. All
//! volumes are relative to the whole sphere, i.e. probabilities under the
//! uniform surface measure.
//!
//! Three views of the same quantities live here:
//!
//! * **Per-dimension log-volume exponents** ([`cap_log_volume`],
//!   [`wedge_log_volume`]): the limits `ln(vol)/d` as the dimension grows,
//!   in natural logarithms. These drive the analytic planner.
//! * **Finite-dimension volumes** ([`cap_volume`], [`wedge_volume`]):
//!   numerically exact values at a concrete dimension, computed by adaptive
//!   quadrature of the marginal densities. Exponentiating the per-dimension
//!   exponent misses a polynomial-in-`d` prefactor that is easily a factor
//!   10-100 at practical dimensions, so anything that predicts concrete
//!   counts uses these.
//! * **Monte Carlo estimators** ([`mc_cap_volume`], [`mc_wedge_volume`]):
//!   reference measurements with standard errors, used to validate the other
//!   two views.
//!
//! The module also provides the sampling primitives shared by the instance
//! generators: uniform unit vectors and points at an exact angle from a
//! given axis.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Maximum deviation from unit norm accepted by [`UnitVector::new`].
const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// Relative tolerance targeted by the adaptive quadrature routines.
const QUADRATURE_REL_TOL: f64 = 1e-11;

/// An angle in radians, restricted to `[0, pi]` (the range of angles between
/// unit vectors).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    /// Builds an angle, rejecting values outside `[0, pi]` or non-finite.
    pub fn from_radians(radians: f64) -> Result<Self> {
        if !radians.is_finite() || !(0.0..=std::f64::consts::PI).contains(&radians) {
            return Err(Error::InvalidParameter(format!(
                "angle {radians} is not in [0, pi]"
            )));
        }
        Ok(Angle(radians))
    }

    /// The angle in radians.
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Cosine of the angle.
    pub fn cos(self) -> f64 {
        self.0.cos()
    }

    /// Sine of the angle.
    pub fn sin(self) -> f64 {
        self.0.sin()
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Angle::from_radians(v)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl std::fmt::Display for Angle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

/// A vector on the unit sphere. The constructor enforces the norm invariant
/// so downstream code can rely on inner products being cosines.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps a vector that is already unit length (within `1e-9`).
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "unit vector needs at least one component".to_string(),
            ));
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "unit vector components must be finite".to_string(),
            ));
        }
        let norm = norm(&components);
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::NotUnitLength { norm });
        }
        Ok(UnitVector(components))
    }

    /// Normalizes an arbitrary non-zero vector onto the sphere.
    pub fn normalized(mut components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "unit vector needs at least one component".to_string(),
            ));
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "unit vector components must be finite".to_string(),
            ));
        }
        let norm = norm(&components);
        if norm < 1e-12 {
            return Err(Error::InvalidParameter(
                "cannot normalize a (near-)zero vector".to_string(),
            ));
        }
        for x in &mut components {
            *x /= norm;
        }
        Ok(UnitVector(components))
    }

    /// Dimension of the ambient space.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The components as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Consumes the vector, returning its components.
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Inner product with another unit vector.
    ///
    /// # Panics
    /// Panics if the dimensions differ; use [`angle_between`] for a checked
    /// variant.
    pub fn dot(&self, other: &UnitVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "unit vector dimension mismatch");
        dot(&self.0, &other.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Angle between two unit vectors, in `[0, pi]`.
pub fn angle_between(a: &UnitVector, b: &UnitVector) -> Result<Angle> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let c = a.dot(b).clamp(-1.0, 1.0);
    Angle::from_radians(c.acos())
}

fn check_threshold(name: &str, alpha: f64) -> Result<()> {
    if !alpha.is_finite() || !(-1.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {alpha} is not in [-1, 1]"
        )));
    }
    Ok(())
}

fn check_dim(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "sphere dimension d = {d} must be at least 2"
        )));
    }
    Ok(())
}

fn check_wedge_angle(theta: Angle) -> Result<()> {
    let t = theta.radians();
    if t <= 0.0 || t >= std::f64::consts::PI {
        return Err(Error::InvalidParameter(format!(
            "wedge axis angle {t} must lie strictly inside (0, pi)"
        )));
    }
    Ok(())
}

/// Per-dimension log-volume exponent of a cap with threshold `alpha`:
/// `ln vol(C(u, alpha)) / d -> (1/2) ln(1 - alpha^2)` as `d` grows.
///
/// Natural logarithm; `alpha` must lie strictly inside `(-1, 1)`.
pub fn cap_log_volume(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "cap threshold {alpha} must lie strictly inside (-1, 1)"
        )));
    }
    Ok(0.5 * (1.0 - alpha * alpha).ln())
}

/// The wedge geometry parameter `gamma`, the distance from the origin to the
/// intersection of the two cap boundary hyperplanes inside their common
/// two-dimensional span:
///
/// `gamma^2 = (alpha1^2 + alpha2^2 - 2 alpha1 alpha2 cos(theta)) / sin^2(theta)`.
///
/// Returns `None` when `gamma^2 > 1`, i.e. the boundary hyperplanes do not
/// intersect inside the unit ball. For non-negative thresholds that means the
/// wedge is empty.
pub fn wedge_gamma(alpha1: f64, alpha2: f64, theta: Angle) -> Result<Option<f64>> {
    check_threshold("alpha1", alpha1)?;
    check_threshold("alpha2", alpha2)?;
    check_wedge_angle(theta)?;
    let (s, c) = (theta.sin(), theta.cos());
    let gamma_sq = (alpha1 * alpha1 + alpha2 * alpha2 - 2.0 * alpha1 * alpha2 * c) / (s * s);
    if gamma_sq > 1.0 {
        Ok(None)
    } else {
        Ok(Some(gamma_sq.max(0.0).sqrt()))
    }
}

/// Per-dimension log-volume exponent of the wedge `W(alpha1, alpha2, theta)`:
/// `(1/2) ln(1 - gamma^2)` with `gamma` from [`wedge_gamma`], or negative
/// infinity when the wedge is empty.
pub fn wedge_log_volume(alpha1: f64, alpha2: f64, theta: Angle) -> Result<f64> {
    match wedge_gamma(alpha1, alpha2, theta)? {
        None => Ok(f64::NEG_INFINITY),
        Some(g) => Ok(0.5 * (1.0 - g * g).ln()),
    }
}

// ---------------------------------------------------------------------------
// Finite-dimension volumes by quadrature.
// ---------------------------------------------------------------------------

/// Ratio `Gamma(d/2) / (sqrt(pi) * Gamma((d-1)/2))`: the normalizing constant
/// of the one-dimensional marginal density `(1 - x^2)^{(d-3)/2}` of a uniform
/// point on the sphere in `R^d`. Computed by the stable two-term recurrence
/// `r_{d+1} = (d - 1) / (2 r_d)` with `r_2 = 1/sqrt(pi)` (where
/// `r_d = Gamma(d/2)/Gamma((d-1)/2)`), avoiding large Gamma values.
fn marginal_normalizer(d: u32) -> f64 {
    let mut r = 1.0 / std::f64::consts::PI.sqrt(); // r_2
    let mut k = 2u32;
    while k < d {
        r = (k as f64 - 1.0) / (2.0 * r);
        k += 1;
    }
    r / std::f64::consts::PI.sqrt()
}

/// Composite Simpson rule with `panels` subdivisions, used only to obtain a
/// magnitude estimate that sets the absolute tolerance for the adaptive pass.
fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: u32) -> f64 {
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with a relative accuracy
/// target; exact scale is bootstrapped from a coarse composite pass.
fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let crude = composite_simpson(f, a, b, 128).abs();
    let eps = (crude * QUADRATURE_REL_TOL).max(1e-300);
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, eps, 48)
}

/// `integral of sin(t)^k dt` over `[0, upper]` for integer `k >= 0`; the
/// integrand is smooth, so plain adaptive quadrature converges fast.
fn sin_power_integral(upper: f64, k: u32) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    match k {
        0 => upper,
        1 => 1.0 - upper.cos(),
        _ => integrate(&|t: f64| t.sin().powi(k as i32), 0.0, upper),
    }
}

/// Exact relative volume of the cap `C(u, alpha)` on the sphere in `R^d`,
/// computed from the marginal density of one coordinate. Substituting
/// `x = cos(t)` turns the integral into `c_d * integral of sin(t)^{d-2}`,
/// which has no endpoint singularities in any dimension.
pub fn cap_volume(alpha: f64, d: u32) -> Result<f64> {
    check_dim(d)?;
    check_threshold("alpha", alpha)?;
    if alpha >= 1.0 {
        return Ok(0.0);
    }
    if alpha <= -1.0 {
        return Ok(1.0);
    }
    match d {
        2 => Ok(alpha.acos() / std::f64::consts::PI),
        3 => Ok(0.5 * (1.0 - alpha)),
        _ => {
            let c = marginal_normalizer(d);
            Ok(c * sin_power_integral(alpha.acos(), d - 2))
        }
    }
}

/// Exact relative volume of the wedge `W(alpha1, alpha2, theta)` on the
/// sphere in `R^d`: unit vectors `v` with `<v, u1> >= alpha1` and
/// `<v, u2> >= alpha2` where the axes satisfy `<u1, u2> = cos(theta)`.
///
/// Dimension 2 reduces to circular-arc intersection; higher dimensions
/// integrate the joint marginal density of the two coordinates along the
/// axes' span, `c'_d (1 - x^2 - y^2)^{(d-4)/2}` with `c'_d = (d-2)/(2 pi)`.
pub fn wedge_volume(alpha1: f64, alpha2: f64, theta: Angle, d: u32) -> Result<f64> {
    check_dim(d)?;
    check_threshold("alpha1", alpha1)?;
    check_threshold("alpha2", alpha2)?;
    check_wedge_angle(theta)?;
    if alpha1 >= 1.0 || alpha2 >= 1.0 {
        return Ok(0.0);
    }
    // A threshold of -1 makes that constraint vacuous: the wedge is a cap.
    if alpha2 <= -1.0 {
        return cap_volume(alpha1, d);
    }
    if alpha1 <= -1.0 {
        return cap_volume(alpha2, d);
    }
    let th = theta.radians();
    if d == 2 {
        return Ok(circle_arc_intersection(alpha1, alpha2, th) / (2.0 * std::f64::consts::PI));
    }

    let (sin_th, cos_th) = (th.sin(), th.cos());
    // Marginals along u1 (coordinate x) and the in-plane normal completion
    // (coordinate y): constraints are x >= alpha1 and
    // cos(theta) x + sin(theta) y >= alpha2.
    let c2 = (d as f64 - 2.0) / (2.0 * std::f64::consts::PI);
    let upper = alpha1.acos();
    // x = cos(s), radius of the y-section R = sin(s); integrand in s is
    // smooth except for square-root kinks where the second constraint
    // activates (the slice circle entering or leaving the second cap).
    let inner = |s: f64| -> f64 {
        let x = s.cos();
        let r = s.sin();
        if r <= 0.0 {
            return 0.0;
        }
        let y_min = (alpha2 - x * cos_th) / sin_th;
        let u0 = y_min / r;
        if u0 >= 1.0 {
            return 0.0;
        }
        let u0 = u0.max(-1.0);
        if d == 3 {
            // integral of (R^2 - y^2)^{-1/2} dy from y_min to R
            std::f64::consts::FRAC_PI_2 - u0.asin()
        } else {
            // R^{d-3} * integral of sin(t)^{d-3} dt over [0, acos(u0)]
            r.powi(d as i32 - 3) * sin_power_integral(u0.acos(), d - 3)
        }
    };
    // The slice at angle s meets the second cap iff |s - theta| <= r2 and
    // lies inside it entirely iff s <= r2 - theta. Integrating each regime
    // separately keeps the kinks at interval endpoints and, crucially,
    // guarantees the quadrature samples a thin active band instead of
    // stepping over it.
    let r2 = alpha2.acos();
    let mut knots = [0.0, upper, 0.0, 0.0, 0.0];
    let mut len = 2;
    for k in [r2 - th, th - r2, th + r2] {
        if k > 0.0 && k < upper {
            knots[len] = k;
            len += 1;
        }
    }
    let knots = &mut knots[..len];
    knots.sort_unstable_by(f64::total_cmp);
    let f = |s: f64| inner(s) * s.sin();
    let mut v = 0.0;
    for pair in knots.windows(2) {
        v += integrate(&f, pair[0], pair[1]);
    }
    Ok((c2 * v).clamp(0.0, 1.0))
}

/// Length of the intersection of the circular arcs `{cos(phi) >= alpha1}` and
/// `{cos(phi - theta) >= alpha2}` on the unit circle (angles in radians).
fn circle_arc_intersection(alpha1: f64, alpha2: f64, theta: f64) -> f64 {
    let a1 = alpha1.acos();
    let a2 = alpha2.acos();
    // First arc: [-a1, a1]. Second arc: [theta - a2, theta + a2], possibly
    // wrapping past pi; split it into segments inside [-pi, pi].
    let mut segments = [(0.0_f64, 0.0_f64); 2];
    let count;
    let lo = theta - a2;
    let hi = theta + a2;
    if hi <= std::f64::consts::PI {
        segments[0] = (lo, hi);
        count = 1;
    } else {
        segments[0] = (lo, std::f64::consts::PI);
        segments[1] = (-std::f64::consts::PI, hi - 2.0 * std::f64::consts::PI);
        count = 2;
    }
    let mut total = 0.0;
    for &(s, e) in &segments[..count] {
        let left = s.max(-a1);
        let right = e.min(a1);
        if right > left {
            total += right - left;
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators.
// ---------------------------------------------------------------------------

fn check_samples(samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".to_string(),
        ));
    }
    Ok(())
}

fn binomial_estimate(hits: u64, samples: u64) -> (f64, f64) {
    let p = hits as f64 / samples as f64;
    let stderr = (p * (1.0 - p) / samples as f64).sqrt();
    (p, stderr)
}

/// Fills `buf` with a uniformly random direction times its (positive) norm,
/// i.e. i.i.d. standard Gaussians, and returns the norm. Resamples in the
/// (astronomically unlikely) event of a zero norm.
fn gaussian_direction<R: Rng + ?Sized>(buf: &mut [f64], rng: &mut R) -> f64 {
    loop {
        let mut sq = 0.0;
        for x in buf.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *x = g;
            sq += g * g;
        }
        if sq > 0.0 {
            return sq.sqrt();
        }
    }
}

/// Monte Carlo estimate of the cap volume: the fraction of uniform sphere
/// samples whose first coordinate reaches `alpha`. Returns the estimate and
/// its binomial standard error. Deterministic for a fixed seed.
pub fn mc_cap_volume(alpha: f64, d: u32, samples: u64, seed: u64) -> Result<(f64, f64)> {
    check_dim(d)?;
    check_threshold("alpha", alpha)?;
    check_samples(samples)?;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0_f64; d as usize];
    let mut hits = 0u64;
    for _ in 0..samples {
        let n = gaussian_direction(&mut buf, &mut rng);
        if buf[0] >= alpha * n {
            hits += 1;
        }
    }
    Ok(binomial_estimate(hits, samples))
}

/// Monte Carlo estimate of the wedge volume `W(alpha1, alpha2, theta)`,
/// testing both cap constraints against axes `e1` and
/// `cos(theta) e1 + sin(theta) e2`. Returns the estimate and its binomial
/// standard error. Deterministic for a fixed seed.
pub fn mc_wedge_volume(
    alpha1: f64,
    alpha2: f64,
    theta: Angle,
    d: u32,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    check_dim(d)?;
    check_threshold("alpha1", alpha1)?;
    check_threshold("alpha2", alpha2)?;
    check_wedge_angle(theta)?;
    check_samples(samples)?;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (sin_th, cos_th) = (theta.sin(), theta.cos());
    let mut buf = vec![0.0_f64; d as usize];
    let mut hits = 0u64;
    for _ in 0..samples {
        let n = gaussian_direction(&mut buf, &mut rng);
        if buf[0] >= alpha1 * n && cos_th * buf[0] + sin_th * buf[1] >= alpha2 * n {
            hits += 1;
        }
    }
    Ok(binomial_estimate(hits, samples))
}

/// A cap or wedge volume seen through all three lenses at once; produced by
/// [`cap_volume_estimate`] / [`wedge_volume_estimate`] and consumed by the
/// command-line reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeEstimate {
    /// Ambient dimension.
    pub dim: u32,
    /// Per-dimension log-volume exponent (natural log); `-inf` marks an
    /// empty wedge.
    pub log_volume_per_dim: f64,
    /// `exp(d * log_volume_per_dim)`: the large-dimension approximation.
    pub asymptotic: f64,
    /// Numerically exact volume at this dimension (adaptive quadrature).
    pub quadrature: f64,
    /// Monte Carlo estimate and standard error, when samples were requested.
    pub monte_carlo: Option<(f64, f64)>,
}

/// Bundles the asymptotic, quadrature, and (optionally) Monte Carlo views of
/// a cap volume. `samples = 0` skips the Monte Carlo pass.
pub fn cap_volume_estimate(alpha: f64, d: u32, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    let log_v = cap_log_volume(alpha)?;
    let quadrature = cap_volume(alpha, d)?;
    let monte_carlo = if samples > 0 {
        Some(mc_cap_volume(alpha, d, samples, seed)?)
    } else {
        None
    };
    Ok(VolumeEstimate {
        dim: d,
        log_volume_per_dim: log_v,
        asymptotic: (d as f64 * log_v).exp(),
        quadrature,
        monte_carlo,
    })
}

/// Bundles the asymptotic, quadrature, and (optionally) Monte Carlo views of
/// a wedge volume. `samples = 0` skips the Monte Carlo pass.
pub fn wedge_volume_estimate(
    alpha1: f64,
    alpha2: f64,
    theta: Angle,
    d: u32,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    let log_v = wedge_log_volume(alpha1, alpha2, theta)?;
    let quadrature = wedge_volume(alpha1, alpha2, theta, d)?;
    let monte_carlo = if samples > 0 {
        Some(mc_wedge_volume(alpha1, alpha2, theta, d, samples, seed)?)
    } else {
        None
    };
    Ok(VolumeEstimate {
        dim: d,
        log_volume_per_dim: log_v,
        asymptotic: if log_v == f64::NEG_INFINITY {
            0.0
        } else {
            (d as f64 * log_v).exp()
        },
        quadrature,
        monte_carlo,
    })
}

// ---------------------------------------------------------------------------
// Sampling primitives.
// ---------------------------------------------------------------------------

/// Samples a uniform point on the unit sphere in `R^d` (Gaussian direction,
/// normalized). `d = 1` yields a uniform sign, which the product code uses
/// for its one-dimensional blocks.
pub fn sample_unit_vector<R: Rng + ?Sized>(d: u32, rng: &mut R) -> Result<UnitVector> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "cannot sample a zero-dimensional direction".to_string(),
        ));
    }
    let mut buf = vec![0.0_f64; d as usize];
    let n = gaussian_direction(&mut buf, rng);
    for x in &mut buf {
        *x /= n;
    }
    UnitVector::new(buf)
}

/// Samples a unit vector at exactly the angle `theta` from `axis`:
/// `cos(theta) * axis + sin(theta) * r` with `r` uniform on the sphere of
/// directions orthogonal to `axis`.
pub fn sample_at_angle<R: Rng + ?Sized>(
    axis: &UnitVector,
    theta: Angle,
    rng: &mut R,
) -> Result<UnitVector> {
    let d = axis.dim();
    if d < 2 {
        return Err(Error::InvalidParameter(
            "sampling at an angle requires dimension at least 2".to_string(),
        ));
    }
    // Uniform orthogonal direction by Gram-Schmidt against the axis;
    // resample in the measure-zero degenerate case.
    let mut ortho = vec![0.0_f64; d];
    loop {
        gaussian_direction(&mut ortho, rng);
        let proj = dot(&ortho, axis.as_slice());
        for (o, a) in ortho.iter_mut().zip(axis.as_slice()) {
            *o -= proj * a;
        }
        let n = norm(&ortho);
        if n > 1e-9 {
            for o in &mut ortho {
                *o /= n;
            }
            break;
        }
    }
    let (s, c) = (theta.sin(), theta.cos());
    let v: Vec<f64> = axis
        .as_slice()
        .iter()
        .zip(&ortho)
        .map(|(a, o)| c * a + s * o)
        .collect();
    UnitVector::normalized(v)
}
