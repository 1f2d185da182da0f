//! Analytic parameter planning for asymmetric spherical filters.
//!
//! The planner answers two kinds of question:
//!
//! * **Exponents** — closed-form query/update cost exponents `(rho_q,
//!   rho_u)` (costs scale as `n^rho`) for three data regimes: *sparse*
//!   (`n = 2^{o(d)}`, far points essentially orthogonal), *dense*
//!   (`n = 2^{Theta(d)}`, parametrized by the density `n^{-2/d}`), and
//!   *critically dense* (`n = (1/sin theta)^d`, the densest setting where
//!   random far points still behave like `theta`-separated ones). The
//!   asymmetry knob is `beta = alpha_q / alpha_u`: `beta < 1` favors
//!   queries, `beta > 1` favors updates, and the optimal range is
//!   `cos theta <= beta <= 1/cos theta`.
//! * **Concrete parameters** — [`plan`] turns `(n, d, theta, beta, kappa)`
//!   into cap thresholds `(alpha_q, alpha_u)`, a block count `m`, and a
//!   filter count `t`, sized so a planted pair collides in `kappa` filters
//!   in expectation. The filter count is calibrated with the exact
//!   finite-dimension wedge volume (numeric quadrature, see
//!   [`crate::sphere_geometry::wedge_volume`]); the asymptotic exponent
//!   `exp(d * wedge_log_volume)` misses a polynomial prefactor that already
//!   costs an order of magnitude of recall at `d = 128`.
//!
//! All logarithms are natural.

use crate::error::{Error, Result};
use crate::product_code::{default_m, smallest_base};
use crate::sphere_geometry::{cap_volume, wedge_volume, Angle};

/// Default success-probability multiplier on the filter count.
pub const DEFAULT_KAPPA: f64 = 4.0;

/// Slack for floating-point comparisons against the ends of the optimal
/// `beta` range (the ends themselves are legitimate inputs).
const BETA_RANGE_SLACK: f64 = 1e-9;

/// Largest supported filter count (bucket ordinals must fit in u64).
const MAX_FILTERS: f64 = (1u64 << 62) as f64;

/// Data regime a plan or exponent computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sparse,
    Dense,
    Critical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Sparse => write!(f, "sparse"),
            Regime::Dense => write!(f, "dense"),
            Regime::Critical => write!(f, "critical"),
        }
    }
}

/// A fully resolved filter plan.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlanParams {
    pub regime: Regime,
    pub n: u64,
    pub d: u32,
    pub theta: Angle,
    /// Threshold ratio `alpha_q / alpha_u`.
    pub beta: f64,
    pub alpha_q: f64,
    pub alpha_u: f64,
    /// Actual filter count, a perfect `m`-th power `b^m`.
    pub t: u64,
    /// Filter count before rounding up to a perfect power.
    pub t_requested: u64,
    /// Per-block code size with `b^m = t`.
    pub b: u32,
    pub m: u32,
    /// Padded dimension (least multiple of `m` at or above `d`).
    pub d_pad: u32,
    pub rho_q: f64,
    pub rho_u: f64,
    /// Expected planted-pair collision count the filter count was sized for.
    pub kappa: f64,
}

/// One point on a query/update tradeoff curve.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TradeoffPoint {
    pub beta: f64,
    pub rho_q: f64,
    pub rho_u: f64,
    /// Approximation factor the curve was requested through, if it was.
    pub c: Option<f64>,
    /// Reserved for target-query-exponent sweeps (`rho_u` grows like
    /// `ln(1/delta)` as `beta` approaches `1/cos theta`); emitted as null.
    pub delta: Option<f64>,
}

/// Critical density `(1/sin theta)^d`, reported both as a rounded count and
/// in the log domain (the count overflows quickly in high dimensions).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CriticalDensity {
    /// `round((1/sin theta)^d)` when it fits in a `u64`.
    pub n: Option<u64>,
    /// `d * ln(1/sin theta)`, always available.
    pub ln_n: f64,
}

/// Leading-order cost logarithms normalized by `ln n` in the sparse model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CostExponents {
    /// `ln C(alpha_q) / ln n = -beta^2`.
    pub cap_q: f64,
    /// `ln C(alpha_u) / ln n = -1`.
    pub cap_u: f64,
    /// `ln W(alpha_q, alpha_u, theta) / ln n`.
    pub wedge_theta: f64,
    /// `ln W(alpha_q, alpha_u, pi/2) / ln n = -1 - beta^2`.
    pub wedge_orthogonal: f64,
}

/// Which exponent [`beta_for_target`] should hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoTarget {
    RhoQ,
    RhoU,
}

/// Angle at which an approximation factor `c` places the near neighbors:
/// `cos theta = 1 - 1/c^2`.
pub fn theta_from_c(c: f64) -> Result<Angle> {
    if !c.is_finite() || c <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "approximation factor c = {c} must be finite and exceed 1"
        )));
    }
    Angle::from_radians((1.0 - 1.0 / (c * c)).acos())
}

fn check_beta_range(cos_theta: f64, beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be finite".to_string()));
    }
    let lo = cos_theta;
    let hi = 1.0 / cos_theta;
    if beta < lo - BETA_RANGE_SLACK || beta > hi + BETA_RANGE_SLACK {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} is outside the optimal range [cos theta, 1/cos theta] = [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn check_sparse_angle(theta: Angle) -> Result<f64> {
    let t = theta.radians();
    if t <= 0.0 || t >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidParameter(format!(
            "nearby angle {t} must lie strictly inside (0, pi/2)"
        )));
    }
    Ok(theta.cos())
}

/// Shared core of the sparse exponents, parametrized directly by
/// `cos theta`. Kept sqrt-free — `rho = numerator^2 / sin^2 theta` — so the
/// closed-form extreme points (e.g. the rational spot values at `c = 2`)
/// come out exact in floating point.
fn sparse_exponents_from_cos(cos_theta: f64, beta: f64) -> Result<(f64, f64)> {
    check_beta_range(cos_theta, beta)?;
    let sin_sq = 1.0 - cos_theta * cos_theta;
    // Endpoints of the optimal range get their simplified closed forms.
    // The general quotient accumulates a couple of ulps of rounding there
    // (e.g. `beta = 1/cos theta` is itself rounded on input), while the
    // simplified forms stay exact: at `beta = cos theta` the update exponent
    // vanishes and the query exponent collapses to `sin^2 theta`; at
    // `beta = 1/cos theta` the query exponent vanishes and the update
    // exponent collapses to `tan^2 theta`.
    if beta == cos_theta {
        return Ok((sin_sq, 0.0));
    }
    if beta * cos_theta == 1.0 {
        return Ok((0.0, sin_sq / (cos_theta * cos_theta)));
    }
    let rho_q = {
        let num = 1.0 - beta * cos_theta;
        num * num / sin_sq
    };
    let rho_u = {
        let num = beta - cos_theta;
        num * num / sin_sq
    };
    Ok((rho_q.max(0.0), rho_u.max(0.0)))
}

/// Sparse-regime exponents:
/// `rho_q = ((1 - beta cos theta)/sin theta)^2`,
/// `rho_u = ((beta - cos theta)/sin theta)^2`.
///
/// Requires `0 < theta < pi/2` and `beta` in the optimal range. The
/// `O(1/ln d)` finite-size corrections are not included here; concrete cost
/// predictions use finite-dimension volumes instead (see [`plan`] and the
/// `predicted_*` helpers).
pub fn sparse_exponents(theta: Angle, beta: f64) -> Result<(f64, f64)> {
    let cos_theta = check_sparse_angle(theta)?;
    sparse_exponents_from_cos(cos_theta, beta)
}

/// [`sparse_exponents`] parametrized by the approximation factor `c`
/// (`cos theta = 1 - 1/c^2` substituted symbolically, avoiding the
/// `acos`/`cos` round trip so closed-form spot values stay exact).
pub fn sparse_exponents_for_c(c: f64, beta: f64) -> Result<(f64, f64)> {
    if !c.is_finite() || c <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "approximation factor c = {c} must be finite and exceed 1"
        )));
    }
    sparse_exponents_from_cos(1.0 - 1.0 / (c * c), beta)
}

/// Inverts the sparse exponents: the `beta` achieving a requested `rho_q`
/// (`beta = (1 - sqrt(rho_q) sin theta)/cos theta`) or `rho_u`
/// (`beta = cos theta + sqrt(rho_u) sin theta`). Errors when the requested
/// value needs a `beta` outside the optimal range.
pub fn beta_for_target(theta: Angle, target: RhoTarget, value: f64) -> Result<f64> {
    let cos_theta = check_sparse_angle(theta)?;
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "target exponent {value} must be finite and non-negative"
        )));
    }
    let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
    let beta = match target {
        RhoTarget::RhoQ => (1.0 - value.sqrt() * sin_theta) / cos_theta,
        RhoTarget::RhoU => cos_theta + value.sqrt() * sin_theta,
    };
    check_beta_range(cos_theta, beta).map_err(|_| {
        Error::InvalidParameter(format!(
            "target {value} is unachievable: it needs beta = {beta}, outside [cos theta, 1/cos theta]"
        ))
    })?;
    Ok(beta)
}

/// The four leading-order cost logs of the sparse model, normalized by
/// `ln n`: query cap, update cap, wedge at the nearby angle, and wedge at a
/// right angle (the collision rate of far points).
pub fn sparse_cost_exponents(beta: f64, theta: Angle) -> Result<CostExponents> {
    let cos_theta = check_sparse_angle(theta)?;
    check_beta_range(cos_theta, beta)?;
    let sin_sq = 1.0 - cos_theta * cos_theta;
    Ok(CostExponents {
        cap_q: -(beta * beta),
        cap_u: -1.0,
        wedge_theta: -(1.0 + beta * beta - 2.0 * beta * cos_theta) / sin_sq,
        wedge_orthogonal: -1.0 - beta * beta,
    })
}

/// Dense-regime exponents as a function of the density `n^{-2/d}` in
/// `(0, 1)`. With `delta = density` and `K = (1 + beta^2 - 2 beta cos
/// theta)/sin^2 theta`:
///
/// * `rho_q = (ln B2 - ln B1) / (-ln delta)`,
/// * `rho_u = ln B1 / ln delta - 1`,
///
/// where `B1 = 1 - (1 - delta) K` and `B2 = 1 - (1 - delta) beta^2`.
/// Errors when either log argument is non-positive: the update cost blows
/// up (`beta` too close to `1/cos theta` for this density).
pub fn dense_exponents_at_density(density: f64, theta: Angle, beta: f64) -> Result<(f64, f64)> {
    let cos_theta = check_sparse_angle(theta)?;
    check_beta_range(cos_theta, beta)?;
    if !density.is_finite() || density <= 0.0 || density >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "density {density} must lie strictly inside (0, 1)"
        )));
    }
    let sin_sq = 1.0 - cos_theta * cos_theta;
    let k = (1.0 + beta * beta - 2.0 * beta * cos_theta) / sin_sq;
    let b1 = 1.0 - (1.0 - density) * k;
    let b2 = 1.0 - (1.0 - density) * beta * beta;
    if b1 <= 0.0 || b2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "update cost blows up: non-positive log argument (B1 = {b1}, B2 = {b2}) — \
             beta = {beta} is too close to 1/cos theta at density {density}"
        )));
    }
    let ln_density = density.ln();
    let rho_q = (b2.ln() - b1.ln()) / (-ln_density);
    let rho_u = b1.ln() / ln_density - 1.0;
    Ok((rho_q.max(0.0), rho_u.max(0.0)))
}

/// Dense-regime exponents for a concrete `(n, d)`: density `n^{-2/d}`.
pub fn dense_exponents(n: u64, d: u32, theta: Angle, beta: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "dense exponents need n >= 2 (got {n})"
        )));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension d = {d} must be at least 2"
        )));
    }
    let density = (-2.0 / d as f64 * (n as f64).ln()).exp();
    dense_exponents_at_density(density, theta, beta)
}

/// Exponents at exactly the critical density `n = (1/sin theta)^d`, in
/// closed form:
///
/// * `rho_q = ln[sin^2 theta (beta cos theta + 1)/(beta cos theta - cos 2 theta)] / (2 ln(1/sin theta))`,
/// * `rho_u = ln[sin^2 theta / (1 - cot^2 theta (beta^2 - 2 beta cos theta + 1))] / (2 ln(1/sin theta))`.
///
/// Agrees with [`dense_exponents_at_density`] at `density = sin^2 theta`
/// (the two are asserted equal in tests; the code paths are independent).
pub fn critical_exponents(theta: Angle, beta: f64) -> Result<(f64, f64)> {
    let cos_theta = check_sparse_angle(theta)?;
    check_beta_range(cos_theta, beta)?;
    let sin_sq = 1.0 - cos_theta * cos_theta;
    let cos_2theta = 2.0 * cos_theta * cos_theta - 1.0;
    let denom_q = beta * cos_theta - cos_2theta;
    let inner_u = 1.0 - (cos_theta * cos_theta / sin_sq) * (beta * beta - 2.0 * beta * cos_theta + 1.0);
    if denom_q <= 0.0 || inner_u <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "update cost blows up at the critical density: non-positive log argument \
             (q-denominator = {denom_q}, u-argument = {inner_u}) for beta = {beta}"
        )));
    }
    let half_ln_inv_sin = -0.5 * sin_sq.ln(); // ln(1/sin theta)
    let rho_q = (sin_sq * (beta * cos_theta + 1.0) / denom_q).ln() / (2.0 * half_ln_inv_sin);
    let rho_u = (sin_sq / inner_u).ln() / (2.0 * half_ln_inv_sin);
    Ok((rho_q.max(0.0), rho_u.max(0.0)))
}

/// The critical density `(1/sin theta)^d` for `0 < theta <= pi/2`; `n` is
/// the rounded count when it fits, and `ln_n` is always exact.
pub fn critical_density(theta: Angle, d: u32) -> Result<CriticalDensity> {
    let t = theta.radians();
    if t <= 0.0 || t > std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidParameter(format!(
            "critical density needs 0 < theta <= pi/2 (got {t})"
        )));
    }
    if d < 1 {
        return Err(Error::InvalidParameter("dimension must be positive".to_string()));
    }
    let ln_n = -(d as f64) * theta.sin().ln();
    let n = if ln_n < 63.0 * std::f64::consts::LN_2 {
        Some(ln_n.exp().round() as u64)
    } else {
        None
    };
    Ok(CriticalDensity { n, ln_n })
}

fn curve_points_from_cos(
    cos_theta: f64,
    num_points: usize,
    regime: Regime,
    c: Option<f64>,
) -> Result<Vec<TradeoffPoint>> {
    if num_points < 2 {
        return Err(Error::InvalidParameter(
            "a tradeoff curve needs at least 2 points".to_string(),
        ));
    }
    let beta_lo = cos_theta;
    let beta_hi = 1.0 / cos_theta;
    let span = beta_hi - beta_lo;
    let mut points = Vec::with_capacity(num_points);
    for i in 0..num_points {
        // Hit both ends exactly; they are the closed-form extreme rows.
        let beta = if i == 0 {
            beta_lo
        } else if i == num_points - 1 {
            beta_hi
        } else {
            beta_lo + span * (i as f64 / (num_points - 1) as f64)
        };
        let (rho_q, rho_u) = match regime {
            Regime::Sparse => sparse_exponents_from_cos(cos_theta, beta)?,
            Regime::Critical => {
                // The critical curve's upper endpoint diverges (update cost
                // blows up at beta = 1/cos theta); stop just inside.
                let capped = beta.min(beta_hi * (1.0 - 1e-9));
                let theta = Angle::from_radians(cos_theta.acos())?;
                critical_exponents(theta, capped)?
            }
            Regime::Dense => {
                return Err(Error::InvalidParameter(
                    "a dense tradeoff curve needs a density; evaluate dense_exponents directly"
                        .to_string(),
                ))
            }
        };
        points.push(TradeoffPoint {
            beta,
            rho_q,
            rho_u,
            c,
            delta: None,
        });
    }
    Ok(points)
}

/// Sweeps `beta` uniformly across the optimal range `[cos theta, 1/cos
/// theta]` and returns the exponent curve for the requested regime (sparse
/// or critical; the dense regime needs a density and is rejected).
pub fn tradeoff_curve(theta: Angle, num_points: usize, regime: Regime) -> Result<Vec<TradeoffPoint>> {
    let cos_theta = check_sparse_angle(theta)?;
    curve_points_from_cos(cos_theta, num_points, regime, None)
}

/// [`tradeoff_curve`] parametrized by the approximation factor `c`, with
/// `cos theta = 1 - 1/c^2` substituted exactly; each emitted point records
/// `c`.
pub fn tradeoff_curve_for_c(c: f64, num_points: usize, regime: Regime) -> Result<Vec<TradeoffPoint>> {
    if !c.is_finite() || c <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "approximation factor c = {c} must be finite and exceed 1"
        )));
    }
    curve_points_from_cos(1.0 - 1.0 / (c * c), num_points, regime, Some(c))
}

/// The exact balancing threshold `alpha_u = sqrt((n^{2/d} - 1)/n^{2/d})`:
/// the update cap volume at which a point lands in roughly `t/n` filters,
/// used in every regime (at the critical density it equals `cos theta`).
pub fn balanced_alpha_u(n: u64, d: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "balancing needs n >= 2 (got {n})"
        )));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension d = {d} must be at least 2"
        )));
    }
    let pow = (2.0 / d as f64 * (n as f64).ln()).exp(); // n^{2/d}
    Ok(((pow - 1.0) / pow).sqrt())
}

/// Per-block hit-rate calibration folded into the filter count. With a
/// product code, a close pair only shares a filter when a jointly good word
/// exists in *every* block, so collisions cluster: the expected count
/// `t * W` is achieved, but the probability of at least one collision
/// decays with the block count `m`. Measured at the reference scale
/// (d = 128, n = 2^14, theta = pi/3, beta = 1), restoring ~90% recall
/// costs roughly a factor 4 in `t` per additional block, so the planner
/// requests `kappa * 4^(m-1) / W` filters. The exponential growth means
/// large `m` is only affordable at dimensions far beyond this scale.
fn product_calibration(m: u32) -> f64 {
    4.0_f64.powi(m.saturating_sub(1) as i32)
}

/// Resolves a complete plan. `m_override` forces the block count (the
/// default is `ceil(ln^2 d)` clamped to `[1, d]`); the padded dimension is
/// the least multiple of `m` at or above `d`.
///
/// The filter count target is `t_requested = ceil(kappa * 4^(m-1) / W)`
/// with `W` the finite-dimension wedge volume at the padded dimension,
/// then rounded up to the smallest perfect power `t = b^m`. Using the
/// quadrature volume rather than the asymptotic exponent, together with
/// the per-block calibration factor (see [`product_calibration`]), is what
/// makes `kappa` behave as a recall knob at concrete scales: `kappa = 4`
/// reaches ~90% planted-pair recall at the reference scale above.
pub fn plan(
    regime: Regime,
    n: u64,
    d: u32,
    theta: Angle,
    beta: f64,
    kappa: f64,
    m_override: Option<u32>,
) -> Result<PlanParams> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa = {kappa} must be positive and finite"
        )));
    }
    let cos_theta = check_sparse_angle(theta)?;
    check_beta_range(cos_theta, beta)?;
    let alpha_u = balanced_alpha_u(n, d)?;
    let alpha_q = beta * alpha_u;
    if alpha_q >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha_q = {alpha_q} reaches 1: beta = {beta} is too large for n = {n}, d = {d}"
        )));
    }
    let m = match m_override {
        Some(m) if m >= 1 => m,
        Some(m) => {
            return Err(Error::InvalidParameter(format!(
                "block count m = {m} must be at least 1"
            )))
        }
        None => default_m(d),
    };
    let d_pad = d.div_ceil(m) * m;

    let (rho_q, rho_u) = match regime {
        Regime::Sparse => sparse_exponents_from_cos(cos_theta, beta)?,
        Regime::Dense => dense_exponents(n, d, theta, beta)?,
        Regime::Critical => critical_exponents(theta, beta)?,
    };

    let w = wedge_volume(alpha_q, alpha_u, theta, d_pad)?;
    let demand = kappa * product_calibration(m) / w;
    if !(w > 0.0) || demand > MAX_FILTERS {
        return Err(Error::InvalidParameter(format!(
            "filter count overflows: wedge volume {w:.3e} at d_pad = {d_pad} with {m} blocks \
             demands more than 2^62 filters (reduce m or kappa)"
        )));
    }
    let t_requested = demand.ceil() as u64;
    let b = smallest_base(t_requested, m);
    if b > u32::MAX as u64 {
        return Err(Error::FilterCountOverflow(t_requested as u128));
    }
    let t = (b as u128).pow(m);
    if t > (1 << 62) {
        return Err(Error::FilterCountOverflow(t));
    }
    Ok(PlanParams {
        regime,
        n,
        d,
        theta,
        beta,
        alpha_q,
        alpha_u,
        t: t as u64,
        t_requested,
        b: b as u32,
        m,
        d_pad,
        rho_q,
        rho_u,
        kappa,
    })
}

/// Sparse-regime convenience wrapper around [`plan`] with the default block
/// count.
pub fn sparse_params(n: u64, d: u32, theta: Angle, beta: f64, kappa: f64) -> Result<PlanParams> {
    plan(Regime::Sparse, n, d, theta, beta, kappa, None)
}

/// Expected buckets touched per update: `t * C(alpha_u)` with the exact cap
/// volume at the padded dimension.
pub fn predicted_update_buckets(params: &PlanParams) -> Result<f64> {
    Ok(params.t as f64 * cap_volume(params.alpha_u, params.d_pad)?)
}

/// Expected candidates per query over a background of `n_points` uniformly
/// random points: `n * t * C(alpha_q) * C(alpha_u)`. For a uniformly random
/// point, averaging the query/update wedge over the point's angle gives
/// exactly the product of the two cap volumes, so this form is the correct
/// finite-dimension prediction (and has the same exponent as the
/// orthogonal-wedge approximation).
pub fn predicted_query_candidates(params: &PlanParams, n_points: u64) -> Result<f64> {
    let cq = cap_volume(params.alpha_q, params.d_pad)?;
    let cu = cap_volume(params.alpha_u, params.d_pad)?;
    Ok(n_points as f64 * params.t as f64 * cq * cu)
}

/// Expected filters a planted pair at the planning angle shares:
/// `t * W(alpha_q, alpha_u, theta)`, the quantity `kappa` targets.
pub fn predicted_planted_collisions(params: &PlanParams) -> Result<f64> {
    Ok(params.t as f64 * wedge_volume(params.alpha_q, params.alpha_u, params.theta, params.d_pad)?)
}
