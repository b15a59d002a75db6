//! Bregman divergence and local inverse-curvature estimates.
//!
//! `lambda_option2` is the Bregman-based secant estimate used by the solver;
//! `lambda_option1` is the plain ratio of norms. Both return `+inf` when the
//! two gradients coincide (up to the configured relative guard), which is the
//! first-step situation in the solver where the two points are identical.

use crate::oracle::EvalPoint;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("dimension mismatch between curvature points ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("negative Bregman divergence {bregman:e} exceeds convexity tolerance {tolerance:e}")]
    NonConvex { bregman: f64, tolerance: f64 },
    #[error("zero curvature estimate with distinct gradients (Bregman divergence {bregman:e})")]
    ZeroEstimate { bregman: f64 },
}

/// A value in `[0, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const INFINITY: ExtendedReal = ExtendedReal(f64::INFINITY);

    /// Panics on negative or NaN input.
    pub fn finite(v: f64) -> Self {
        assert!(v >= 0.0 && v.is_finite(), "ExtendedReal::finite({v})");
        Self(v)
    }

    /// `None` maps to `+inf`.
    pub fn from_option(v: Option<f64>) -> Self {
        v.map_or(Self::INFINITY, Self::finite)
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// The underlying `f64`, `f64::INFINITY` for `+inf`.
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn as_finite(self) -> Option<f64> {
        if self.is_infinite() {
            None
        } else {
            Some(self.0)
        }
    }

    pub fn min(self, other: Self) -> Self {
        Self(self.0.min(other.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvexityMode {
    /// Clamp small negative divergences and fall back to the norm ratio when
    /// the Bregman estimate collapses to zero.
    #[default]
    Lenient,
    /// Raise on negative divergences beyond tolerance and on zero estimates.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureConfig {
    /// Relative threshold on `|g_x - g_z|^2` below which the gradients are
    /// treated as equal.
    pub guard: f64,
    /// Relative threshold on `|x - z|` below which the two points are
    /// treated as coincident (their difference is rounding error, and so is
    /// the gradient difference).
    pub coincidence: f64,
    pub mode: ConvexityMode,
    pub tol_convexity: f64,
    /// Multiple of machine epsilon used by [`bregman_estimate`] to decide
    /// when the value-based divergence is lost in cancellation. Zero disables
    /// the substitution.
    pub roundoff_factor: f64,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        Self {
            guard: 1e2 * f64::EPSILON * f64::EPSILON,
            coincidence: 1e2 * f64::EPSILON,
            mode: ConvexityMode::Lenient,
            tol_convexity: 1e-10,
            roundoff_factor: 1e3,
        }
    }
}

impl CurvatureConfig {
    pub fn strict() -> Self {
        Self {
            mode: ConvexityMode::Strict,
            ..Self::default()
        }
    }
}

fn check_dims(x: &EvalPoint, z: &EvalPoint) -> Result<(), CurvatureError> {
    if x.x.len() != z.x.len() || x.gradient.len() != z.gradient.len() {
        return Err(CurvatureError::DimensionMismatch(x.x.len(), z.x.len()));
    }
    Ok(())
}

/// `B_f(x; z) = f(x) - f(z) - <grad f(z), x - z>`.
pub fn bregman(x: &EvalPoint, z: &EvalPoint) -> Result<f64, CurvatureError> {
    check_dims(x, z)?;
    Ok(x.value - z.value - z.gradient.dot(&(&x.x - &z.x)))
}

/// `B_f(x; z)` as used by the Option II estimate.
///
/// The value-based formula loses all precision once `B_f` falls below the
/// rounding error of `f(x) - f(z)`, which happens routinely with tiny
/// stepsizes or near convergence. Since `B_f(x; z) + B_f(z; x) = <g_x - g_z, x - z>`,
/// the symmetric form `1/2 <g_x - g_z, x - z>` differs from `B_f(x; z)` only at
/// third order in `|x - z|` and is computed from gradients alone. It is used
/// whenever it agrees with the direct value to within the rounding bound
/// `roundoff_factor * eps * (|f(x)| + |f(z)| + sum |g_z,i (x_i - z_i)|)`.
/// For quadratics the two coincide in exact arithmetic.
pub fn bregman_estimate(
    x: &EvalPoint,
    z: &EvalPoint,
    cfg: &CurvatureConfig,
) -> Result<f64, CurvatureError> {
    bregman_estimate_with_diff(x, z, None, cfg)
}

/// [`bregman_estimate`] with `f(x) - f(z)` supplied by the caller (for
/// example from [`crate::oracle::Oracle::value_diff`]); `None` uses the cached
/// values.
pub fn bregman_estimate_with_diff(
    x: &EvalPoint,
    z: &EvalPoint,
    value_diff: Option<f64>,
    cfg: &CurvatureConfig,
) -> Result<f64, CurvatureError> {
    check_dims(x, z)?;
    let dx = &x.x - &z.x;
    let inner = z.gradient.dot(&dx);
    let (diff, diff_scale) = match value_diff {
        Some(d) => (d, d.abs()),
        None => (x.value - z.value, x.value.abs() + z.value.abs()),
    };
    let direct = diff - inner;
    if cfg.roundoff_factor <= 0.0 {
        return Ok(direct);
    }
    let symmetric = 0.5 * (&x.gradient - &z.gradient).dot(&dx);
    let inner_abs: f64 = z.gradient.iter().zip(dx.iter()).map(|(g, d)| (g * d).abs()).sum();
    let noise = cfg.roundoff_factor * f64::EPSILON * (diff_scale + inner_abs);
    if (direct - symmetric).abs() <= noise {
        Ok(symmetric)
    } else {
        Ok(direct)
    }
}

/// Returns `|g_x - g_z|^2`, or `None` when the points or their gradients are
/// to be treated as equal.
///
/// Both tests are symmetric in the two points.
fn guarded_grad_diff_sq(x: &EvalPoint, z: &EvalPoint, cfg: &CurvatureConfig) -> Option<f64> {
    let dx = (&x.x - &z.x).norm();
    if dx <= cfg.coincidence * x.x.norm().max(z.x.norm()) {
        return None;
    }
    let diff_sq = (&x.gradient - &z.gradient).norm_squared();
    let scale = 1f64
        .max(x.gradient.norm_squared())
        .max(z.gradient.norm_squared());
    if diff_sq <= cfg.guard * scale {
        None
    } else {
        Some(diff_sq)
    }
}

/// Norm-ratio estimate `|x - z| / |grad f(x) - grad f(z)|`.
pub fn lambda_option1(
    x: &EvalPoint,
    z: &EvalPoint,
    cfg: &CurvatureConfig,
) -> Result<ExtendedReal, CurvatureError> {
    check_dims(x, z)?;
    match guarded_grad_diff_sq(x, z, cfg) {
        None => Ok(ExtendedReal::INFINITY),
        Some(d) => Ok(ExtendedReal::finite((&x.x - &z.x).norm() / d.sqrt())),
    }
}

/// Bregman-based estimate `2 B_f(x; z) / |grad f(x) - grad f(z)|^2`.
pub fn lambda_option2(
    x: &EvalPoint,
    z: &EvalPoint,
    cfg: &CurvatureConfig,
) -> Result<ExtendedReal, CurvatureError> {
    check_dims(x, z)?;
    let Some(diff_sq) = guarded_grad_diff_sq(x, z, cfg) else {
        return Ok(ExtendedReal::INFINITY);
    };
    let b = bregman_estimate(x, z, cfg)?;
    let tolerance = cfg.tol_convexity * (1.0 + x.value.abs() + z.value.abs());
    if cfg.mode == ConvexityMode::Strict && b < -tolerance {
        return Err(CurvatureError::NonConvex {
            bregman: b,
            tolerance,
        });
    }
    let ratio = 2.0 * b.max(0.0) / diff_sq;
    if ratio > 0.0 {
        return Ok(ExtendedReal::finite(ratio));
    }
    match cfg.mode {
        ConvexityMode::Strict => Err(CurvatureError::ZeroEstimate { bregman: b }),
        ConvexityMode::Lenient => lambda_option1(x, z, cfg),
    }
}

/// `min{ Lambda(x_bar_next; x_tilde_cur), Lambda(x_bar_next; x_tilde_next) }`.
pub fn local_curvature(
    x_bar_next: &EvalPoint,
    x_tilde_cur: &EvalPoint,
    x_tilde_next: &EvalPoint,
    cfg: &CurvatureConfig,
) -> Result<ExtendedReal, CurvatureError> {
    let a = lambda_option2(x_bar_next, x_tilde_cur, cfg)?;
    let b = lambda_option2(x_bar_next, x_tilde_next, cfg)?;
    Ok(a.min(b))
}
