//! Parameter feasibility for the accelerated method and the rate constants
//! of its stepsize-sum lower bound.
//!
//! The parameters `(theta, gamma, nu)` must satisfy
//!
//! ```text
//! 4 nu theta (1 + gamma)^2 = gamma
//! 1 + 2 gamma + gamma t^2 <= t + t^2,      t = theta / (1 + theta)
//! ```
//!
//! The second relation rearranges to `gamma <= (t + t^2 - 1) / (2 + t^2)`,
//! which is positive only when `t + t^2 > 1`, i.e. `theta` exceeds the golden
//! ratio. That threshold is a consequence of the inequality, derived here
//! rather than quoted from anywhere.
//!
//! Only `theta` and `gamma` are free: `nu` is always recomputed from the
//! equality.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `(1 + sqrt 5) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Default extrapolation parameter.
pub const DEFAULT_THETA: f64 = 2.0;

const EQUALITY_TOL: f64 = 1e-12;
const INEQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("theta = {theta} is infeasible: need theta > (1 + sqrt 5)/2 = {GOLDEN_RATIO}")]
    InfeasibleTheta { theta: f64 },
    #[error("gamma = {gamma} must lie in (0, {gamma_max}] for theta = {theta}")]
    GammaOutOfRange { theta: f64, gamma: f64, gamma_max: f64 },
    #[error("initial stepsize must be positive and finite, got {0}")]
    InvalidEta0(f64),
    #[error("smoothness constant must be positive and finite, got {0}")]
    InvalidLipschitz(f64),
    #[error("parameters violate the feasibility conditions: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Extrapolation parameter.
    pub theta: f64,
    /// Stepsize growth rate.
    pub gamma: f64,
    /// Curvature safety factor.
    pub nu: f64,
    /// Initial stepsize.
    pub eta0: f64,
}

impl SolverParams {
    /// `theta = 2`, `gamma = gamma_max(2) = 1/22`, `nu` from the equality.
    pub fn defaults(eta0: f64) -> Result<Self, ParamError> {
        Self::from_theta(DEFAULT_THETA, None, eta0)
    }

    /// Builds parameters from `theta` and an optional `gamma` (defaulting to
    /// `gamma_max(theta)`); `nu` is derived.
    pub fn from_theta(theta: f64, gamma: Option<f64>, eta0: f64) -> Result<Self, ParamError> {
        let gamma_max = max_gamma(theta)?;
        let gamma = gamma.unwrap_or(gamma_max);
        if !(gamma > 0.0 && gamma <= gamma_max) {
            return Err(ParamError::GammaOutOfRange {
                theta,
                gamma,
                gamma_max,
            });
        }
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(ParamError::InvalidEta0(eta0));
        }
        Ok(Self {
            theta,
            gamma,
            nu: nu_from(theta, gamma),
            eta0,
        })
    }

    /// Parameters exactly as given, without recomputing anything. Useful for
    /// probing what happens when the feasibility conditions are broken.
    pub fn unchecked(theta: f64, gamma: f64, nu: f64, eta0: f64) -> Self {
        Self {
            theta,
            gamma,
            nu,
            eta0,
        }
    }

    pub fn with_eta0(self, eta0: f64) -> Self {
        Self { eta0, ..self }
    }

    pub fn validate(&self) -> ParamReport {
        validate(self)
    }

    /// Errors unless both relations hold and `eta0` is a positive number.
    pub fn ensure_valid(&self) -> Result<(), ParamError> {
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(ParamError::InvalidEta0(self.eta0));
        }
        let report = self.validate();
        if report.passed() {
            Ok(())
        } else {
            Err(ParamError::Invalid(report.to_string()))
        }
    }
}

/// Largest `gamma` satisfying the inequality for this `theta`.
///
/// With `t = theta / (1 + theta)`: `gamma_max = (t + t^2 - 1) / (2 + t^2)`.
pub fn max_gamma(theta: f64) -> Result<f64, ParamError> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(ParamError::InfeasibleTheta { theta });
    }
    let t = theta / (1.0 + theta);
    let num = t + t * t - 1.0;
    if num <= 0.0 {
        return Err(ParamError::InfeasibleTheta { theta });
    }
    Ok(num / (2.0 + t * t))
}

/// `nu = gamma / (4 theta (1 + gamma)^2)`.
pub fn nu_from(theta: f64, gamma: f64) -> f64 {
    gamma / (4.0 * theta * (1.0 + gamma) * (1.0 + gamma))
}

/// Per-relation feasibility report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamReport {
    /// `|4 nu theta (1+gamma)^2 - gamma| / gamma`.
    pub equality_residual: f64,
    pub equality_ok: bool,
    /// Left-hand side of the inequality.
    pub inequality_lhs: f64,
    /// Right-hand side of the inequality.
    pub inequality_rhs: f64,
    /// `rhs - lhs`; nonnegative when the inequality holds exactly.
    pub inequality_slack: f64,
    pub inequality_ok: bool,
    pub positive: bool,
}

impl ParamReport {
    pub fn passed(&self) -> bool {
        self.equality_ok && self.inequality_ok && self.positive
    }
}

impl std::fmt::Display for ParamReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "equality residual {:.3e} ({}), inequality lhs {:.17} rhs {:.17} slack {:.3e} ({})",
            self.equality_residual,
            if self.equality_ok { "ok" } else { "FAIL" },
            self.inequality_lhs,
            self.inequality_rhs,
            self.inequality_slack,
            if self.inequality_ok { "ok" } else { "FAIL" },
        )?;
        if !self.positive {
            write!(f, ", non-positive parameter")?;
        }
        Ok(())
    }
}

pub fn validate(p: &SolverParams) -> ParamReport {
    let (theta, gamma, nu) = (p.theta, p.gamma, p.nu);
    let positive = theta > 0.0 && gamma > 0.0 && nu > 0.0;
    let eq = 4.0 * nu * theta * (1.0 + gamma) * (1.0 + gamma);
    let equality_residual = if gamma != 0.0 {
        (eq - gamma).abs() / gamma.abs()
    } else {
        (eq - gamma).abs()
    };
    let t = theta / (1.0 + theta);
    let lhs = 1.0 + 2.0 * gamma + gamma * t * t;
    let rhs = t + t * t;
    let slack = rhs - lhs;
    ParamReport {
        equality_residual,
        equality_ok: equality_residual <= EQUALITY_TOL,
        inequality_lhs: lhs,
        inequality_rhs: rhs,
        inequality_slack: slack,
        inequality_ok: lhs <= rhs + INEQUALITY_TOL,
        positive,
    }
}

/// Constants `(c, m)` of the bound `sqrt(H_k) >= (c / sqrt L) (k - m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstants {
    pub c: f64,
    pub m: u64,
    pub lipschitz: f64,
}

/// The two candidates inside the `min` defining `c`.
pub fn rate_c_terms(gamma: f64, nu: f64) -> (f64, f64) {
    let sqrt_nu = nu.sqrt();
    let first = sqrt_nu / (3.0 * (2.0 + gamma));
    let root4 = (gamma * (1.0 + gamma).powi(5) * (2.0 + gamma).powi(3)).powf(0.25);
    let second = sqrt_nu * gamma / (16.0 * root4);
    (first, second)
}

pub fn rate_constants(p: &SolverParams, lipschitz: f64) -> Result<RateConstants, ParamError> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(ParamError::InvalidLipschitz(lipschitz));
    }
    let (first, second) = rate_c_terms(p.gamma, p.nu);
    let c = first.min(second);
    let arg = 4.0 * c * c / (p.gamma * p.eta0 * lipschitz);
    let log = arg.ln() / p.gamma.ln_1p();
    let m = log.max(2.0).ceil();
    Ok(RateConstants {
        c,
        m: m as u64,
        lipschitz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_gamma_examples() {
        assert!(matches!(
            max_gamma(1.5),
            Err(ParamError::InfeasibleTheta { .. })
        ));
        let g = max_gamma(2.0).unwrap();
        assert!((g - 1.0 / 22.0).abs() < 1e-16, "{g}");
        let g_big = max_gamma(1e12).unwrap();
        assert!((g_big - 1.0 / 3.0).abs() < 1e-11);
        assert!(max_gamma(GOLDEN_RATIO).is_err() || max_gamma(GOLDEN_RATIO).unwrap() < 1e-15);
    }

    #[test]
    fn nu_examples() {
        assert!((nu_from(2.0, 1.0 / 22.0) - 11.0 / 2116.0).abs() < 1e-18);
        assert_eq!(nu_from(1.0, 1.0), 1.0 / 16.0);
        assert!(nu_from(2.0, 1e-300) < 1e-300);
    }

    #[test]
    fn validate_examples() {
        let ok = SolverParams::unchecked(2.0, 1.0 / 22.0, 11.0 / 2116.0, 1.0);
        assert!(ok.validate().passed());

        let bad = SolverParams::unchecked(1.0, 1.0, 1.0 / 16.0, 1.0).validate();
        assert!(bad.equality_ok);
        assert!(!bad.inequality_ok);
        assert!((bad.inequality_lhs - 3.25).abs() < 1e-15);
        assert!((bad.inequality_rhs - 0.75).abs() < 1e-15);

        let perturbed = SolverParams::unchecked(2.0, 1.0 / 22.0, 11.0 / 2116.0 * (1.0 + 1e-6), 1.0);
        let r = perturbed.validate();
        assert!(!r.equality_ok);
        assert!(r.inequality_ok);
    }

    #[test]
    fn defaults_are_theta_two() {
        let p = SolverParams::defaults(0.1).unwrap();
        assert_eq!(p.theta, 2.0);
        assert!((p.gamma - 1.0 / 22.0).abs() < 1e-16);
        assert!((p.nu - 11.0 / 2116.0).abs() < 1e-17);
        assert!(p.ensure_valid().is_ok());
    }

    #[test]
    fn gamma_override_recomputes_nu() {
        let p = SolverParams::from_theta(2.0, Some(0.01), 1.0).unwrap();
        assert_eq!(p.nu, nu_from(2.0, 0.01));
        assert!(p.validate().passed());
        assert!(SolverParams::from_theta(2.0, Some(0.05), 1.0).is_err());
        assert!(SolverParams::from_theta(2.0, None, 0.0).is_err());
    }

    #[test]
    fn rate_constants_examples() {
        let p = SolverParams::defaults(1.0).unwrap();
        let (first, second) = rate_c_terms(p.gamma, p.nu);
        assert!(second < first);
        let rc = rate_constants(&p, 1.0).unwrap();
        assert!((rc.c - 2.4534527523194894e-4).abs() < 1e-15, "{}", rc.c);
        assert_eq!(rc.m, 2);

        // ln_{1+gamma}(4c^2 / (gamma 1e-12)) = 348.30...
        let rc = rate_constants(&p.with_eta0(1e-12), 1.0).unwrap();
        assert_eq!(rc.m, 349);

        let rc = rate_constants(&p.with_eta0(1e6), 1e6).unwrap();
        assert_eq!(rc.m, 2);

        assert!(rate_constants(&p, 0.0).is_err());
        assert!(rate_constants(&p, -1.0).is_err());
    }
}
