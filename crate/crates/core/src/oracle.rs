//! First-order oracle abstraction and the small amount of dense vector
//! plumbing the solvers share.
//!
//! An [`Oracle`] returns the objective value and gradient in one call. Every
//! call that a solver makes goes through [`evaluate`], which checks the
//! dimension, rejects non-finite output and bumps the run's [`EvalCounter`].

use nalgebra::DVector;
use thiserror::Error;

/// A point in `R^d`.
pub type Point = DVector<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension mismatch: oracle expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("query point has non-finite coordinates")]
    NonFiniteInput,
    #[error("oracle returned a non-finite value or gradient")]
    NonFiniteOutput,
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}

/// Objective value and gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub gradient: Point,
}

/// A smooth convex objective that can report `f(x)` and `grad f(x)` together.
///
/// Implementations are immutable after construction; all run state lives in the
/// caller, so one oracle can be shared across concurrent runs.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Raw evaluation. Callers should go through [`evaluate`] instead.
    fn value_grad(&self, x: &Point) -> (f64, Point);

    /// `f(x) - f(y)` computed without subtracting two rounded values, for
    /// objectives that can express the difference directly in terms of
    /// `x - y`. Used by diagnostics, never by solvers. `None` means the
    /// objective offers no such formula.
    fn value_diff(&self, _x: &Point, _y: &Point) -> Option<f64> {
        None
    }
}

impl<O: Oracle + ?Sized> Oracle for std::sync::Arc<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value_grad(&self, x: &Point) -> (f64, Point) {
        (**self).value_grad(x)
    }
    fn value_diff(&self, x: &Point, y: &Point) -> Option<f64> {
        (**self).value_diff(x, y)
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value_grad(&self, x: &Point) -> (f64, Point) {
        (**self).value_grad(x)
    }
    fn value_diff(&self, x: &Point, y: &Point) -> Option<f64> {
        (**self).value_diff(x, y)
    }
}

/// Number of combined value+gradient evaluations charged to a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct EvalCounter(u64);

impl EvalCounter {
    pub fn new() -> Self {
        Self(0)
    }

    pub fn get(&self) -> u64 {
        self.0
    }

    fn bump(&mut self) {
        self.0 += 1;
    }
}

/// A point together with its cached oracle output.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub x: Point,
    pub value: f64,
    pub gradient: Point,
}

impl EvalPoint {
    pub fn new(x: Point, result: OracleResult) -> Self {
        Self {
            x,
            value: result.value,
            gradient: result.gradient,
        }
    }
}

/// Evaluates `oracle` at `x`, charging one unit to `counter`.
pub fn evaluate<O: Oracle + ?Sized>(
    oracle: &O,
    x: &Point,
    counter: &mut EvalCounter,
) -> Result<OracleResult, OracleError> {
    let result = evaluate_uncounted(oracle, x)?;
    counter.bump();
    Ok(result)
}

/// Same checks as [`evaluate`] without touching any counter. Used by
/// diagnostics and monitoring, which must not perturb a solver's budget.
pub fn evaluate_uncounted<O: Oracle + ?Sized>(
    oracle: &O,
    x: &Point,
) -> Result<OracleResult, OracleError> {
    if x.len() != oracle.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: oracle.dim(),
            got: x.len(),
        });
    }
    if !all_finite(x) {
        return Err(OracleError::NonFiniteInput);
    }
    let (value, gradient) = oracle.value_grad(x);
    if gradient.len() != x.len() {
        return Err(OracleError::DimensionMismatch {
            expected: x.len(),
            got: gradient.len(),
        });
    }
    if !value.is_finite() || !all_finite(&gradient) {
        return Err(OracleError::NonFiniteOutput);
    }
    Ok(OracleResult { value, gradient })
}

/// Evaluates and wraps the result as an [`EvalPoint`].
pub fn evaluate_point<O: Oracle + ?Sized>(
    oracle: &O,
    x: Point,
    counter: &mut EvalCounter,
) -> Result<EvalPoint, OracleError> {
    let r = evaluate(oracle, &x, counter)?;
    Ok(EvalPoint::new(x, r))
}

pub fn all_finite(x: &Point) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Default finite-difference step: `1e-5 * max(1, |x|_inf)`.
pub fn default_fd_step(x: &Point) -> f64 {
    1e-5 * x.amax().max(1.0)
}

/// Largest relative error between the oracle gradient and a central
/// finite-difference estimate, over all coordinates.
///
/// The relative error for coordinate `i` is `|fd_i - g_i| / max(1, |g_i|)`.
/// Evaluations made here are not charged to any solver counter.
pub fn finite_diff_check<O: Oracle + ?Sized>(
    oracle: &O,
    x: &Point,
    h: f64,
) -> Result<f64, OracleError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(OracleError::InvalidStep(h));
    }
    let base = evaluate_uncounted(oracle, x)?;
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let fp = evaluate_uncounted(oracle, &probe)?.value;
        probe[i] = xi - h;
        let fm = evaluate_uncounted(oracle, &probe)?.value;
        probe[i] = xi;
        let fd = (fp - fm) / (2.0 * h);
        let g = base.gradient[i];
        let err = (fd - g).abs() / g.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct HalfSquare(usize);

    impl Oracle for HalfSquare {
        fn dim(&self) -> usize {
            self.0
        }
        fn value_grad(&self, x: &Point) -> (f64, Point) {
            (0.5 * x.norm_squared(), x.clone())
        }
    }

    struct Broken;

    impl Oracle for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn value_grad(&self, x: &Point) -> (f64, Point) {
            (f64::NAN, x.clone())
        }
    }

    #[test]
    fn half_square_values() {
        let mut c = EvalCounter::new();
        let r = evaluate(&HalfSquare(2), &Point::from_vec(vec![3.0, 4.0]), &mut c).unwrap();
        assert_eq!(r.value, 12.5);
        assert_eq!(r.gradient.as_slice(), &[3.0, 4.0]);
        let r = evaluate(&HalfSquare(2), &Point::zeros(2), &mut c).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.gradient.as_slice(), &[0.0, 0.0]);
        assert_eq!(c.get(), 2);
    }

    #[test]
    fn dimension_mismatch_is_not_counted() {
        let mut c = EvalCounter::new();
        let err = evaluate(&HalfSquare(3), &Point::zeros(2), &mut c).unwrap_err();
        assert_eq!(err, OracleError::DimensionMismatch { expected: 3, got: 2 });
        assert_eq!(c.get(), 0);
    }

    #[test]
    fn non_finite_output_rejected() {
        let mut c = EvalCounter::new();
        let err = evaluate(&Broken, &Point::zeros(1), &mut c).unwrap_err();
        assert_eq!(err, OracleError::NonFiniteOutput);
        let err = evaluate(&HalfSquare(1), &Point::from_element(1, f64::INFINITY), &mut c)
            .unwrap_err();
        assert_eq!(err, OracleError::NonFiniteInput);
    }

    #[test]
    fn fd_check_exact_on_quadratic() {
        let x = Point::from_vec(vec![0.3, -1.7, 12.0]);
        let err = finite_diff_check(&HalfSquare(3), &x, 1e-6).unwrap();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn fd_check_rejects_zero_step() {
        let x = Point::zeros(2);
        assert_eq!(
            finite_diff_check(&HalfSquare(2), &x, 0.0),
            Err(OracleError::InvalidStep(0.0))
        );
    }

    #[test]
    fn evaluation_is_deterministic() {
        let x = Point::from_vec(vec![0.1, 0.2]);
        let a = evaluate_uncounted(&HalfSquare(2), &x).unwrap();
        let b = evaluate_uncounted(&HalfSquare(2), &x).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.gradient, b.gradient);
    }
}
