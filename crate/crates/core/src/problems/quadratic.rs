use super::{linalg::random_orthogonal, rng, Problem, ProblemError};
use crate::oracle::{Oracle, Point};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// `f(x) = 1/2 x^T A x - b^T x + c` with `b = A x_star` and `c = 1/2 b^T x_star`,
/// i.e. `f(x) = 1/2 (x - x_star)^T A (x - x_star)` and `f_star = 0`.
///
/// Values are computed in the residual form so that gaps near the optimum keep
/// full relative precision.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    a: DMatrix<f64>,
    b: Point,
    x_star: Point,
}

impl QuadraticOracle {
    /// `a` must be symmetric positive semidefinite.
    pub fn new(a: DMatrix<f64>, x_star: Point) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        assert_eq!(a.nrows(), x_star.len());
        let b = &a * &x_star;
        Self { a, b, x_star }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear_term(&self) -> &Point {
        &self.b
    }

    pub fn x_star(&self) -> &Point {
        &self.x_star
    }

    /// `1/2 x^T A x - b^T x + 1/2 b^T x_star`, evaluated term by term.
    pub fn value_expanded(&self, x: &Point) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x) + 0.5 * self.b.dot(&self.x_star)
    }
}

impl Oracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.x_star.len()
    }

    fn value_grad(&self, x: &Point) -> (f64, Point) {
        let r = x - &self.x_star;
        let g = &self.a * &r;
        (0.5 * r.dot(&g), g)
    }

    /// `1/2 (x - y)^T A (x + y - 2 x_star)`.
    fn value_diff(&self, x: &Point, y: &Point) -> Option<f64> {
        let d = x - y;
        let s = (x - &self.x_star) + (y - &self.x_star);
        Some(0.5 * d.dot(&(&self.a * s)))
    }
}

/// Seeded quadratic with eigenvalues log-spaced over `[1, cond]` in a random
/// orthogonal basis; `L = cond`. The minimizer has i.i.d. standard normal
/// coordinates, so the initial error from `x0 = 0` is spread evenly across the
/// spectrum. A one-dimensional instance has the single eigenvalue `cond`.
pub fn make_quadratic(seed: u64, dim: usize, cond: f64) -> Result<Problem, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(ProblemError::InvalidCondition(cond));
    }
    let mut r = rng(seed);
    let q = random_orthogonal(dim, &mut r);
    let eig: Vec<f64> = if dim == 1 {
        vec![cond]
    } else {
        (0..dim)
            .map(|i| cond.powf(i as f64 / (dim - 1) as f64))
            .collect()
    };
    let scaled = DMatrix::from_fn(dim, dim, |i, j| q[(i, j)] * eig[j]);
    let mut a = scaled * q.transpose();
    // Symmetrize away roundoff.
    a = 0.5 * (&a + a.transpose());
    let x_star = Point::from_fn(dim, |_, _| StandardNormal.sample(&mut r));
    let oracle = QuadraticOracle::new(a, x_star.clone());
    Ok(Problem {
        label: format!("quadratic(d={dim},cond={cond:e},seed={seed})"),
        oracle: Arc::new(oracle),
        lipschitz: Some(cond),
        f_star: Some(0.0),
        x_star: Some(x_star),
    })
}

/// `f(x) = 1/2 sum_i w_i (x_i - x_star_i)^2` with the given nonnegative
/// weights; `L = max w_i`. With `weights = [1]` and `x_star = [0]` this is the
/// one-dimensional `x^2 / 2`.
pub fn diagonal_quadratic(weights: &[f64], x_star: Point) -> Result<Problem, ProblemError> {
    if weights.is_empty() {
        return Err(ProblemError::ZeroDimension);
    }
    if x_star.len() != weights.len() {
        return Err(ProblemError::DimensionMismatch {
            expected: weights.len(),
            got: x_star.len(),
        });
    }
    let top = weights.iter().cloned().fold(0.0, f64::max);
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || top == 0.0 {
        return Err(ProblemError::InvalidWeights);
    }
    let a = DMatrix::from_diagonal(&Point::from_column_slice(weights));
    Ok(Problem {
        label: format!("diagonal(d={})", weights.len()),
        oracle: Arc::new(QuadraticOracle::new(a, x_star.clone())),
        lipschitz: Some(top),
        f_star: Some(0.0),
        x_star: Some(x_star),
    })
}
