use super::{rng, Problem, ProblemError};
use crate::oracle::{Oracle, Point};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// `f(x) = |A x - b|^2 / (2n)` for an `n x d` matrix `A`.
#[derive(Debug, Clone)]
pub struct LeastSquaresOracle {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LeastSquaresOracle {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), b.len());
        assert!(a.nrows() > 0);
        Self { a, b }
    }

    fn scale(&self) -> f64 {
        1.0 / self.a.nrows() as f64
    }

    /// Largest eigenvalue of `A^T A / n`, from a dense eigendecomposition.
    pub fn lipschitz(&self) -> f64 {
        let gram = self.a.transpose() * &self.a * self.scale();
        gram.symmetric_eigen().eigenvalues.max().max(0.0)
    }

    /// Minimum-norm minimizer via the SVD, and the optimal value.
    pub fn solve_reference(&self) -> (Point, f64) {
        let svd = self.a.clone().svd(true, true);
        let x = svd
            .solve(&self.b, 1e-12 * svd.singular_values.max())
            .expect("both factors were requested");
        let f = self.value_grad(&x).0;
        (x, f)
    }
}

impl Oracle for LeastSquaresOracle {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value_grad(&self, x: &Point) -> (f64, Point) {
        let r = &self.a * x - &self.b;
        let g = self.a.tr_mul(&r) * self.scale();
        (0.5 * self.scale() * r.norm_squared(), g)
    }

    /// `(r_x - r_y)^T (r_x + r_y) / (2n)` with `r_x - r_y = A (x - y)`.
    fn value_diff(&self, x: &Point, y: &Point) -> Option<f64> {
        let d = &self.a * (x - y);
        let s = &self.a * (x + y) - 2.0 * &self.b;
        Some(0.5 * self.scale() * d.dot(&s))
    }
}

/// Seeded least-squares instance: Gaussian `A` (`n x d`), `b = A x_true + noise e`
/// with standard normal `x_true` and `e`. The minimizer is the minimum-norm
/// least-squares solution.
pub fn least_squares_problem(seed: u64, n: usize, dim: usize, noise: f64) -> Result<Problem, ProblemError> {
    if dim == 0 || n == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(ProblemError::InvalidNoise(noise));
    }
    let mut r = rng(seed);
    let a = DMatrix::from_fn(n, dim, |_, _| StandardNormal.sample(&mut r));
    let x_true = Point::from_fn(dim, |_, _| StandardNormal.sample(&mut r));
    let e = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
    let b = &a * x_true + noise * e;
    let oracle = LeastSquaresOracle::new(a, b);
    let (x_star, f_star) = oracle.solve_reference();
    Ok(Problem {
        label: format!("least_squares(n={n},d={dim},noise={noise:e},seed={seed})"),
        lipschitz: Some(oracle.lipschitz()),
        oracle: Arc::new(oracle),
        f_star: Some(f_star),
        x_star: Some(x_star),
    })
}
