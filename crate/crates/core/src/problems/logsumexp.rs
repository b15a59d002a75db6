use super::{damped_newton, rng, Problem, ProblemError};
use crate::oracle::{Oracle, Point};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// `f(x) = mu log sum_i exp((<a_i, x> - b_i) / mu)`.
///
/// Smooth with `L <= max_i |a_i|^2 / mu`; the local curvature ranges from
/// nearly zero (one dominant term) to that bound (terms balanced), which makes
/// it a good stress test for adaptive stepsizes.
#[derive(Debug, Clone)]
pub struct LogSumExpOracle {
    /// Rows are the `a_i`.
    a: DMatrix<f64>,
    b: DVector<f64>,
    mu: f64,
}

impl LogSumExpOracle {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, mu: f64) -> Self {
        assert_eq!(a.nrows(), b.len());
        Self { a, b, mu }
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.a
            .row_iter()
            .map(|r| r.norm_squared())
            .fold(0.0, f64::max)
            / self.mu
    }

    /// Softmax weights and the shifted log-sum-exp value.
    fn weights(&self, x: &Point) -> (f64, DVector<f64>) {
        let z = (&self.a * x - &self.b) / self.mu;
        let zmax = z.max();
        let e = z.map(|v| (v - zmax).exp());
        let s = e.sum();
        (self.mu * (zmax + s.ln()), e / s)
    }

    pub fn hessian(&self, x: &Point) -> DMatrix<f64> {
        let (_, p) = self.weights(x);
        let ap = self.a.transpose() * &p;
        let weighted = DMatrix::from_fn(self.a.nrows(), self.a.ncols(), |i, j| p[i] * self.a[(i, j)]);
        (self.a.transpose() * weighted - &ap * ap.transpose()) / self.mu
    }

    /// Minimizer by damped Newton from the origin.
    pub fn solve_reference(&self) -> Result<(Point, f64), ProblemError> {
        let x = damped_newton(
            |x| self.value_grad(x),
            |x| self.hessian(x),
            Point::zeros(self.a.ncols()),
            1e-12,
            500,
        )?;
        let f = self.value_grad(&x).0;
        Ok((x, f))
    }
}

impl Oracle for LogSumExpOracle {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value_grad(&self, x: &Point) -> (f64, Point) {
        let (value, p) = self.weights(x);
        (value, self.a.transpose() * p)
    }

    /// `mu log1p( sum_i p_i(y) expm1(<a_i, x - y> / mu) )`.
    fn value_diff(&self, x: &Point, y: &Point) -> Option<f64> {
        let (fy, p) = self.weights(y);
        let dz = (&self.a * (x - y)) / self.mu;
        if dz.max() >= 30.0 {
            return Some(self.weights(x).0 - fy);
        }
        let s: f64 = p.iter().zip(dz.iter()).map(|(p, d)| p * d.exp_m1()).sum();
        Some(self.mu * s.ln_1p())
    }
}

/// Seeded log-sum-exp instance. Terms come in antipodal pairs `(a, -a)` with
/// independent offsets (an odd count adds one unpaired term), so the objective
/// is bounded below and has a minimizer whenever the `a_i` span `R^d`.
/// The minimizer is computed by Newton's method and stored as the reference
/// optimum.
pub fn logsumexp_problem(
    seed: u64,
    dim: usize,
    n_terms: usize,
    smoothing: f64,
) -> Result<Problem, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    if n_terms < 2 {
        return Err(ProblemError::TooFewTerms(n_terms));
    }
    if !(smoothing > 0.0) || !smoothing.is_finite() {
        return Err(ProblemError::InvalidSmoothing(smoothing));
    }
    let mut r = rng(seed);
    let mut a = DMatrix::<f64>::zeros(n_terms, dim);
    let half = n_terms / 2;
    for i in 0..half {
        for j in 0..dim {
            let v: f64 = StandardNormal.sample(&mut r);
            a[(i, j)] = v;
            a[(i + half, j)] = -v;
        }
    }
    if n_terms % 2 == 1 {
        for j in 0..dim {
            a[(n_terms - 1, j)] = StandardNormal.sample(&mut r);
        }
    }
    let b = DVector::from_fn(n_terms, |_, _| StandardNormal.sample(&mut r));
    let oracle = LogSumExpOracle::new(a, b, smoothing);
    let l = oracle.lipschitz_bound();
    let reference = oracle.solve_reference().ok();
    let mut problem = Problem {
        label: format!("logsumexp(d={dim},n={n_terms},mu={smoothing:e},seed={seed})"),
        oracle: Arc::new(oracle),
        lipschitz: Some(l),
        f_star: None,
        x_star: None,
    };
    if let Some((x, f)) = reference {
        problem = problem.with_optimum(x, f);
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair_at_origin() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let o = LogSumExpOracle::new(a, DVector::zeros(2), 1.0);
        let (v, g) = o.value_grad(&Point::zeros(1));
        assert!((v - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn shifted_exponent_does_not_overflow() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let o = LogSumExpOracle::new(a, DVector::zeros(2), 1e-3);
        let (v, g) = o.value_grad(&Point::from_element(1, 1e4));
        assert!((v - 1e4).abs() < 1e-9);
        assert!((g[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn value_diff_matches_direct_difference() {
        let p = logsumexp_problem(5, 4, 9, 0.3).unwrap();
        let x = crate::problems::seeded_point(1, 4, 1.0);
        let y = crate::problems::seeded_point(2, 4, 1.0);
        let o = p.oracle.as_ref();
        let direct = o.value_grad(&x).0 - o.value_grad(&y).0;
        assert!((o.value_diff(&x, &y).unwrap() - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        let far = 100.0 * &x;
        let direct = o.value_grad(&far).0 - o.value_grad(&y).0;
        assert!((o.value_diff(&far, &y).unwrap() - direct).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn reference_optimum_is_stationary() {
        let p = logsumexp_problem(3, 5, 12, 0.5).unwrap();
        let xs = p.x_star.clone().expect("reference optimum");
        let g = p.oracle.value_grad(&xs).1;
        assert!(g.norm() <= 1e-8 * (1.0 + p.lipschitz.unwrap()));
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(logsumexp_problem(0, 2, 1, 1.0), Err(ProblemError::TooFewTerms(1))));
        assert!(matches!(
            logsumexp_problem(0, 2, 4, 0.0),
            Err(ProblemError::InvalidSmoothing(_))
        ));
    }
}
