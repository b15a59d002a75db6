use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix, with column signs fixed by `diag(R)`.
pub fn random_orthogonal<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator given by
/// its matrix-vector product. Stops when successive Rayleigh quotients agree
/// to `tol` (relative) or after `max_iter` products.
pub fn power_iteration<F>(dim: usize, apply: F, tol: f64, max_iter: usize) -> PowerIteration
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    // Deterministic, non-degenerate start.
    let mut v = DVector::from_fn(dim, |i, _| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut prev = 0.0;
    for it in 1..=max_iter {
        let w = apply(&v);
        let rayleigh = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return PowerIteration {
                eigenvalue: 0.0,
                iterations: it,
                converged: true,
            };
        }
        v = w / norm;
        if (rayleigh - prev).abs() <= tol * rayleigh.abs() {
            return PowerIteration {
                eigenvalue: rayleigh,
                iterations: it,
                converged: true,
            };
        }
        prev = rayleigh;
    }
    PowerIteration {
        eigenvalue: prev,
        iterations: max_iter,
        converged: false,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonError {
    #[error("Hessian not positive definite at iteration {0}")]
    NotPositiveDefinite(usize),
    #[error("no convergence after {iters} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iters: usize, grad_norm: f64 },
}

/// Damped Newton with Armijo backtracking, used to compute reference optima
/// for smooth strictly convex problems of modest dimension.
pub fn damped_newton<F, H>(
    value_grad: F,
    hessian: H,
    x0: DVector<f64>,
    grad_tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>, NewtonError>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
    H: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = x0;
    let (mut f, mut g) = value_grad(&x);
    for it in 0..max_iter {
        if g.norm() <= grad_tol {
            return Ok(x);
        }
        let chol = hessian(&x)
            .cholesky()
            .ok_or(NewtonError::NotPositiveDefinite(it))?;
        let dir = -chol.solve(&g);
        let slope = g.dot(&dir);
        let mut t = 1.0;
        loop {
            let cand = &x + t * &dir;
            let (fc, gc) = value_grad(&cand);
            if fc <= f + 1e-4 * t * slope || t < 1e-12 {
                // Near the optimum the decrease is below roundoff; accept the
                // full step and let the gradient test decide.
                x = cand;
                f = fc;
                g = gc;
                break;
            }
            t *= 0.5;
        }
    }
    if g.norm() <= grad_tol {
        Ok(x)
    } else {
        Err(NewtonError::NoConvergence {
            iters: max_iter,
            grad_norm: g.norm(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let q = random_orthogonal(12, &mut r);
        let err = (q.transpose() * &q - DMatrix::identity(12, 12)).amax();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn power_iteration_matches_symmetric_eigen() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::<f64>::from_fn(40, 15, |_, _| r.random::<f64>());
        let gram = a.transpose() * &a;
        let exact = gram.clone().symmetric_eigen().eigenvalues.max();
        let est = power_iteration(15, |v| &gram * v, 1e-12, 10_000);
        assert!(est.converged);
        assert!((est.eigenvalue - exact).abs() <= 1e-10 * exact, "{} vs {exact}", est.eigenvalue);
    }

    #[test]
    fn newton_solves_quadratic_in_one_step() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let vg = |x: &DVector<f64>| (0.5 * x.dot(&(&a * x)) - b.dot(x), &a * x - &b);
        let x = damped_newton(vg, |_| a.clone(), DVector::zeros(2), 1e-12, 5).unwrap();
        assert!((&a * &x - &b).norm() < 1e-12);
    }
}
