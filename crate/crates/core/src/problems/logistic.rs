use super::{damped_newton, power_iteration, Problem, ProblemError, SparseDataset};
use crate::oracle::{Oracle, Point};
use nalgebra::DMatrix;
use std::sync::Arc;

/// `f(w) = (1/n) sum_i log(1 + exp(-y_i <a_i, w>)) + (reg/2) |w|^2`.
#[derive(Debug, Clone)]
pub struct LogisticOracle {
    data: SparseDataset,
    reg: f64,
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-t))` without overflow.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticOracle {
    pub fn new(data: SparseDataset, reg: f64) -> Self {
        Self { data, reg }
    }

    pub fn data(&self) -> &SparseDataset {
        &self.data
    }

    /// Largest eigenvalue of `A^T A` by power iteration.
    pub fn gram_spectral_norm(&self) -> f64 {
        let d = self.data.n_features;
        let est = power_iteration(
            d,
            |v| {
                let mut out = Point::zeros(d);
                for row in &self.data.rows {
                    let s: f64 = row.iter().map(|&(j, x)| x * v[j - 1]).sum();
                    for &(j, x) in row {
                        out[j - 1] += s * x;
                    }
                }
                out
            },
            1e-10,
            10_000,
        );
        est.eigenvalue
    }

    /// `L = |A^T A|_2 / (4 n) + reg`.
    pub fn lipschitz(&self) -> f64 {
        self.gram_spectral_norm() / (4.0 * self.data.len() as f64) + self.reg
    }

    pub fn hessian(&self, w: &Point) -> DMatrix<f64> {
        let d = self.data.n_features;
        let n = self.data.len() as f64;
        let mut h = DMatrix::<f64>::identity(d, d) * self.reg;
        for (row, &y) in self.data.rows.iter().zip(&self.data.labels) {
            let z = y * row.iter().map(|&(j, x)| x * w[j - 1]).sum::<f64>();
            let s = sigmoid(z);
            let c = s * (1.0 - s) / n;
            for &(i, xi) in row {
                for &(j, xj) in row {
                    h[(i - 1, j - 1)] += c * xi * xj;
                }
            }
        }
        h
    }
}

impl Oracle for LogisticOracle {
    fn dim(&self) -> usize {
        self.data.n_features
    }

    fn value_grad(&self, w: &Point) -> (f64, Point) {
        let n = self.data.len() as f64;
        let mut value = 0.0;
        let mut grad = Point::zeros(self.data.n_features);
        for (row, &y) in self.data.rows.iter().zip(&self.data.labels) {
            let z = y * row.iter().map(|&(j, x)| x * w[j - 1]).sum::<f64>();
            value += softplus(-z);
            // d/dz log(1 + exp(-z)) = -sigmoid(-z)
            let coef = -y * sigmoid(-z) / n;
            for &(j, x) in row {
                grad[j - 1] += coef * x;
            }
        }
        value /= n;
        value += 0.5 * self.reg * w.norm_squared();
        grad += self.reg * w;
        (value, grad)
    }

    /// Per sample, `softplus(u) - softplus(v) = log1p(sigmoid(v) expm1(u - v))`
    /// with `u - v` formed from `x - y`.
    fn value_diff(&self, x: &Point, y: &Point) -> Option<f64> {
        let n = self.data.len() as f64;
        let d = x - y;
        let mut acc = 0.0;
        for (row, &label) in self.data.rows.iter().zip(&self.data.labels) {
            let dot = |w: &Point| row.iter().map(|&(j, v)| v * w[j - 1]).sum::<f64>();
            let v = -label * dot(y);
            let delta = -label * dot(&d);
            acc += if delta < 30.0 {
                (sigmoid(v) * delta.exp_m1()).ln_1p()
            } else {
                softplus(v + delta) - softplus(v)
            };
        }
        let s = x + y;
        Some(acc / n + 0.5 * self.reg * d.dot(&s))
    }
}

/// Logistic regression problem. `f_star` is unknown; use
/// [`Problem::with_optimum`] together with [`LogisticOracle::solve_reference`]
/// when a reference optimum is needed.
pub fn logistic_problem(data: SparseDataset, reg: f64) -> Result<Problem, ProblemError> {
    if data.is_empty() {
        return Err(ProblemError::EmptyDataset);
    }
    if !(reg >= 0.0) || !reg.is_finite() {
        return Err(ProblemError::InvalidRegularization(reg));
    }
    let label = format!(
        "logistic(n={},d={},reg={reg:e})",
        data.len(),
        data.n_features
    );
    let oracle = LogisticOracle::new(data, reg);
    let l = oracle.lipschitz();
    Ok(Problem {
        label,
        oracle: Arc::new(oracle),
        lipschitz: Some(l),
        f_star: None,
        x_star: None,
    })
}

impl LogisticOracle {
    /// High-accuracy minimizer by damped Newton (requires `reg > 0` or
    /// non-separable data with a nonsingular Hessian).
    pub fn solve_reference(&self) -> Result<(Point, f64), ProblemError> {
        let x = damped_newton(
            |w| self.value_grad(w),
            |w| self.hessian(w),
            Point::zeros(self.data.n_features),
            1e-13,
            200,
        )?;
        let f = self.value_grad(&x).0;
        Ok((x, f))
    }
}
