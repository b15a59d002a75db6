//! Test problems with known metadata: seeded quadratics, least squares,
//! logistic regression on LIBSVM-format data, and smoothed max-affine
//! (log-sum-exp) objectives.
//!
//! All randomness goes through a single `u64` seed and ChaCha8, so a
//! `(seed, shape)` pair always produces a bit-identical instance.

mod least_squares;
mod libsvm;
mod linalg;
mod logistic;
mod logsumexp;
mod quadratic;

pub use least_squares::{least_squares_problem, LeastSquaresOracle};
pub use libsvm::{load_libsvm, parse_libsvm, synthetic_dataset, write_libsvm, LibsvmError, SparseDataset};
pub use linalg::{damped_newton, power_iteration, random_orthogonal, NewtonError, PowerIteration};
pub use logistic::{logistic_problem, LogisticOracle};
pub use logsumexp::{logsumexp_problem, LogSumExpOracle};
pub use quadratic::{diagonal_quadratic, make_quadratic, QuadraticOracle};

use crate::oracle::{Oracle, Point};
use crate::trace::ProblemMeta;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("condition number must be >= 1, got {0}")]
    InvalidCondition(f64),
    #[error("dimension must be >= 1")]
    ZeroDimension,
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("regularization must be >= 0, got {0}")]
    InvalidRegularization(f64),
    #[error("log-sum-exp needs at least 2 terms, got {0}")]
    TooFewTerms(usize),
    #[error("smoothing must be positive, got {0}")]
    InvalidSmoothing(f64),
    #[error("noise level must be finite and >= 0, got {0}")]
    InvalidNoise(f64),
    #[error("weights must be finite, nonnegative and not all zero")]
    InvalidWeights,
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Newton(#[from] NewtonError),
}

/// An objective instance plus whatever is known about it.
#[derive(Clone)]
pub struct Problem {
    pub label: String,
    pub oracle: Arc<dyn Oracle>,
    /// Gradient Lipschitz constant (an upper bound where it is not exact).
    pub lipschitz: Option<f64>,
    pub f_star: Option<f64>,
    pub x_star: Option<Point>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("lipschitz", &self.lipschitz)
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn with_optimum(mut self, x_star: Point, f_star: f64) -> Self {
        self.x_star = Some(x_star);
        self.f_star = Some(f_star);
        self
    }

    pub fn meta(&self) -> ProblemMeta {
        ProblemMeta {
            label: self.label.clone(),
            dim: self.dim(),
            lipschitz: self.lipschitz,
            f_star: self.f_star,
        }
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A standard-normal vector drawn from `seed`; handy for reproducible test points.
pub fn seeded_point(seed: u64, dim: usize, scale: f64) -> Point {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng(seed);
    Point::from_fn(dim, |_, _| {
        let v: f64 = StandardNormal.sample(&mut r);
        scale * v
    })
}
