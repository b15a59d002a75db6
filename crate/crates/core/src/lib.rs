//! Accelerated GRAAL and friends: an accelerated first-order method with a
//! curvature-adaptive stepsize, classical baselines, seeded test problems, and
//! numerical certificates that check the method's convergence guarantees
//! along recorded traces.
//!
//! ```
//! use agraal::{make_quadratic, run_problem, Point, SolverParams, StopRule};
//!
//! let problem = make_quadratic(7, 20, 100.0).unwrap();
//! let params = SolverParams::defaults(1e-3).unwrap();
//! let trace = run_problem(&problem, &Point::zeros(20), &params,
//!                         &StopRule::iterations(500), false, false).unwrap();
//! assert!(trace.last().f_bar < 1e-3 * trace.records[0].f_bar);
//! ```

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod solver;
pub mod baselines;
pub mod curvature;
pub mod diagnostics;
pub mod oracle;
pub mod params;
pub mod problems;
pub mod trace;

pub use solver::{run, run_problem, RunOptions, SolverError, StopRule};
pub use baselines::{run_baseline, run_baseline_problem, BaselineMethod};
pub use curvature::{CurvatureConfig, ExtendedReal};
pub use diagnostics::{CertificateEntry, CertificateReport};
pub use oracle::{EvalCounter, Oracle, Point};
pub use params::{rate_constants, RateConstants, SolverParams};
pub use problems::{least_squares_problem, logistic_problem, logsumexp_problem, make_quadratic, Problem};
pub use trace::{read_csv, write_csv, IterRecord, RunStatus, Trace};
