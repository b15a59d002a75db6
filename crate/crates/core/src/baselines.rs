//! Comparison methods on the same oracle and trace infrastructure.
//!
//! All of them except AGD are gradient descent `x_{k+1} = x_k - eta_k grad f(x_k)`
//! with a different stepsize rule:
//!
//! | kind      | stepsize                                                         |
//! |-----------|------------------------------------------------------------------|
//! | `Gd`      | fixed `eta`                                                      |
//! | `AdGd`    | `min{ eta_k sqrt(1 + gamma eta_k / eta_{k-1}), nu lambda_{k+1} }` |
//! | `AdaGrad` | `eta / sqrt(sum_{i<=k} |grad f(x_i)|^2)`                         |
//! | `Bb`      | `<dx, dg> / |dg|^2` (Barzilai-Borwein)                           |
//! | `Polyak`  | `(f(x_k) - f_star) / |grad f(x_k)|^2`                            |
//!
//! `Agd` is Nesterov's method in the three-sequence form with
//! `tau_k = 2 / (k + 2)`:
//!
//! ```text
//! y_k     = (1 - tau_k) x_k + tau_k z_k
//! z_{k+1} = z_k - (eta / tau_k) grad f(y_k)
//! x_{k+1} = (1 - tau_k) x_k + tau_k z_{k+1}
//! ```
//!
//! Record fields map as follows: `f_bar` is the objective at the reported
//! iterate (`x_k`), `f_tilde` and `grad_norm_tilde` refer to the point where
//! the gradient was taken. `H`, `alpha`, `beta` are left empty except that AGD
//! stores `tau_k` in `alpha`.
//!
//! Evaluation counting: only the calls a method needs for its own updates are
//! charged. AGD additionally evaluates `f(x_k)` for monitoring; that call is
//! not charged.

use crate::solver::StopRule;
use crate::curvature::{self, CurvatureConfig, ExtendedReal};
use crate::oracle::{self, EvalCounter, EvalPoint, Oracle, OracleError, Point};
use crate::problems::Problem;
use crate::trace::{IterRecord, IterateSnapshot, RunStatus, Trace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("{kind}: missing or invalid hyperparameter `{name}`")]
    Hyperparameter { kind: &'static str, name: &'static str },
    #[error("starting point: {0}")]
    Start(OracleError),
    #[error("invalid stop rule: {0}")]
    StopRule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineMethod {
    Gd { eta: f64 },
    Agd { eta: f64 },
    AdGd {
        eta0: f64,
        gamma: f64,
        nu: f64,
        /// Use the Bregman estimate instead of the norm ratio.
        #[serde(default)]
        option2: bool,
    },
    AdaGrad { eta: f64 },
    Bb { eta0: f64 },
    Polyak { f_star: f64 },
}

/// Non-normative AdGD constants: `gamma = 1`, `nu = 1/2`.
pub const ADGD_DEFAULT_GAMMA: f64 = 1.0;
pub const ADGD_DEFAULT_NU: f64 = 0.5;

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Gd { .. } => "gd",
            BaselineMethod::Agd { .. } => "agd",
            BaselineMethod::AdGd { .. } => "adgd",
            BaselineMethod::AdaGrad { .. } => "adagrad",
            BaselineMethod::Bb { .. } => "bb",
            BaselineMethod::Polyak { .. } => "polyak",
        }
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        let kind = self.name();
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let bad = |name| Err(BaselineError::Hyperparameter { kind, name });
        match *self {
            BaselineMethod::Gd { eta } | BaselineMethod::Agd { eta } | BaselineMethod::AdaGrad { eta } => {
                if !pos(eta) {
                    return bad("eta");
                }
            }
            BaselineMethod::AdGd { eta0, gamma, nu, .. } => {
                if !pos(eta0) {
                    return bad("eta0");
                }
                if !pos(gamma) {
                    return bad("gamma");
                }
                if !pos(nu) {
                    return bad("nu");
                }
            }
            BaselineMethod::Bb { eta0 } => {
                if !pos(eta0) {
                    return bad("eta0");
                }
            }
            BaselineMethod::Polyak { f_star } => {
                if !f_star.is_finite() {
                    return bad("f_star");
                }
            }
        }
        Ok(())
    }
}

/// `min{ eta sqrt(1 + gamma eta / eta_prev), nu lambda }`; `+inf` picks the first branch.
pub fn adgd_stepsize(eta: f64, eta_prev: f64, lambda: ExtendedReal, gamma: f64, nu: f64) -> f64 {
    let growth = eta * (1.0 + gamma * eta / eta_prev).sqrt();
    match lambda.as_finite() {
        Some(l) => growth.min(nu * l),
        None => growth,
    }
}

/// `eta / sqrt(sq_grad_sum)`, or `None` when the sum is zero (every gradient
/// so far vanished, so the method has converged).
pub fn adagrad_stepsize(eta_scale: f64, sq_grad_sum: f64) -> Option<f64> {
    (sq_grad_sum > 0.0).then(|| eta_scale / sq_grad_sum.sqrt())
}

/// Barzilai-Borwein ratio `<dx, dg> / |dg|^2`; `None` when `|dg|^2` is below
/// the guard or the ratio is not positive.
pub fn bb_stepsize(dx: &Point, dg: &Point) -> Option<f64> {
    let den = dg.norm_squared();
    let scale = dx.norm_squared().max(f64::MIN_POSITIVE);
    if !(den > 1e2 * f64::EPSILON * f64::EPSILON * scale) {
        return None;
    }
    let eta = dx.dot(dg) / den;
    (eta > 0.0 && eta.is_finite()).then_some(eta)
}

/// `(f(x) - f_star) / |grad f(x)|^2`, `None` at a zero gradient.
pub fn polyak_stepsize(value: f64, f_star: f64, grad_sq: f64) -> Option<f64> {
    (grad_sq > 0.0).then(|| ((value - f_star) / grad_sq).max(0.0))
}

struct Recorder {
    records: Vec<IterRecord>,
    iterates: Option<Vec<IterateSnapshot>>,
}

impl Recorder {
    fn push(&mut self, rec: IterRecord, x: &Point, y: &Point) {
        self.records.push(rec);
        if let Some(its) = self.iterates.as_mut() {
            its.push(IterateSnapshot {
                x: x.clone(),
                x_bar: x.clone(),
                x_tilde: y.clone(),
            });
        }
    }
}

fn gd_record(k: u64, eta: f64, at: &EvalPoint, lambda: Option<f64>, evals: u64) -> IterRecord {
    IterRecord {
        k,
        eta,
        h: None,
        alpha: None,
        beta: None,
        lambda,
        f_bar: at.value,
        f_tilde: Some(at.value),
        grad_norm_tilde: Some(at.gradient.norm()),
        evals_cum: evals,
        fallback: false,
    }
}

pub fn run_baseline<O: Oracle + ?Sized>(
    method: &BaselineMethod,
    oracle: &O,
    x0: &Point,
    stop: &StopRule,
    store_iterates: bool,
    f_star: Option<f64>,
) -> Result<Trace, BaselineError> {
    method.validate()?;
    stop.validate().map_err(BaselineError::StopRule)?;
    let mut rec = Recorder {
        records: Vec::new(),
        iterates: store_iterates.then(Vec::new),
    };
    let (status, final_x, solution) = match *method {
        BaselineMethod::Agd { eta } => run_agd(eta, oracle, x0, stop, f_star, &mut rec)?,
        _ => run_gd_family(method, oracle, x0, stop, f_star, &mut rec)?,
    };
    Ok(Trace {
        method: method.name().to_string(),
        records: rec.records,
        iterates: rec.iterates,
        params: None,
        problem: None,
        status,
        x0: x0.clone(),
        final_x,
        solution,
    })
}

pub fn run_baseline_problem(
    method: &BaselineMethod,
    problem: &Problem,
    x0: &Point,
    stop: &StopRule,
    store_iterates: bool,
) -> Result<Trace, BaselineError> {
    let mut t = run_baseline(method, problem.oracle.as_ref(), x0, stop, store_iterates, problem.f_star)?;
    t.problem = Some(problem.meta());
    Ok(t)
}

type RunOutcome = (RunStatus, Point, Point);

fn diverged(k: u64, reason: impl std::fmt::Display) -> RunStatus {
    RunStatus::Diverged {
        k,
        reason: reason.to_string(),
    }
}

fn run_gd_family<O: Oracle + ?Sized>(
    method: &BaselineMethod,
    oracle: &O,
    x0: &Point,
    stop: &StopRule,
    f_star: Option<f64>,
    rec: &mut Recorder,
) -> Result<RunOutcome, BaselineError> {
    let mut counter = EvalCounter::new();
    let mut cur = oracle::evaluate_point(oracle, x0.clone(), &mut counter).map_err(BaselineError::Start)?;
    let cfg = CurvatureConfig::default();

    let mut sq_sum = cur.gradient.norm_squared();
    let mut fallback = false;
    // Stepsize used for the step out of the current point, plus the previous one.
    let (mut eta, mut eta_prev) = match *method {
        BaselineMethod::Gd { eta } => (eta, eta),
        BaselineMethod::AdGd { eta0, .. } | BaselineMethod::Bb { eta0 } => (eta0, eta0),
        BaselineMethod::AdaGrad { eta } => match adagrad_stepsize(eta, sq_sum) {
            Some(s) => (s, s),
            None => (0.0, 0.0),
        },
        BaselineMethod::Polyak { f_star } => {
            let s = polyak_stepsize(cur.value, f_star, cur.gradient.norm_squared()).unwrap_or(0.0);
            (s, s)
        }
        BaselineMethod::Agd { .. } => unreachable!(),
    };
    let mut lambda: Option<f64> = None;
    let mut k = 0u64;

    let status = loop {
        let mut r = gd_record(k, eta, &cur, lambda, counter.get());
        r.fallback = fallback;
        rec.push(r, &cur.x, &cur.x);

        if let Some(s) = stop.tolerance_hit(cur.gradient.norm(), cur.value, f_star) {
            break s;
        }
        // Zero AdaGrad sum or zero Polyak gradient: nothing left to do.
        if eta == 0.0 {
            break RunStatus::Converged;
        }
        if k >= stop.max_iters {
            break RunStatus::MaxIters;
        }

        let x_next = &cur.x - eta * &cur.gradient;
        let next = match oracle::evaluate_point(oracle, x_next, &mut counter) {
            Ok(p) => p,
            Err(e) => break diverged(k + 1, e),
        };

        fallback = false;
        lambda = None;
        let new_eta = match *method {
            BaselineMethod::Gd { eta } => eta,
            BaselineMethod::AdGd { gamma, nu, option2, .. } => {
                let l = if option2 {
                    curvature::lambda_option2(&next, &cur, &cfg)
                } else {
                    curvature::lambda_option1(&next, &cur, &cfg)
                }
                .unwrap_or(ExtendedReal::INFINITY);
                lambda = l.as_finite();
                adgd_stepsize(eta, eta_prev, l, gamma, nu)
            }
            BaselineMethod::AdaGrad { eta } => {
                sq_sum += next.gradient.norm_squared();
                adagrad_stepsize(eta, sq_sum).unwrap_or(0.0)
            }
            BaselineMethod::Bb { .. } => {
                let dx = &next.x - &cur.x;
                let dg = &next.gradient - &cur.gradient;
                match bb_stepsize(&dx, &dg) {
                    Some(s) => s,
                    None => {
                        fallback = true;
                        eta
                    }
                }
            }
            BaselineMethod::Polyak { f_star } => {
                polyak_stepsize(next.value, f_star, next.gradient.norm_squared()).unwrap_or(0.0)
            }
            BaselineMethod::Agd { .. } => unreachable!(),
        };
        if !new_eta.is_finite() || new_eta < 0.0 {
            break diverged(k + 1, format!("stepsize {new_eta:e}"));
        }
        eta_prev = eta;
        eta = new_eta;
        cur = next;
        k += 1;
    };
    Ok((status, cur.x.clone(), cur.x))
}

fn run_agd<O: Oracle + ?Sized>(
    eta: f64,
    oracle: &O,
    x0: &Point,
    stop: &StopRule,
    f_star: Option<f64>,
    rec: &mut Recorder,
) -> Result<RunOutcome, BaselineError> {
    let mut counter = EvalCounter::new();
    let start = oracle::evaluate_point(oracle, x0.clone(), &mut counter).map_err(BaselineError::Start)?;
    let mut x = start.clone();
    let mut z = x0.clone();
    // At k = 0, y_0 = x_0 and the start evaluation doubles as the gradient call.
    let mut y = start;
    let mut k = 0u64;

    let status = loop {
        let tau = 2.0 / (k as f64 + 2.0);
        let record = IterRecord {
            k,
            eta,
            h: None,
            alpha: Some(tau),
            beta: None,
            lambda: None,
            f_bar: x.value,
            f_tilde: Some(y.value),
            grad_norm_tilde: Some(y.gradient.norm()),
            evals_cum: counter.get(),
            fallback: false,
        };
        rec.push(record, &x.x, &y.x);

        if let Some(s) = stop.tolerance_hit(x.gradient.norm(), x.value, f_star) {
            break s;
        }
        if k >= stop.max_iters {
            break RunStatus::MaxIters;
        }

        z -= (eta / tau) * &y.gradient;
        let x_next = (1.0 - tau) * &x.x + tau * &z;
        // Monitoring evaluation at x_{k+1}: not charged.
        let x_eval = match oracle::evaluate_uncounted(oracle, &x_next) {
            Ok(r) => EvalPoint::new(x_next, r),
            Err(e) => break diverged(k + 1, e),
        };
        let tau_next = 2.0 / (k as f64 + 3.0);
        let y_next = (1.0 - tau_next) * &x_eval.x + tau_next * &z;
        y = match oracle::evaluate_point(oracle, y_next, &mut counter) {
            Ok(p) => p,
            Err(e) => break diverged(k + 1, e),
        };
        x = x_eval;
        k += 1;
    };
    Ok((status, x.x.clone(), x.x))
}
