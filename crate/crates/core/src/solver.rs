//! Accelerated GRAAL: an accelerated gradient method whose stepsize adapts to
//! local curvature without line search.
//!
//! One iteration, from state `k` to `k + 1`:
//!
//! ```text
//! alpha_{k+1}   = (1+gamma) eta_k / (H_k + (1+gamma) eta_k)
//! x_{k+1}       = x_k - eta_k grad f(x~_k)
//! x-_{k+1}      = beta_k x~_k + (1 - beta_k) x-_k
//! x^_{k+1}      = x_{k+1} + theta (x_{k+1} - x_k)
//! x~_{k+1}      = alpha_{k+1} x^_{k+1} + (1 - alpha_{k+1}) x-_{k+1}
//! lambda_{k+1}  = min{ Lambda(x-_{k+1}; x~_k), Lambda(x-_{k+1}; x~_{k+1}) }
//! eta_{k+1}     = min{ (1+gamma) eta_k, nu H_{k-1} lambda_{k+1} / eta_{k-1} }
//! H_{k+1}       = H_k + eta_{k+1}
//! beta_{k+1}    = eta_{k+1} / (alpha_{k+1} H_{k+1})
//! ```
//!
//! where `x-` is the averaged sequence (`x_bar`), `x~` the gradient anchor
//! (`x_tilde`) and `x^` the extrapolated point (`x_hat`). The output is `x-_K`.
//!
//! Each iteration evaluates the oracle exactly twice, at `x-_{k+1}` and
//! `x~_{k+1}`; the result at `x~_k` is carried over from the previous step.
//! On the first step `x-_1 = x~_0`, so the first curvature branch is always
//! `+inf` and is resolved by the guard in [`crate::curvature`].

use crate::curvature::{self, CurvatureConfig, CurvatureError, ExtendedReal};
use crate::oracle::{self, all_finite, EvalCounter, EvalPoint, Oracle, OracleError, Point};
use crate::params::{ParamError, SolverParams};
use crate::problems::Problem;
use crate::trace::{IterRecord, IterateSnapshot, ProblemMeta, RunStatus, Trace};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("starting point: {0}")]
    Start(OracleError),
    #[error("invalid stop rule: {0}")]
    StopRule(String),
}

/// Why a single step could not produce a new state.
#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("diverged at iteration {k}: {reason}")]
    Diverged { k: u64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: u64,
    /// Stop when `|grad f(x_bar_k)| <= grad_tol`.
    pub grad_tol: f64,
    /// Stop when `f(x_bar_k) - f_star <= gap_tol`; ignored without `f_star`.
    pub gap_tol: Option<f64>,
}

impl StopRule {
    pub fn iterations(max_iters: u64) -> Self {
        Self {
            max_iters,
            grad_tol: 0.0,
            gap_tol: None,
        }
    }

    pub fn with_gap_tol(self, tol: f64) -> Self {
        Self {
            gap_tol: Some(tol),
            ..self
        }
    }

    pub fn with_grad_tol(self, tol: f64) -> Self {
        Self {
            grad_tol: tol,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.grad_tol >= 0.0) {
            return Err(format!("grad_tol must be >= 0, got {}", self.grad_tol));
        }
        if let Some(g) = self.gap_tol {
            if !(g >= 0.0) {
                return Err(format!("gap_tol must be >= 0, got {g}"));
            }
        }
        Ok(())
    }

    /// Checks the tolerance rules (not `max_iters`).
    pub(crate) fn tolerance_hit(
        &self,
        grad_norm: f64,
        value: f64,
        f_star: Option<f64>,
    ) -> Option<RunStatus> {
        if grad_norm <= self.grad_tol {
            return Some(RunStatus::GradTol);
        }
        if let (Some(tol), Some(fs)) = (self.gap_tol, f_star) {
            if value - fs <= tol {
                return Some(RunStatus::GapTol);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep `x_k`, `x_bar_k`, `x_tilde_k` for every iteration.
    pub store_iterates: bool,
    /// Replace the `(1+gamma)` growth branch by `(1 + 1/k)` for `k >= 1`.
    pub growth_cap: bool,
    pub curvature: CurvatureConfig,
    /// Optimal value, for the gap stopping rule.
    pub f_star: Option<f64>,
    pub meta: Option<ProblemMeta>,
}

/// Complete state of the method at iteration `k`.
#[derive(Debug, Clone)]
pub struct IterState {
    pub k: u64,
    pub x: Point,
    pub x_prev: Point,
    pub x_hat: Point,
    /// `x_tilde_k` with its oracle result.
    pub tilde: EvalPoint,
    /// `x_bar_k` with its oracle result.
    pub bar: EvalPoint,
    pub eta: f64,
    pub eta_prev: f64,
    pub h: f64,
    pub h_prev: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `None` at `k = 0`, where the estimate is undefined.
    pub lambda: Option<ExtendedReal>,
    /// `B_f(x_bar_{k-1}; x_tilde_{k-1})`.
    pub bregman_prev: f64,
    /// `B_f(x_bar_k; x_tilde_k)`, which becomes the next state's `bregman_prev`.
    pub bregman_cur: f64,
}

impl IterState {
    pub fn x_bar(&self) -> &Point {
        &self.bar.x
    }

    pub fn x_tilde(&self) -> &Point {
        &self.tilde.x
    }

    pub fn record(&self, evals: u64) -> IterRecord {
        IterRecord {
            k: self.k,
            eta: self.eta,
            h: Some(self.h),
            alpha: Some(self.alpha),
            beta: Some(self.beta),
            lambda: self.lambda.and_then(|l| l.as_finite()),
            f_bar: self.bar.value,
            f_tilde: Some(self.tilde.value),
            grad_norm_tilde: Some(self.tilde.gradient.norm()),
            evals_cum: evals,
            fallback: false,
        }
    }

    pub fn snapshot(&self) -> IterateSnapshot {
        IterateSnapshot {
            x: self.x.clone(),
            x_bar: self.bar.x.clone(),
            x_tilde: self.tilde.x.clone(),
        }
    }
}

/// `alpha_0 = beta_0 = 1`, `H_0 = H_{-1} = eta_{-1} = eta_0`,
/// `x_tilde_0 = x_bar_0 = x_0`. One oracle call.
pub fn init<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &Point,
    params: &SolverParams,
    counter: &mut EvalCounter,
) -> Result<IterState, SolverError> {
    params.ensure_valid()?;
    init_state(oracle, x0, params, counter)
}

fn init_state<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &Point,
    params: &SolverParams,
    counter: &mut EvalCounter,
) -> Result<IterState, SolverError> {
    let start = oracle::evaluate_point(oracle, x0.clone(), counter).map_err(SolverError::Start)?;
    Ok(IterState {
        k: 0,
        x: x0.clone(),
        x_prev: x0.clone(),
        x_hat: x0.clone(),
        tilde: start.clone(),
        bar: start,
        eta: params.eta0,
        eta_prev: params.eta0,
        h: params.eta0,
        h_prev: params.eta0,
        alpha: 1.0,
        beta: 1.0,
        lambda: None,
        bregman_prev: 0.0,
        bregman_cur: 0.0,
    })
}

fn diverged(k: u64, reason: impl Into<String>) -> StepError {
    StepError::Diverged {
        k,
        reason: reason.into(),
    }
}

fn eval_or_diverge<O: Oracle + ?Sized>(
    oracle: &O,
    x: Point,
    counter: &mut EvalCounter,
    k: u64,
    what: &str,
) -> Result<EvalPoint, StepError> {
    oracle::evaluate_point(oracle, x, counter).map_err(|e| diverged(k, format!("{what}: {e}")))
}

/// Advances `state` by one iteration. Performs exactly two oracle calls.
pub fn step<O: Oracle + ?Sized>(
    state: &IterState,
    oracle: &O,
    params: &SolverParams,
    cfg: &CurvatureConfig,
    growth_cap: bool,
    counter: &mut EvalCounter,
) -> Result<IterState, StepError> {
    let k = state.k;
    let next = k + 1;
    let grown = (1.0 + params.gamma) * state.eta;

    let alpha = grown / (state.h + grown);
    let x = &state.x - state.eta * &state.tilde.gradient;
    let x_bar = state.beta * &state.tilde.x + (1.0 - state.beta) * &state.bar.x;
    let x_hat = &x + params.theta * (&x - &state.x);
    let x_tilde = alpha * &x_hat + (1.0 - alpha) * &x_bar;
    if !(all_finite(&x) && all_finite(&x_bar) && all_finite(&x_hat) && all_finite(&x_tilde)) {
        return Err(diverged(next, "non-finite iterate"));
    }

    let bar = eval_or_diverge(oracle, x_bar, counter, next, "x_bar")?;
    let tilde = eval_or_diverge(oracle, x_tilde, counter, next, "x_tilde")?;
    let lambda = curvature::local_curvature(&bar, &state.tilde, &tilde, cfg)?;

    let growth_branch = if growth_cap && k >= 1 {
        (k as f64 + 1.0) / k as f64 * state.eta
    } else {
        grown
    };
    let eta = match lambda.as_finite() {
        Some(l) => growth_branch.min(params.nu * state.h_prev * l / state.eta_prev),
        None => growth_branch,
    };
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(diverged(next, format!("stepsize {eta:e}")));
    }
    let h = state.h + eta;
    let mut beta = eta / (alpha * h);
    // beta <= 1 is exact whenever eta_{k+1} <= (1+gamma) eta_k; when that
    // bound is tight the division can land a few ulps above 1.
    if beta > 1.0 && beta - 1.0 <= 8.0 * f64::EPSILON {
        beta = 1.0;
    }
    let bregman_cur = curvature::bregman(&bar, &tilde)?;

    Ok(IterState {
        k: next,
        x_prev: state.x.clone(),
        x,
        x_hat,
        tilde,
        bar,
        eta,
        eta_prev: state.eta,
        h,
        h_prev: state.h,
        alpha,
        beta,
        lambda: Some(lambda),
        bregman_prev: state.bregman_cur,
        bregman_cur,
    })
}

/// Runs the method until a stop rule fires. Divergence ends the run with a
/// flagged trace instead of an error.
pub fn run<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &Point,
    params: &SolverParams,
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<Trace, SolverError> {
    params.ensure_valid()?;
    run_unchecked(oracle, x0, params, stop, opts)
}

/// [`run`] without the parameter feasibility check, for probing what the
/// certificates report when the parameter conditions are violated. Positive
/// `eta0` is still required.
pub fn run_unchecked<O: Oracle + ?Sized>(
    oracle: &O,
    x0: &Point,
    params: &SolverParams,
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<Trace, SolverError> {
    stop.validate().map_err(SolverError::StopRule)?;
    if !(params.eta0 > 0.0 && params.eta0.is_finite()) {
        return Err(ParamError::InvalidEta0(params.eta0).into());
    }
    let mut counter = EvalCounter::new();
    let mut state = init_state(oracle, x0, params, &mut counter)?;
    let mut records = vec![state.record(counter.get())];
    let mut iterates = opts.store_iterates.then(|| vec![state.snapshot()]);

    let status = loop {
        if let Some(s) = stop.tolerance_hit(state.bar.gradient.norm(), state.bar.value, opts.f_star)
        {
            break s;
        }
        if state.k >= stop.max_iters {
            break RunStatus::MaxIters;
        }
        match step(&state, oracle, params, &opts.curvature, opts.growth_cap, &mut counter) {
            Ok(next) => state = next,
            Err(StepError::Diverged { k, reason }) => break RunStatus::Diverged { k, reason },
            Err(StepError::Curvature(e)) => return Err(e.into()),
        }
        records.push(state.record(counter.get()));
        if let Some(its) = iterates.as_mut() {
            its.push(state.snapshot());
        }
    };

    Ok(Trace {
        method: if opts.growth_cap {
            "agraal-capped".into()
        } else {
            "agraal".into()
        },
        records,
        iterates,
        params: Some(*params),
        problem: opts.meta.clone(),
        status,
        x0: x0.clone(),
        final_x: state.x.clone(),
        solution: state.bar.x.clone(),
    })
}

/// [`run`] on a [`Problem`], filling in `f_star` and metadata.
pub fn run_problem(
    problem: &Problem,
    x0: &Point,
    params: &SolverParams,
    stop: &StopRule,
    store_iterates: bool,
    growth_cap: bool,
) -> Result<Trace, SolverError> {
    let opts = RunOptions {
        store_iterates,
        growth_cap,
        curvature: CurvatureConfig::default(),
        f_star: problem.f_star,
        meta: Some(problem.meta()),
    };
    run(problem.oracle.as_ref(), x0, params, stop, &opts)
}
