//! Numerical certificates evaluated along Accelerated GRAAL traces.
//!
//! Every check compares two sides of an inequality that holds exactly in real
//! arithmetic and allows a small floating-point slack. Each produces one
//! [`CertificateEntry`]; the `worst_violation` field is the largest value of
//! `lhs - (rhs + slack)` seen, so it is `<= 0` exactly when the check passes.
//!
//! The Lyapunov function is
//!
//! ```text
//! Psi_k(x) = 1/2 |x_k - x|^2
//!          + H_{k-1} (f(x_bar_k) - f(x))
//!          + (theta eta_k eta_{k-1} / lambda_k) B_f(x_bar_{k-1}; x_tilde_{k-1})
//!          + (gamma theta / 2) |x_k - x_{k-1}|^2
//! ```
//!
//! and is recomputed from stored iterates with fresh oracle calls, so it does
//! not depend on anything the solver cached.

use crate::curvature::{self, CurvatureConfig, CurvatureError};
use crate::oracle::{self, EvalPoint, Oracle, OracleError, Point};
use crate::params::{rate_constants, ParamError, SolverParams};
use crate::problems::Problem;
use crate::trace::Trace;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Relative slack on inequality certificates.
pub const REL_TOL: f64 = 1e-10;
/// Absolute slack on inequality certificates.
pub const ABS_TOL: f64 = 1e-12;
/// Relative tolerance on the identity `eta_k = alpha_k beta_k H_k`.
pub const COUPLING_TOL: f64 = 1e-12;
/// Absolute slack for `lambda_k >= 1/L`.
pub const LAMBDA_TOL: f64 = 1e-9;
/// Slack factor for the two descent inequalities, scaled by `1 + |f(x_bar_k)|`.
pub const BETA_F_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trace has no stored iterates (run with store_iterates)")]
    MissingIterates,
    #[error("trace has no solver parameters")]
    MissingParams,
    #[error("Lipschitz constant unknown for this problem")]
    MissingLipschitz,
    #[error("reference point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("oracle failed during recomputation: {0}")]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub name: String,
    pub status: CheckStatus,
    /// Largest `lhs - (rhs + slack)` over the checked indices; `NaN` when
    /// nothing was checked.
    pub worst_violation: f64,
    /// Iteration index where `worst_violation` was attained.
    pub worst_k: Option<u64>,
    /// Number of inequalities evaluated.
    pub checked: u64,
}

impl CertificateEntry {
    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Skipped {
                reason: reason.into(),
            },
            worst_violation: f64::NAN,
            worst_k: None,
            checked: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

impl fmt::Display for CertificateEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            CheckStatus::Skipped { reason } => write!(f, "{:<22} SKIP  {reason}", self.name),
            s => {
                let tag = if *s == CheckStatus::Pass { "PASS" } else { "FAIL" };
                write!(
                    f,
                    "{:<22} {tag}  worst={:+.3e} at k={} ({} checks)",
                    self.name,
                    self.worst_violation,
                    self.worst_k.map_or("-".to_string(), |k| k.to_string()),
                    self.checked
                )
            }
        }
    }
}

/// One entry per enabled check, names unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub entries: Vec<CertificateEntry>,
}

impl CertificateReport {
    /// Adds or replaces the entry with the same name.
    pub fn push(&mut self, entry: CertificateEntry) {
        match self.entries.iter_mut().find(|e| e.name == entry.name) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    pub fn get(&self, name: &str) -> Option<&CertificateEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// True when no entry failed (skipped entries do not count as failures).
    pub fn passed(&self) -> bool {
        !self.entries.iter().any(CertificateEntry::failed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CertificateEntry> {
        self.entries.iter().filter(|e| e.failed())
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Accumulates the worst excess of a family of inequalities.
struct Tracker {
    name: &'static str,
    worst: f64,
    worst_k: Option<u64>,
    checked: u64,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: f64::NEG_INFINITY,
            worst_k: None,
            checked: 0,
        }
    }

    /// Records `excess = lhs - bound`; NaN counts as an infinite violation.
    fn observe(&mut self, k: u64, excess: f64) {
        let e = if excess.is_nan() { f64::INFINITY } else { excess };
        self.checked += 1;
        if self.worst_k.is_none() || e > self.worst {
            self.worst = e;
            self.worst_k = Some(k);
        }
    }

    fn finish(self) -> CertificateEntry {
        let (status, worst) = if self.checked == 0 {
            (CheckStatus::Pass, f64::NAN)
        } else if self.worst <= 0.0 {
            (CheckStatus::Pass, self.worst)
        } else {
            (CheckStatus::Fail, self.worst)
        };
        CertificateEntry {
            name: self.name.to_string(),
            status,
            worst_violation: worst,
            worst_k: self.worst_k,
            checked: self.checked,
        }
    }
}

/// `Psi_k(x_ref)` split into its four terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovTerm {
    pub k: u64,
    pub distance: f64,
    pub gap: f64,
    pub bregman: f64,
    pub momentum: f64,
}

impl LyapunovTerm {
    pub fn total(&self) -> f64 {
        self.distance + self.gap + self.bregman + self.momentum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSeries {
    /// Terms for `k = 1..=K`.
    pub terms: Vec<LyapunovTerm>,
    /// Iterations where `lambda_k = +inf` but the Bregman divergence in the
    /// third term was not negligible, with that divergence.
    pub lambda_anomalies: Vec<(u64, f64)>,
}

impl LyapunovSeries {
    pub fn totals(&self) -> Vec<f64> {
        self.terms.iter().map(LyapunovTerm::total).collect()
    }
}

fn params_of(trace: &Trace) -> Result<SolverParams, DiagnosticsError> {
    trace.params.ok_or(DiagnosticsError::MissingParams)
}

fn check_ref<O: Oracle + ?Sized>(oracle: &O, x_ref: &Point) -> Result<(), DiagnosticsError> {
    if x_ref.len() != oracle.dim() {
        return Err(DiagnosticsError::DimensionMismatch {
            expected: oracle.dim(),
            got: x_ref.len(),
        });
    }
    Ok(())
}

fn fresh<O: Oracle + ?Sized>(oracle: &O, x: &Point) -> Result<EvalPoint, DiagnosticsError> {
    Ok(EvalPoint::new(x.clone(), oracle::evaluate_uncounted(oracle, x)?))
}

/// `f(a) - f(b)`, through the oracle's cancellation-free formula when it has one.
fn value_gap<O: Oracle + ?Sized>(oracle: &O, a: &EvalPoint, b: &EvalPoint) -> f64 {
    oracle.value_diff(&a.x, &b.x).unwrap_or(a.value - b.value)
}

fn precise_bregman<O: Oracle + ?Sized>(
    oracle: &O,
    x: &EvalPoint,
    z: &EvalPoint,
    cfg: &CurvatureConfig,
) -> Result<f64, DiagnosticsError> {
    let diff = oracle.value_diff(&x.x, &z.x);
    Ok(curvature::bregman_estimate_with_diff(x, z, diff, cfg)?)
}

/// Evaluates `Psi_k(x_ref)` for every `k in 1..=K` of an Accelerated GRAAL
/// trace with stored iterates.
///
/// `lambda_k` and both Bregman divergences are recomputed from the stored
/// points. Value differences go through [`Oracle::value_diff`] when the
/// objective provides it, so the certificate is not limited by the rounding
/// error of `f` itself once `H_k` is large. When `lambda_k = +inf` the third term is taken as zero; the
/// corresponding divergence should then vanish, and any that does not is
/// listed in [`LyapunovSeries::lambda_anomalies`].
pub fn lyapunov_series<O: Oracle + ?Sized>(
    trace: &Trace,
    x_ref: &Point,
    oracle: &O,
) -> Result<LyapunovSeries, DiagnosticsError> {
    let params = params_of(trace)?;
    let its = trace.iterates.as_ref().ok_or(DiagnosticsError::MissingIterates)?;
    check_ref(oracle, x_ref)?;
    let cfg = CurvatureConfig::default();
    let reference = fresh(oracle, x_ref)?;
    let recs = &trace.records;
    let n = its.len().min(recs.len());

    let mut terms = Vec::with_capacity(n.saturating_sub(1));
    let mut lambda_anomalies = Vec::new();
    if n < 2 {
        return Ok(LyapunovSeries {
            terms,
            lambda_anomalies,
        });
    }
    let mut bar_prev = fresh(oracle, &its[0].x_bar)?;
    let mut tilde_prev = fresh(oracle, &its[0].x_tilde)?;
    for k in 1..n {
        let bar = fresh(oracle, &its[k].x_bar)?;
        let tilde = fresh(oracle, &its[k].x_tilde)?;
        let lambda = curvature::local_curvature(&bar, &tilde_prev, &tilde, &cfg)?;
        let b_prev = precise_bregman(oracle, &bar_prev, &tilde_prev, &cfg)?;
        let bregman = match lambda.as_finite() {
            Some(l) => params.theta * recs[k].eta * recs[k - 1].eta / l * b_prev,
            None => {
                let tol = cfg.tol_convexity * (1.0 + bar_prev.value.abs() + tilde_prev.value.abs());
                if b_prev.abs() > tol {
                    lambda_anomalies.push((k as u64, b_prev));
                }
                0.0
            }
        };
        let h_prev = recs[k - 1].h.ok_or(DiagnosticsError::MissingParams)?;
        terms.push(LyapunovTerm {
            k: k as u64,
            distance: 0.5 * (&its[k].x - x_ref).norm_squared(),
            gap: h_prev * value_gap(oracle, &bar, &reference),
            bregman,
            momentum: 0.5 * params.gamma * params.theta * (&its[k].x - &its[k - 1].x).norm_squared(),
        });
        bar_prev = bar;
        tilde_prev = tilde;
    }
    Ok(LyapunovSeries {
        terms,
        lambda_anomalies,
    })
}

/// `Psi_{k+1} <= Psi_k + 1e-10 |Psi_k| + 1e-12 (1 + |Psi_1|)` for every `k >= 1`.
///
/// The relative slack uses `|Psi_k|` because `Psi` can be negative when the
/// reference point is not a minimizer.
pub fn check_monotone_psi(series: &LyapunovSeries) -> CertificateEntry {
    let abs = ABS_TOL * (1.0 + series.terms.first().map_or(0.0, |t| t.total().abs()));
    check_monotone_psi_with(series, REL_TOL, abs)
}

/// `Psi_{k+1} <= Psi_k + rel |Psi_k| + abs` for every `k >= 1`.
pub fn check_monotone_psi_with(series: &LyapunovSeries, rel: f64, abs: f64) -> CertificateEntry {
    let mut t = Tracker::new("psi_monotone");
    let totals = series.totals();
    for (i, w) in totals.windows(2).enumerate() {
        let bound = w[0] + rel * w[0].abs() + abs;
        t.observe(series.terms[i + 1].k, w[1] - bound);
    }
    t.finish()
}

/// Passes when no `lambda_k = +inf` iteration carried a non-negligible
/// Bregman divergence into `Psi`.
pub fn check_lambda_convention(series: &LyapunovSeries) -> CertificateEntry {
    let mut t = Tracker::new("psi_lambda_convention");
    for &(k, b) in &series.lambda_anomalies {
        t.observe(k, b.abs());
    }
    t.finish()
}

/// Both sides of the final-iterate bound
/// `1/2 |x_K - x|^2 + H_{K-1}(f(x_bar_K) - f(x)) <= 1/2 |x_0 - x|^2 + ((1 + gamma theta) eta_0^2 / 2) |grad f(x_0)|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollarySides {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn corollary_sides<O: Oracle + ?Sized>(
    trace: &Trace,
    x_ref: &Point,
    oracle: &O,
) -> Result<Option<CorollarySides>, DiagnosticsError> {
    let params = params_of(trace)?;
    check_ref(oracle, x_ref)?;
    let kk = trace.records.len() - 1;
    if kk == 0 {
        return Ok(None);
    }
    let reference = fresh(oracle, x_ref)?;
    let bar = fresh(oracle, &trace.solution)?;
    let g0 = oracle::evaluate_uncounted(oracle, &trace.x0)?.gradient;
    let h = trace.records[kk - 1].h.ok_or(DiagnosticsError::MissingParams)?;
    let lhs = 0.5 * (&trace.final_x - x_ref).norm_squared() + h * value_gap(oracle, &bar, &reference);
    let rhs = 0.5 * (&trace.x0 - x_ref).norm_squared()
        + 0.5 * (1.0 + params.gamma * params.theta) * params.eta0 * params.eta0 * g0.norm_squared();
    Ok(Some(CorollarySides { lhs, rhs }))
}

/// LHS <= RHS (1 + 1e-10) + 1e-12 at the final iterate. Vacuous for `K = 0`.
pub fn check_corollary_bound<O: Oracle + ?Sized>(
    trace: &Trace,
    x_ref: &Point,
    oracle: &O,
) -> Result<CertificateEntry, DiagnosticsError> {
    let mut t = Tracker::new("corollary_bound");
    if let Some(s) = corollary_sides(trace, x_ref, oracle)? {
        let bound = s.rhs * (1.0 + REL_TOL) + ABS_TOL;
        t.observe(trace.iterations(), s.lhs - bound);
    }
    Ok(t.finish())
}

/// `sqrt(H_k) >= (c / sqrt(L)) (k - m) - 1e-12` at every recorded `k`.
pub fn check_h_envelope(
    trace: &Trace,
    params: &SolverParams,
    lipschitz: f64,
) -> Result<CertificateEntry, DiagnosticsError> {
    let rc = rate_constants(params, lipschitz)?;
    let slope = rc.c / lipschitz.sqrt();
    let mut t = Tracker::new("h_envelope");
    for r in &trace.records {
        let h = r.h.ok_or(DiagnosticsError::MissingParams)?;
        let bound = slope * (r.k as f64 - rc.m as f64) - ABS_TOL;
        t.observe(r.k, bound - h.sqrt());
    }
    Ok(t.finish())
}

fn lemma_scalar_checks(trace: &Trace, params: &SolverParams, lipschitz: Option<f64>) -> Vec<CertificateEntry> {
    let recs = &trace.records;
    let mut range = Tracker::new("alpha_beta_range");
    let mut coupling = Tracker::new("coupling_identity");
    let mut h_growth = Tracker::new("h_growth");
    let mut eta_growth = Tracker::new("eta_growth");
    let mut lambda_lower = Tracker::new("lambda_lower");
    let mut descent = Tracker::new("beta_f_descent");

    for (i, r) in recs.iter().enumerate() {
        let (Some(a), Some(b), Some(h)) = (r.alpha, r.beta, r.h) else {
            continue;
        };
        // (0, 1] membership is exact: report how far outside the interval.
        let outside = |v: f64| if v > 0.0 { v - 1.0 } else { f64::INFINITY };
        range.observe(r.k, outside(a).max(outside(b)));
        coupling.observe(r.k, (r.eta - a * b * h).abs() - COUPLING_TOL * r.eta.abs());

        if i >= 1 {
            let prev = &recs[i - 1];
            if let Some(hp) = prev.h {
                let upper = (2.0 + params.gamma) * hp;
                let excess_hi = h - (upper * (1.0 + REL_TOL) + ABS_TOL);
                let excess_lo = hp - h;
                h_growth.observe(r.k, excess_hi.max(excess_lo));
            }
            let cap = (1.0 + params.gamma) * prev.eta;
            eta_growth.observe(r.k, r.eta - (cap * (1.0 + REL_TOL) + ABS_TOL));
            if let Some(l) = lipschitz {
                // An empty lambda cell is +inf and satisfies the bound.
                if let Some(lam) = r.lambda {
                    lambda_lower.observe(r.k, 1.0 / l - LAMBDA_TOL - lam);
                }
            }
        }
        if i >= 1 && i + 1 < recs.len() {
            if let Some(ft) = r.f_tilde {
                let next = &recs[i + 1];
                let lhs = r.f_bar - ft;
                let rhs = (r.f_bar - next.f_bar) / b;
                let slack = BETA_F_TOL * (1.0 + r.f_bar.abs());
                descent.observe(r.k, lhs - rhs - slack);
            }
        }
    }

    let mut out = vec![
        range.finish(),
        coupling.finish(),
        h_growth.finish(),
        eta_growth.finish(),
    ];
    out.push(if lipschitz.is_some() {
        lambda_lower.finish()
    } else {
        CertificateEntry::skipped("lambda_lower", "Lipschitz constant unknown")
    });
    out.push(descent.finish());
    out
}

/// `B_f(x_bar_k; x_tilde_{k-1}) <= B_f(x_bar_{k-1}; x_tilde_{k-1})` for
/// `k in 1..K-1`, from stored iterates and fresh oracle calls.
pub fn check_beta_f_bregman<O: Oracle + ?Sized>(
    trace: &Trace,
    oracle: &O,
) -> Result<CertificateEntry, DiagnosticsError> {
    let its = trace.iterates.as_ref().ok_or(DiagnosticsError::MissingIterates)?;
    let cfg = CurvatureConfig::default();
    let mut t = Tracker::new("beta_f_bregman");
    let n = its.len();
    if n >= 3 {
        let mut bar_prev = fresh(oracle, &its[0].x_bar)?;
        let mut tilde_prev = fresh(oracle, &its[0].x_tilde)?;
        for k in 1..n - 1 {
            let bar = fresh(oracle, &its[k].x_bar)?;
            let lhs = precise_bregman(oracle, &bar, &tilde_prev, &cfg)?;
            let rhs = precise_bregman(oracle, &bar_prev, &tilde_prev, &cfg)?;
            let slack = BETA_F_TOL * (1.0 + bar.value.abs());
            t.observe(k as u64, lhs - rhs - slack);
            tilde_prev = fresh(oracle, &its[k].x_tilde)?;
            bar_prev = bar;
        }
    }
    Ok(t.finish())
}

/// Invariants of the iteration that need only the recorded scalars, plus the
/// Bregman inequality when iterates and an oracle are available.
///
/// Entries: `alpha_beta_range`, `coupling_identity`, `h_growth`,
/// `eta_growth`, `lambda_lower`, `beta_f_descent`, `beta_f_bregman`.
pub fn lemma_suite<O: Oracle + ?Sized>(
    trace: &Trace,
    oracle: Option<&O>,
    lipschitz: Option<f64>,
) -> Result<CertificateReport, DiagnosticsError> {
    let params = params_of(trace)?;
    let mut report = CertificateReport::default();
    for e in lemma_scalar_checks(trace, &params, lipschitz) {
        report.push(e);
    }
    let bregman = match (oracle, trace.has_iterates()) {
        (Some(o), true) => check_beta_f_bregman(trace, o)?,
        (None, _) => CertificateEntry::skipped("beta_f_bregman", "no oracle"),
        (_, false) => CertificateEntry::skipped("beta_f_bregman", "iterates not stored"),
    };
    report.push(bregman);
    Ok(report)
}

/// Every certificate for one trace on its problem: the lemma suite, the
/// `H` envelope (when `L` is known), the final-iterate bound, and `Psi`
/// monotonicity (when iterates are stored) at each reference point.
pub fn full_suite(
    trace: &Trace,
    problem: &Problem,
    x_refs: &[(&str, Point)],
) -> Result<CertificateReport, DiagnosticsError> {
    let params = params_of(trace)?;
    let oracle = problem.oracle.as_ref();
    let mut report = lemma_suite(trace, Some(oracle), problem.lipschitz)?;
    report.push(match problem.lipschitz {
        Some(l) => check_h_envelope(trace, &params, l)?,
        None => CertificateEntry::skipped("h_envelope", "Lipschitz constant unknown"),
    });
    for (label, x_ref) in x_refs {
        let mut cor = check_corollary_bound(trace, x_ref, oracle)?;
        cor.name = format!("corollary_bound[{label}]");
        report.push(cor);
        if trace.has_iterates() {
            let series = lyapunov_series(trace, x_ref, oracle)?;
            let mut psi = check_monotone_psi(&series);
            psi.name = format!("psi_monotone[{label}]");
            report.push(psi);
            let mut conv = check_lambda_convention(&series);
            conv.name = format!("psi_lambda_convention[{label}]");
            report.push(conv);
        } else {
            report.push(CertificateEntry::skipped(
                &format!("psi_monotone[{label}]"),
                "iterates not stored",
            ));
        }
    }
    Ok(report)
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("fewer than two points in the fitting window")]
    TooFewPoints,
    #[error("gap is nonpositive at k = {k}: converged before the window ended")]
    Converged { k: u64 },
}

/// Least-squares slope of `log(gap)` against `log(k)`.
pub fn fit_log_log(points: &[(u64, f64)]) -> Result<f64, FitError> {
    if points.len() < 2 {
        return Err(FitError::TooFewPoints);
    }
    if let Some(&(k, _)) = points.iter().find(|&&(k, g)| !(g > 0.0) || k == 0) {
        return Err(FitError::Converged { k });
    }
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), &(k, g)| {
        (sx + (k as f64).ln(), sy + g.ln())
    });
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(k, g)| {
        let dx = (k as f64).ln() - mx;
        (sxy + dx * (g.ln() - my), sxx + dx * dx)
    });
    if sxx == 0.0 {
        return Err(FitError::TooFewPoints);
    }
    Ok(sxy / sxx)
}

/// Slope of the gap `gap_fn(record)` over `k in [k_lo, k_hi]`.
pub fn fit_rate(
    trace: &Trace,
    k_lo: u64,
    k_hi: u64,
    gap_fn: impl Fn(&crate::trace::IterRecord) -> f64,
) -> Result<f64, FitError> {
    let pts: Vec<(u64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.k >= k_lo.max(1) && r.k <= k_hi)
        .map(|r| (r.k, gap_fn(r)))
        .collect();
    fit_log_log(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<_> = (1..=500u64).map(|k| (k, (k as f64).powi(-2))).collect();
        assert!((fit_log_log(&pts).unwrap() + 2.0).abs() < 1e-9);
        let pts: Vec<_> = (10..=1000u64).map(|k| (k, 3.5 / k as f64)).collect();
        assert!((fit_log_log(&pts).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn converged_window_reported() {
        let pts = vec![(1, 1.0), (2, 0.5), (3, 0.0)];
        assert_eq!(fit_log_log(&pts), Err(FitError::Converged { k: 3 }));
        assert_eq!(fit_log_log(&pts[..1]), Err(FitError::TooFewPoints));
    }

    #[test]
    fn single_entry_series_is_vacuous() {
        let s = LyapunovSeries {
            terms: vec![LyapunovTerm {
                k: 1,
                distance: 1.0,
                gap: 0.0,
                bregman: 0.0,
                momentum: 0.0,
            }],
            lambda_anomalies: vec![],
        };
        let e = check_monotone_psi(&s);
        assert!(e.passed());
        assert_eq!(e.checked, 0);
    }

    #[test]
    fn increasing_series_fails_at_the_right_k() {
        let mk = |k, d| LyapunovTerm {
            k,
            distance: d,
            gap: 0.0,
            bregman: 0.0,
            momentum: 0.0,
        };
        let s = LyapunovSeries {
            terms: vec![mk(1, 3.0), mk(2, 2.0), mk(3, 2.5), mk(4, 1.0)],
            lambda_anomalies: vec![],
        };
        let e = check_monotone_psi(&s);
        assert!(e.failed());
        assert_eq!(e.worst_k, Some(3));
        assert!((e.worst_violation - 0.5).abs() < 1e-9);
    }

    #[test]
    fn report_names_are_unique() {
        let mut r = CertificateReport::default();
        r.push(CertificateEntry::skipped("a", "x"));
        r.push(CertificateEntry::skipped("a", "y"));
        assert_eq!(r.entries.len(), 1);
        assert!(r.passed());
    }
}
