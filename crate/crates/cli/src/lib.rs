//! Experiment runner behind the `agraal` binary.
//!
//! Three commands:
//!
//! * `run CONFIG`: every (problem, method) cell of a TOML config, in parallel;
//!   one trace CSV per cell plus `summary.json` and `summary.csv`.
//! * `params --theta T [--gamma G]`: feasibility report for a parameter choice.
//! * `check TRACE --problem PROBLEM`: certificates on a stored trace.
//!
//! Exit codes are in [`ExitCode`].

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use agraal::diagnostics::{
    check_corollary_bound, check_h_envelope, check_monotone_psi, lemma_suite, lyapunov_series,
    CheckStatus, DiagnosticsError,
};
use agraal::params::{max_gamma, rate_constants};
use agraal::trace::read_csv;
use agraal::{
    run_baseline_problem, run_problem, write_csv, CertificateEntry, CertificateReport, Point,
    Problem, SolverParams, Trace,
};
use config::{parse_toml, CellPlan, CheckKind, ExperimentConfig, Plan, ProblemSpec, ResolvedMethod};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    CertificateFailure = 1,
    ConfigError = 2,
    Divergence = 3,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub problem: String,
    pub method: String,
    pub csv: String,
    /// `None` when the run could not start.
    pub status: Option<agraal::RunStatus>,
    pub error: Option<String>,
    pub iterations: u64,
    pub oracle_evals: u64,
    pub f_final: Option<f64>,
    pub gap_final: Option<f64>,
    pub certificates: Option<CertificateReport>,
}

impl CellSummary {
    fn completed(&self) -> bool {
        self.error.is_none() && !self.status.as_ref().is_some_and(|s| s.is_diverged())
    }

    fn certificates_passed(&self) -> bool {
        self.certificates.as_ref().is_none_or(|r| r.passed())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub checks: Vec<&'static str>,
    pub all_runs_completed: bool,
    pub all_certificates_passed: bool,
    pub cells: Vec<CellSummary>,
}

impl RunSummary {
    pub fn exit_code(&self) -> ExitCode {
        if !self.all_runs_completed {
            ExitCode::Divergence
        } else if !self.all_certificates_passed {
            ExitCode::CertificateFailure
        } else {
            ExitCode::Success
        }
    }
}

fn rename(mut e: CertificateEntry, name: String) -> CertificateEntry {
    e.name = name;
    e
}

/// Reference points for the bounds that hold for every `x`: the minimizer
/// when known, and the start.
fn references(problem: &Problem, x0: &Point) -> Vec<(&'static str, Point)> {
    let mut refs = Vec::new();
    if let Some(xs) = &problem.x_star {
        refs.push(("xstar", xs.clone()));
    }
    refs.push(("x0", x0.clone()));
    refs
}

/// Runs the requested certificates on an accelerated-method trace.
pub fn certify(
    trace: &Trace,
    problem: &Problem,
    checks: &[CheckKind],
) -> Result<CertificateReport, DiagnosticsError> {
    let oracle = problem.oracle.as_ref();
    let mut report = CertificateReport::default();
    let params = trace.params.ok_or(DiagnosticsError::MissingParams)?;
    let refs = references(problem, &trace.x0);
    for check in checks {
        match check {
            CheckKind::Lemma => {
                for e in lemma_suite(trace, Some(oracle), problem.lipschitz)?.entries {
                    report.push(e);
                }
            }
            CheckKind::HEnvelope => report.push(match problem.lipschitz {
                Some(l) => check_h_envelope(trace, &params, l)?,
                None => CertificateEntry::skipped("h_envelope", "Lipschitz constant unknown"),
            }),
            CheckKind::Corollary => {
                for (label, x) in &refs {
                    let e = check_corollary_bound(trace, x, oracle)?;
                    report.push(rename(e, format!("corollary_bound[{label}]")));
                }
            }
            CheckKind::Psi => {
                for (label, x) in &refs {
                    let series = lyapunov_series(trace, x, oracle)?;
                    report.push(rename(check_monotone_psi(&series), format!("psi_monotone[{label}]")));
                }
            }
        }
    }
    Ok(report)
}

fn run_cell(cell: &CellPlan, checks: &[CheckKind], out_dir: &Path) -> CellSummary {
    let mut summary = CellSummary {
        problem: cell.problem.label.clone(),
        method: cell.method_label.clone(),
        csv: cell.file_name.clone(),
        status: None,
        error: None,
        iterations: 0,
        oracle_evals: 0,
        f_final: None,
        gap_final: None,
        certificates: None,
    };
    let trace = match &cell.method {
        ResolvedMethod::Agraal { params, growth_cap } => {
            run_problem(&cell.problem, &cell.x0, params, &cell.stop, cell.store_iterates, *growth_cap)
                .map_err(|e| e.to_string())
        }
        ResolvedMethod::Baseline(b) => {
            run_baseline_problem(b, &cell.problem, &cell.x0, &cell.stop, cell.store_iterates).map_err(|e| e.to_string())
        }
    };
    let trace = match trace {
        Ok(t) => t,
        Err(e) => {
            summary.error = Some(e);
            return summary;
        }
    };
    let last = trace.last();
    summary.status = Some(trace.status.clone());
    summary.iterations = trace.iterations();
    summary.oracle_evals = trace.total_evals();
    summary.f_final = Some(last.f_bar);
    summary.gap_final = cell.problem.f_star.map(|fs| last.f_bar - fs);

    let written = std::fs::File::create(out_dir.join(&cell.file_name))
        .map_err(|e| e.to_string())
        .and_then(|f| write_csv(&trace, std::io::BufWriter::new(f)).map_err(|e| e.to_string()));
    if let Err(e) = written {
        summary.error = Some(format!("writing {}: {e}", cell.file_name));
        return summary;
    }

    // The guarantees cover the accelerated method with its own growth rule only.
    let certifiable = matches!(cell.method, ResolvedMethod::Agraal { growth_cap: false, .. });
    if !checks.is_empty() && !trace.status.is_diverged() {
        summary.certificates = Some(if certifiable {
            certify(&trace, &cell.problem, checks).unwrap_or_else(|e| {
                // A certificate that cannot be evaluated counts as failed.
                let mut entry = CertificateEntry::skipped("certificates", e.to_string());
                entry.status = CheckStatus::Fail;
                CertificateReport { entries: vec![entry] }
            })
        } else {
            let mut r = CertificateReport::default();
            r.push(CertificateEntry::skipped("certificates", "not applicable to this method"));
            r
        });
    }
    summary
}

/// Runs every cell of a plan and writes all outputs.
pub fn execute(plan: &Plan) -> std::io::Result<RunSummary> {
    std::fs::create_dir_all(&plan.output_dir)?;
    let cells: Vec<CellSummary> = plan
        .cells
        .par_iter()
        .map(|c| run_cell(c, &plan.checks, &plan.output_dir))
        .collect();
    let summary = RunSummary {
        checks: plan.checks.iter().map(|c| c.name()).collect(),
        all_runs_completed: cells.iter().all(CellSummary::completed),
        all_certificates_passed: cells.iter().all(CellSummary::certificates_passed),
        cells,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(std::io::Error::other)?;
    std::fs::write(plan.output_dir.join("summary.json"), json + "\n")?;
    write_table(&summary, &plan.output_dir.join("summary.csv"))?;
    Ok(summary)
}

#[derive(Serialize)]
struct TableRow<'a> {
    problem: &'a str,
    method: &'a str,
    status: String,
    iterations: u64,
    oracle_evals: u64,
    f_final: String,
    gap_final: String,
    certificates: &'static str,
}

/// Per-cell comparison table: progress per iteration and per oracle call.
fn write_table(summary: &RunSummary, path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for c in &summary.cells {
        let status = match (&c.status, &c.error) {
            (_, Some(_)) => "error".to_string(),
            (Some(s), None) => serde_json::to_value(s)
                .ok()
                .and_then(|v| v.get("status").and_then(|s| s.as_str()).map(String::from))
                .unwrap_or_default(),
            (None, None) => String::new(),
        };
        let certificates = match &c.certificates {
            None => "",
            Some(r) if !r.passed() => "fail",
            Some(r) if r.entries.iter().all(|e| !e.passed()) => "skipped",
            Some(_) => "pass",
        };
        w.serialize(TableRow {
            problem: &c.problem,
            method: &c.method,
            status,
            iterations: c.iterations,
            oracle_evals: c.oracle_evals,
            f_final: num(c.f_final),
            gap_final: num(c.gap_final),
            certificates,
        })?;
    }
    w.flush()
}

/// `run`: returns the exit code and writes a human summary to `out`.
pub fn cmd_run(config_path: &Path, out: &mut impl Write, err: &mut impl Write) -> ExitCode {
    let plan = match ExperimentConfig::from_path(config_path).and_then(|(cfg, base)| cfg.resolve(&base)) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "config error: {e}");
            return ExitCode::ConfigError;
        }
    };
    let summary = match execute(&plan) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "cannot write outputs to {}: {e}", plan.output_dir.display());
            return ExitCode::ConfigError;
        }
    };
    for c in &summary.cells {
        let state = match (&c.error, &c.status) {
            (Some(e), _) => format!("ERROR {e}"),
            (None, Some(s)) if s.is_diverged() => format!("DIVERGED {s:?}"),
            _ => format!("{} iterations, {} oracle calls", c.iterations, c.oracle_evals),
        };
        let _ = writeln!(out, "{} / {}: {state}", c.problem, c.method);
        if let Some(r) = &c.certificates {
            for e in r.failures() {
                let _ = writeln!(out, "  certificate {e}");
            }
        }
    }
    let _ = writeln!(out, "wrote {} traces to {}", summary.cells.len(), plan.output_dir.display());
    summary.exit_code()
}

/// `params`: feasibility of `(theta, gamma)` with `nu` from the equality.
pub fn cmd_params(theta: f64, gamma: Option<f64>, out: &mut impl Write) -> ExitCode {
    let gmax = match max_gamma(theta) {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(out, "{e}");
            return ExitCode::CertificateFailure;
        }
    };
    let p = match SolverParams::from_theta(theta, gamma, 1.0) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(out, "theta = {theta}, gamma_max = {gmax:.17e}: infeasible ({e})");
            return ExitCode::CertificateFailure;
        }
    };
    let report = p.validate();
    let _ = writeln!(out, "theta     = {theta}");
    let _ = writeln!(out, "gamma_max = {gmax:.17e}");
    let _ = writeln!(out, "gamma     = {:.17e}", p.gamma);
    let _ = writeln!(out, "nu        = {:.17e}", p.nu);
    if let Ok(rc) = rate_constants(&p, 1.0) {
        let _ = writeln!(out, "c         = {:.17e}", rc.c);
    }
    let _ = writeln!(out, "{report}");
    if report.passed() {
        ExitCode::Success
    } else {
        ExitCode::CertificateFailure
    }
}

/// `check`: certificates for a stored trace.
///
/// `checks = None` runs everything the trace supports; an explicit `psi`
/// request on a trace without iterates is an error.
pub fn cmd_check(
    trace_path: &Path,
    problem_path: &Path,
    theta: Option<f64>,
    gamma: Option<f64>,
    checks: Option<Vec<CheckKind>>,
    out: &mut impl Write,
    err: &mut impl Write,
) -> ExitCode {
    let fail = |err: &mut dyn Write, msg: String| {
        let _ = writeln!(err, "{msg}");
        ExitCode::ConfigError
    };
    let problem = match std::fs::read_to_string(problem_path)
        .map_err(|e| format!("cannot read {}: {e}", problem_path.display()))
        .and_then(|text| parse_toml::<ProblemSpec>(&text).map_err(|e| format!("problem: {e}")))
        .and_then(|spec| {
            let base = problem_path.parent().unwrap_or(Path::new("."));
            spec.build(0, base, "problem").map_err(|e| e.to_string())
        }) {
        Ok(p) => p,
        Err(e) => return fail(err, e),
    };
    let csv = match std::fs::File::open(trace_path)
        .map_err(|e| e.to_string())
        .and_then(|f| read_csv(std::io::BufReader::new(f)).map_err(|e| e.to_string()))
    {
        Ok(c) => c,
        Err(e) => return fail(err, format!("trace {}: {e}", trace_path.display())),
    };
    if let Some(d) = csv.dim() {
        if d != problem.dim() {
            return fail(err, format!("trace has dimension {d}, problem has {}", problem.dim()));
        }
    }
    let Some(eta0) = csv.records.first().map(|r| r.eta) else {
        return fail(err, "trace has no records".into());
    };
    let params = match SolverParams::from_theta(theta.unwrap_or(agraal::params::DEFAULT_THETA), gamma, eta0) {
        Ok(p) => p,
        Err(e) => return fail(err, format!("parameters: {e}")),
    };
    let has_iterates = csv.iterates.is_some();
    let checks = match checks {
        Some(c) if c.contains(&CheckKind::Psi) && !has_iterates => {
            return fail(err, "the psi check needs iterate columns: rerun with store_iterates = true".into());
        }
        Some(c) => c,
        None => CheckKind::ALL
            .into_iter()
            .filter(|&c| has_iterates || !matches!(c, CheckKind::Psi | CheckKind::Corollary))
            .collect(),
    };
    let trace = csv.into_trace("agraal", Some(params));
    if !has_iterates && checks.contains(&CheckKind::Corollary) {
        return fail(err, "the corollary check needs iterate columns: rerun with store_iterates = true".into());
    }
    let report = match certify(&trace, &problem, &checks) {
        Ok(r) => r,
        Err(e) => return fail(err, format!("certificates: {e}")),
    };
    for e in &report.entries {
        let _ = writeln!(out, "{e}");
    }
    if report.passed() {
        let _ = writeln!(out, "all {} certificates passed", report.entries.len());
        ExitCode::Success
    } else {
        let _ = writeln!(out, "{} certificate(s) failed", report.failures().count());
        ExitCode::CertificateFailure
    }
}
