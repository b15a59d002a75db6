//! Per-iteration run records shared by every method, and their CSV form.
//!
//! CSV columns, in order:
//!
//! ```text
//! k, eta, H, alpha, beta, lambda, f_bar, f_tilde, grad_norm_tilde, evals_cum
//! [x_0 .. x_{d-1}, xbar_0 .. xbar_{d-1}, xtilde_0 .. xtilde_{d-1}]
//! ```
//!
//! An empty cell means "not applicable" (for instance `H` for plain gradient
//! descent) or, in the `lambda` column, `+inf` / undefined. Floats are written
//! with 17 significant digits so every value parses back to the same bits.

use crate::oracle::Point;
use crate::params::SolverParams;
use serde::Serialize;
use std::io::{Read, Write};
use thiserror::Error;

pub const SCALAR_COLUMNS: [&str; 10] = [
    "k",
    "eta",
    "H",
    "alpha",
    "beta",
    "lambda",
    "f_bar",
    "f_tilde",
    "grad_norm_tilde",
    "evals_cum",
];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace schema mismatch: {0}")]
    Schema(String),
    #[error("line {line}: column `{column}`: {message}")]
    Cell {
        line: u64,
        column: String,
        message: String,
    },
}

/// Scalar summary of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterRecord {
    pub k: u64,
    pub eta: f64,
    pub h: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// `None` means `+inf` or undefined (the solver's `k = 0` record).
    pub lambda: Option<f64>,
    pub f_bar: f64,
    pub f_tilde: Option<f64>,
    pub grad_norm_tilde: Option<f64>,
    pub evals_cum: u64,
    /// Set when a method substituted a fallback for an undefined quantity.
    /// Not serialized to CSV.
    #[serde(skip)]
    pub fallback: bool,
}

/// Iterate vectors of one iteration, stored only when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateSnapshot {
    pub x: Point,
    pub x_bar: Point,
    pub x_tilde: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    /// Stopped by `max_iters`.
    MaxIters,
    GradTol,
    GapTol,
    /// A method-specific convergence signal (e.g. zero gradient sum).
    Converged,
    /// Non-finite iterate or oracle output at iteration `k`.
    Diverged { k: u64, reason: String },
}

impl RunStatus {
    pub fn is_diverged(&self) -> bool {
        matches!(self, RunStatus::Diverged { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemMeta {
    pub label: String,
    pub dim: usize,
    pub lipschitz: Option<f64>,
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub method: String,
    pub records: Vec<IterRecord>,
    /// One snapshot per record when iterates were stored.
    pub iterates: Option<Vec<IterateSnapshot>>,
    pub params: Option<SolverParams>,
    pub problem: Option<ProblemMeta>,
    pub status: RunStatus,
    /// Starting point.
    pub x0: Point,
    /// `x_K` of the last completed iteration.
    pub final_x: Point,
    /// Reported solution (`x_bar_K` for the accelerated method).
    pub solution: Point,
}

impl Trace {
    /// Number of completed iterations `K`.
    pub fn iterations(&self) -> u64 {
        self.records.len().saturating_sub(1) as u64
    }

    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    pub fn total_evals(&self) -> u64 {
        self.last().evals_cum
    }

    pub fn has_iterates(&self) -> bool {
        self.iterates.is_some()
    }

    /// First iteration whose `f_bar - f_star <= tol`.
    pub fn first_k_with_gap(&self, f_star: f64, tol: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.f_bar - f_star <= tol)
            .map(|r| r.k)
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes the trace as CSV (see the module docs for the schema).
pub fn write_csv<W: Write>(trace: &Trace, out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    let dim = trace.x0.len();
    let mut header: Vec<String> = SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
    if trace.iterates.is_some() {
        for prefix in ["x", "xbar", "xtilde"] {
            header.extend((0..dim).map(|i| format!("{prefix}_{i}")));
        }
    }
    w.write_record(&header)?;
    for (i, r) in trace.records.iter().enumerate() {
        let mut row = vec![
            r.k.to_string(),
            fmt_f64(r.eta),
            fmt_opt(r.h),
            fmt_opt(r.alpha),
            fmt_opt(r.beta),
            fmt_opt(r.lambda),
            fmt_f64(r.f_bar),
            fmt_opt(r.f_tilde),
            fmt_opt(r.grad_norm_tilde),
            r.evals_cum.to_string(),
        ];
        if let Some(its) = &trace.iterates {
            let s = &its[i];
            for v in [&s.x, &s.x_bar, &s.x_tilde] {
                row.extend(v.iter().map(|c| fmt_f64(*c)));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Scalars and optional iterates read back from a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrace {
    pub records: Vec<IterRecord>,
    pub iterates: Option<Vec<IterateSnapshot>>,
}

impl CsvTrace {
    pub fn dim(&self) -> Option<usize> {
        self.iterates
            .as_ref()
            .and_then(|v| v.first())
            .map(|s| s.x.len())
    }
}

fn parse_cell(line: u64, column: &str, cell: &str) -> Result<Option<f64>, TraceError> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|e| TraceError::Cell {
        line,
        column: column.to_string(),
        message: e.to_string(),
    })
}

fn required(line: u64, column: &str, cell: &str) -> Result<f64, TraceError> {
    parse_cell(line, column, cell)?.ok_or_else(|| TraceError::Cell {
        line,
        column: column.to_string(),
        message: "missing value".into(),
    })
}

fn parse_u64(line: u64, column: &str, cell: &str) -> Result<u64, TraceError> {
    cell.parse::<u64>().map_err(|e| TraceError::Cell {
        line,
        column: column.to_string(),
        message: e.to_string(),
    })
}

pub fn read_csv<R: Read>(input: R) -> Result<CsvTrace, TraceError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < SCALAR_COLUMNS.len()
        || header
            .iter()
            .zip(SCALAR_COLUMNS.iter())
            .any(|(a, b)| a != *b)
    {
        return Err(TraceError::Schema(format!(
            "expected leading columns {:?}, found {:?}",
            SCALAR_COLUMNS,
            header.iter().take(SCALAR_COLUMNS.len()).collect::<Vec<_>>()
        )));
    }
    let extra = header.len() - SCALAR_COLUMNS.len();
    let dim = if extra == 0 {
        None
    } else if extra.is_multiple_of(3) {
        let d = extra / 3;
        for (j, prefix) in ["x", "xbar", "xtilde"].iter().enumerate() {
            for i in 0..d {
                let want = format!("{prefix}_{i}");
                let got = &header[SCALAR_COLUMNS.len() + j * d + i];
                if got != want {
                    return Err(TraceError::Schema(format!(
                        "iterate column {} should be `{want}`, found `{got}`",
                        SCALAR_COLUMNS.len() + j * d + i
                    )));
                }
            }
        }
        Some(d)
    } else {
        return Err(TraceError::Schema(format!(
            "{extra} iterate columns is not a multiple of 3"
        )));
    };

    let mut records = Vec::new();
    let mut iterates = dim.map(|_| Vec::new());
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let c = |i: usize| row.get(i).unwrap_or("");
        records.push(IterRecord {
            k: parse_u64(line, "k", c(0))?,
            eta: required(line, "eta", c(1))?,
            h: parse_cell(line, "H", c(2))?,
            alpha: parse_cell(line, "alpha", c(3))?,
            beta: parse_cell(line, "beta", c(4))?,
            lambda: parse_cell(line, "lambda", c(5))?,
            f_bar: required(line, "f_bar", c(6))?,
            f_tilde: parse_cell(line, "f_tilde", c(7))?,
            grad_norm_tilde: parse_cell(line, "grad_norm_tilde", c(8))?,
            evals_cum: parse_u64(line, "evals_cum", c(9))?,
            fallback: false,
        });
        if let (Some(d), Some(its)) = (dim, iterates.as_mut()) {
            let mut vecs = Vec::with_capacity(3);
            for j in 0..3 {
                let mut v = Vec::with_capacity(d);
                for i in 0..d {
                    let col = SCALAR_COLUMNS.len() + j * d + i;
                    v.push(required(line, &header[col], c(col))?);
                }
                vecs.push(Point::from_vec(v));
            }
            let x_tilde = vecs.pop().unwrap();
            let x_bar = vecs.pop().unwrap();
            let x = vecs.pop().unwrap();
            its.push(IterateSnapshot { x, x_bar, x_tilde });
        }
    }
    if records.is_empty() {
        return Err(TraceError::Schema("trace has no records".into()));
    }
    Ok(CsvTrace { records, iterates })
}

impl CsvTrace {
    /// Rebuilds a [`Trace`] for diagnostics. Without iterates the point fields
    /// are empty vectors.
    pub fn into_trace(self, method: &str, params: Option<SolverParams>) -> Trace {
        let (x0, final_x, solution) = match &self.iterates {
            Some(its) => (
                its[0].x.clone(),
                its.last().unwrap().x.clone(),
                its.last().unwrap().x_bar.clone(),
            ),
            None => (Point::zeros(0), Point::zeros(0), Point::zeros(0)),
        };
        Trace {
            method: method.to_string(),
            records: self.records,
            iterates: self.iterates,
            params,
            problem: None,
            status: RunStatus::MaxIters,
            x0,
            final_x,
            solution,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(with_iterates: bool) -> Trace {
        let rec = |k: u64, lambda: Option<f64>| IterRecord {
            k,
            eta: 0.1 / 3.0 * (k as f64 + 1.0),
            h: Some(std::f64::consts::PI * k as f64),
            alpha: Some(1.0 / 7.0),
            beta: Some(1.0),
            lambda,
            f_bar: -1.0e-300 * k as f64,
            f_tilde: Some(2.0f64.sqrt()),
            grad_norm_tilde: None,
            evals_cum: 1 + 2 * k,
            fallback: false,
        };
        let snap = |s: f64| IterateSnapshot {
            x: Point::from_vec(vec![s, -s / 3.0]),
            x_bar: Point::from_vec(vec![s * 1e-17, 5e-324]),
            x_tilde: Point::from_vec(vec![1e300, s]),
        };
        Trace {
            method: "t".into(),
            records: vec![rec(0, None), rec(1, Some(0.123_456_789_012_345_68))],
            iterates: with_iterates.then(|| vec![snap(0.1), snap(0.7)]),
            params: None,
            problem: None,
            status: RunStatus::MaxIters,
            x0: Point::from_vec(vec![0.1, -0.1 / 3.0]),
            final_x: Point::zeros(2),
            solution: Point::zeros(2),
        }
    }

    #[test]
    fn round_trip_with_and_without_iterates() {
        for with in [false, true] {
            let t = sample(with);
            let mut buf = Vec::new();
            write_csv(&t, &mut buf).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            assert_eq!(back.records, t.records);
            assert_eq!(back.iterates, t.iterates);
        }
    }

    #[test]
    fn infinite_lambda_is_empty_cell() {
        let mut buf = Vec::new();
        write_csv(&sample(false), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().nth(1).unwrap();
        assert_eq!(first.split(',').nth(5), Some(""));
        assert!(!text.contains("inf"));
    }

    #[test]
    fn schema_mismatch_reported() {
        let bad = "k,eta,H\n0,1,1\n";
        assert!(matches!(
            read_csv(bad.as_bytes()),
            Err(TraceError::Schema(_))
        ));
        let header = SCALAR_COLUMNS.join(",");
        let bad_iter = format!("{header},x_0,xbar_0\n");
        assert!(matches!(
            read_csv(bad_iter.as_bytes()),
            Err(TraceError::Schema(_))
        ));
        let bad_cell = format!("{header}\n0,abc,,,,,0,,,1\n");
        assert!(matches!(
            read_csv(bad_cell.as_bytes()),
            Err(TraceError::Cell { .. })
        ));
    }
}
