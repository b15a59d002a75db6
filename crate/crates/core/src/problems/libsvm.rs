//! LIBSVM text format: `label idx:val idx:val ...`, 1-based ascending
//! indices, `#` starts a comment, blank lines are skipped. Labels `0`/`-1`
//! map to `-1` and `1`/`+1` to `+1`.

use super::rng;
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LibsvmError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> LibsvmError {
    LibsvmError::Parse {
        line,
        message: message.into(),
    }
}

/// Sparse rows with `+-1` labels. Feature indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<f64>,
    pub n_features: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `<a_i, w>` for a dense `w` indexed from 0.
    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, v)| v * w[j - 1]).sum()
    }
}

fn parse_label(tok: &str, line: usize) -> Result<f64, LibsvmError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("non-numeric label `{tok}`")))?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == 0.0 || v == -1.0 {
        Ok(-1.0)
    } else {
        Err(parse_err(line, format!("label {tok} is not one of -1, 0, +1")))
    }
}

pub fn parse_libsvm<R: Read>(input: R) -> Result<SparseDataset, LibsvmError> {
    let reader = BufReader::new(input);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut n_features = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let label = parse_label(toks.next().unwrap(), lineno)?;
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in toks {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, found `{tok}`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(lineno, format!("non-numeric index `{i}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(lineno, format!("non-numeric value `{v}`")))?;
            if i == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based"));
            }
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value `{v}`")));
            }
            if let Some(&(last, _)) = row.last() {
                if i <= last {
                    return Err(parse_err(
                        lineno,
                        format!("nonincreasing indices ({last} then {i})"),
                    ));
                }
            }
            n_features = n_features.max(i);
            row.push((i, v));
        }
        rows.push(row);
        labels.push(label);
    }
    Ok(SparseDataset {
        rows,
        labels,
        n_features,
    })
}

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<SparseDataset, LibsvmError> {
    parse_libsvm(std::fs::File::open(path)?)
}

/// Writes labels as `+1`/`-1` and values with round-trip precision.
pub fn write_libsvm<W: Write>(data: &SparseDataset, mut out: W) -> std::io::Result<()> {
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        write!(out, "{}", if y > 0.0 { "+1" } else { "-1" })?;
        for &(i, v) in row {
            write!(out, " {i}:{v:e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Seeded sparse binary classification data. Each entry is present with
/// probability `density` (every row gets at least one feature) and drawn
/// from `U(0, 1)`; labels come from a random linear model with a fraction
/// `flip` of labels inverted, so the data is not separable.
pub fn synthetic_dataset(
    seed: u64,
    n_samples: usize,
    n_features: usize,
    density: f64,
    flip: f64,
) -> SparseDataset {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..n_features).map(|_| r.sample(StandardNormal)).collect();
    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut row: Vec<(usize, f64)> = (1..=n_features)
            .filter_map(|j| (r.random::<f64>() < density).then(|| (j, r.random::<f64>())))
            .collect();
        if row.is_empty() {
            row.push((r.random_range(1..=n_features), r.random::<f64>()));
        }
        let score: f64 = row.iter().map(|&(j, v)| v * w[j - 1]).sum::<f64>()
            + 0.1 * r.sample::<f64, _>(StandardNormal);
        let mut y = if score >= 0.0 { 1.0 } else { -1.0 };
        if r.random::<f64>() < flip {
            y = -y;
        }
        rows.push(row);
        labels.push(y);
    }
    SparseDataset {
        rows,
        labels,
        n_features,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_lines() {
        let d = parse_libsvm("1 1:0.5 3:2.0\n-1 2:1e-3\n".as_bytes()).unwrap();
        assert_eq!(d.labels, vec![1.0, -1.0]);
        assert_eq!(d.rows[0], vec![(1, 0.5), (3, 2.0)]);
        assert_eq!(d.rows[1], vec![(2, 1e-3)]);
        assert_eq!(d.n_features, 3);
    }

    #[test]
    fn comments_blank_lines_and_label_mapping() {
        let text = "# header\n\n0 1:1 # trailing\n+1 2:2\n";
        let d = parse_libsvm(text.as_bytes()).unwrap();
        assert_eq!(d.labels, vec![-1.0, 1.0]);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("1 3:1 2:1\n", 1, "nonincreasing"),
            ("1 1:1\n2 1:1\n", 2, "label"),
            ("1 1:x\n", 1, "non-numeric value"),
            ("\n1 a:1\n", 2, "non-numeric index"),
            ("1 0:1\n", 1, "1-based"),
            ("1 5\n", 1, "idx:val"),
        ];
        for (text, line, needle) in cases {
            match parse_libsvm(text.as_bytes()) {
                Err(LibsvmError::Parse { line: l, message }) => {
                    assert_eq!(l, line, "{text}");
                    assert!(message.contains(needle), "{message}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn synthetic_is_valid_and_seeded() {
        let d = synthetic_dataset(4, 200, 30, 0.2, 0.05);
        assert_eq!(d, synthetic_dataset(4, 200, 30, 0.2, 0.05));
        assert!(d.rows.iter().all(|r| !r.is_empty()
            && r.windows(2).all(|w| w[0].0 < w[1].0)
            && r.iter().all(|&(j, _)| (1..=30).contains(&j))));
        assert!(d.labels.iter().any(|&y| y > 0.0) && d.labels.iter().any(|&y| y < 0.0));
    }
}
