//! Experiment configuration: a TOML document describing problems, methods and
//! the certificates to evaluate. See the README for a full example.
//!
//! Parsing rejects unknown keys. After parsing, [`ExperimentConfig::resolve`]
//! checks every method against every problem before anything runs, and all
//! errors name the offending field, e.g. `methods[1].eta0`.

use agraal::baselines::{ADGD_DEFAULT_GAMMA, ADGD_DEFAULT_NU};
use agraal::problems::{diagonal_quadratic, load_libsvm, seeded_point, synthetic_dataset, LogisticOracle};
use agraal::{
    least_squares_problem, logistic_problem, logsumexp_problem, make_quadratic, BaselineMethod, Point, Problem,
    SolverParams, StopRule,
};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

/// Deserializes TOML text, reporting the dotted path of the failing field.
pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
        path: "<document>".into(),
        message: e.to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Parse {
            path: if path == "." { "<document>".into() } else { path },
            message: e.into_inner().message().trim().to_string(),
        }
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Default seed for generated problems and seeded starting points.
    #[serde(default)]
    pub seed: u64,
    /// Relative paths are resolved against the config file's directory.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    pub problems: Vec<ProblemSpec>,
    pub methods: Vec<MethodSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Lemma,
    HEnvelope,
    Corollary,
    Psi,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [Self::Lemma, Self::HEnvelope, Self::Corollary, Self::Psi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lemma => "lemma",
            Self::HEnvelope => "h_envelope",
            Self::Corollary => "corollary",
            Self::Psi => "psi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Starting point: `"zeros"`, `"seeded"` (standard normal from the seed) or an
/// explicit vector.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for StartSpec {
    fn default() -> Self {
        StartSpec::Named("zeros".into())
    }
}

impl StartSpec {
    fn point(&self, dim: usize, seed: u64, field: &str) -> Result<Point, ConfigError> {
        match self {
            StartSpec::Named(n) if n == "zeros" => Ok(Point::zeros(dim)),
            StartSpec::Named(n) if n == "seeded" => Ok(seeded_point(seed, dim, 1.0)),
            StartSpec::Named(n) => Err(invalid(field, format!("unknown start `{n}`, expected \"zeros\", \"seeded\" or a vector"))),
            StartSpec::Explicit(v) if v.len() == dim => Ok(Point::from_column_slice(v)),
            StartSpec::Explicit(v) => Err(invalid(field, format!("vector has length {}, problem dimension is {dim}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Log-spaced spectrum over `[1, cond]` in a random basis.
    Quadratic {
        dim: usize,
        cond: f64,
        seed: Option<u64>,
    },
    /// Axis-aligned quadratic with the given curvatures; minimizer defaults to 0.
    Diagonal {
        weights: Vec<f64>,
        x_star: Option<Vec<f64>>,
    },
    /// L2-regularized logistic regression on a LIBSVM file or synthetic data.
    Logistic {
        dataset: Option<PathBuf>,
        synthetic: Option<SyntheticSpec>,
        #[serde(default)]
        reg: f64,
        /// Compute the minimizer with Newton's method (needs `reg > 0`).
        #[serde(default)]
        solve_reference: bool,
    },
    LogSumExp {
        dim: usize,
        terms: usize,
        mu: f64,
        seed: Option<u64>,
    },
    /// Gaussian design with a noisy planted solution.
    LeastSquares {
        samples: usize,
        dim: usize,
        #[serde(default)]
        noise: f64,
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub samples: usize,
    pub features: usize,
    pub density: f64,
    #[serde(default)]
    pub label_noise: f64,
    pub seed: Option<u64>,
}

impl ProblemSpec {
    /// Builds the problem; `base` resolves relative dataset paths.
    pub fn build(&self, default_seed: u64, base: &Path, field: &str) -> Result<Problem, ConfigError> {
        let err = |e: &dyn std::fmt::Display| invalid(field, e);
        match self {
            ProblemSpec::Quadratic { dim, cond, seed } => {
                make_quadratic(seed.unwrap_or(default_seed), *dim, *cond).map_err(|e| err(&e))
            }
            ProblemSpec::Diagonal { weights, x_star } => {
                let xs = x_star.clone().unwrap_or_else(|| vec![0.0; weights.len()]);
                diagonal_quadratic(weights, Point::from_vec(xs)).map_err(|e| err(&e))
            }
            ProblemSpec::Logistic {
                dataset,
                synthetic,
                reg,
                solve_reference,
            } => {
                let data = match (dataset, synthetic) {
                    (Some(path), None) => {
                        let path = base.join(path);
                        load_libsvm(&path).map_err(|e| invalid(format!("{field}.dataset"), format!("{}: {e}", path.display())))?
                    }
                    (None, Some(s)) => {
                        let f = format!("{field}.synthetic");
                        if s.samples == 0 || s.features == 0 {
                            return Err(invalid(f, "samples and features must be positive"));
                        }
                        if !(s.density > 0.0 && s.density <= 1.0) {
                            return Err(invalid(format!("{f}.density"), "must lie in (0, 1]"));
                        }
                        if !(0.0..=0.5).contains(&s.label_noise) {
                            return Err(invalid(format!("{f}.label_noise"), "must lie in [0, 0.5]"));
                        }
                        synthetic_dataset(s.seed.unwrap_or(default_seed), s.samples, s.features, s.density, s.label_noise)
                    }
                    _ => return Err(invalid(field, "set exactly one of `dataset` and `synthetic`")),
                };
                let problem = logistic_problem(data.clone(), *reg).map_err(|e| err(&e))?;
                if !*solve_reference {
                    return Ok(problem);
                }
                if !(*reg > 0.0) {
                    return Err(invalid(format!("{field}.solve_reference"), "needs reg > 0"));
                }
                let (x, f) = LogisticOracle::new(data, *reg).solve_reference().map_err(|e| err(&e))?;
                Ok(problem.with_optimum(x, f))
            }
            ProblemSpec::LogSumExp { dim, terms, mu, seed } => {
                logsumexp_problem(seed.unwrap_or(default_seed), *dim, *terms, *mu).map_err(|e| err(&e))
            }
            ProblemSpec::LeastSquares { samples, dim, noise, seed } => {
                least_squares_problem(seed.unwrap_or(default_seed), *samples, *dim, *noise).map_err(|e| err(&e))
            }
        }
    }
}

/// A stepsize given as a number or as `"c/L"` (e.g. `"1/L"`), resolved
/// against each problem's Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Value(f64),
    Text(String),
}

impl EtaSpec {
    pub fn resolve(&self, lipschitz: Option<f64>, field: &str) -> Result<f64, ConfigError> {
        let eta = match self {
            EtaSpec::Value(v) => *v,
            EtaSpec::Text(t) => {
                let compact: String = t.chars().filter(|c| !c.is_whitespace()).collect();
                let Some(num) = compact.strip_suffix("/L") else {
                    return Err(invalid(field, format!("`{t}` is neither a number nor of the form \"c/L\"")));
                };
                let c: f64 = num
                    .parse()
                    .map_err(|_| invalid(field, format!("`{num}` in `{t}` is not a number")))?;
                let l = lipschitz.ok_or_else(|| invalid(field, "problem has no known Lipschitz constant"))?;
                c / l
            }
        };
        if eta > 0.0 && eta.is_finite() {
            Ok(eta)
        } else {
            Err(invalid(field, format!("stepsize must be positive and finite, got {eta}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Agraal,
    Gd,
    Agd,
    Adgd,
    Adagrad,
    Bb,
    Polyak,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Agraal => "agraal",
            MethodKind::Gd => "gd",
            MethodKind::Agd => "agd",
            MethodKind::Adgd => "adgd",
            MethodKind::Adagrad => "adagrad",
            MethodKind::Bb => "bb",
            MethodKind::Polyak => "polyak",
        }
    }
}

/// One method entry. Hyperparameters a method does not use are rejected.
///
/// `eta0` is the initial stepsize for `agraal`, `adgd` and `bb`, the fixed
/// stepsize for `gd` and `agd`, and the scale for `adagrad`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub kind: MethodKind,
    /// Used in file names and the summary; defaults to `kind`.
    pub label: Option<String>,
    pub eta0: Option<EtaSpec>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub nu: Option<f64>,
    pub option2: Option<bool>,
    pub growth_cap: Option<bool>,
    pub max_iters: u64,
    pub grad_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub store_iterates: bool,
}

/// What to run in one cell, with every hyperparameter resolved.
#[derive(Debug, Clone)]
pub enum ResolvedMethod {
    Agraal { params: SolverParams, growth_cap: bool },
    Baseline(BaselineMethod),
}

impl MethodSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    fn check_unused(&self, field: &str) -> Result<(), ConfigError> {
        use MethodKind::*;
        let allowed: &[&str] = match self.kind {
            Agraal => &["eta0", "theta", "gamma", "growth_cap"],
            Gd | Agd | Adagrad | Bb => &["eta0"],
            Adgd => &["eta0", "gamma", "nu", "option2"],
            Polyak => &[],
        };
        let present = [
            ("eta0", self.eta0.is_some()),
            ("theta", self.theta.is_some()),
            ("gamma", self.gamma.is_some()),
            ("nu", self.nu.is_some()),
            ("option2", self.option2.is_some()),
            ("growth_cap", self.growth_cap.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(invalid(format!("{field}.{name}"), format!("not a parameter of `{}`", self.kind.name())));
            }
        }
        Ok(())
    }

    pub fn stop_rule(&self, field: &str) -> Result<StopRule, ConfigError> {
        let mut stop = StopRule::iterations(self.max_iters);
        if let Some(t) = self.grad_tol {
            stop = stop.with_grad_tol(t);
        }
        if let Some(t) = self.gap_tol {
            stop = stop.with_gap_tol(t);
        }
        stop.validate().map_err(|m| invalid(field, m))?;
        Ok(stop)
    }

    /// Resolves the method against one problem.
    pub fn resolve(&self, problem: &Problem, field: &str) -> Result<ResolvedMethod, ConfigError> {
        self.check_unused(field)?;
        let eta_field = format!("{field}.eta0");
        let eta = |required: bool| -> Result<Option<f64>, ConfigError> {
            match &self.eta0 {
                Some(e) => e.resolve(problem.lipschitz, &eta_field).map(Some),
                None if required => Err(invalid(&eta_field, "required")),
                None => Ok(None),
            }
        };
        let resolved = match self.kind {
            MethodKind::Agraal => {
                let eta0 = eta(true)?.unwrap();
                let params = SolverParams::from_theta(self.theta.unwrap_or(agraal::params::DEFAULT_THETA), self.gamma, eta0)
                    .map_err(|e| invalid(field, e))?;
                ResolvedMethod::Agraal {
                    params,
                    growth_cap: self.growth_cap.unwrap_or(false),
                }
            }
            MethodKind::Gd => ResolvedMethod::Baseline(BaselineMethod::Gd { eta: eta(true)?.unwrap() }),
            MethodKind::Agd => ResolvedMethod::Baseline(BaselineMethod::Agd { eta: eta(true)?.unwrap() }),
            MethodKind::Adagrad => ResolvedMethod::Baseline(BaselineMethod::AdaGrad { eta: eta(true)?.unwrap() }),
            MethodKind::Bb => ResolvedMethod::Baseline(BaselineMethod::Bb { eta0: eta(true)?.unwrap() }),
            MethodKind::Adgd => ResolvedMethod::Baseline(BaselineMethod::AdGd {
                eta0: eta(true)?.unwrap(),
                gamma: self.gamma.unwrap_or(ADGD_DEFAULT_GAMMA),
                nu: self.nu.unwrap_or(ADGD_DEFAULT_NU),
                option2: self.option2.unwrap_or(false),
            }),
            MethodKind::Polyak => {
                let f_star = problem
                    .f_star
                    .ok_or_else(|| invalid(field, format!("polyak needs the optimal value of `{}`", problem.label)))?;
                ResolvedMethod::Baseline(BaselineMethod::Polyak { f_star })
            }
        };
        if let ResolvedMethod::Baseline(b) = &resolved {
            b.validate().map_err(|e| invalid(field, e))?;
        }
        Ok(resolved)
    }
}

/// One (problem, method) pair ready to run.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub problem_index: usize,
    pub method_index: usize,
    pub problem: Problem,
    pub method: ResolvedMethod,
    pub method_label: String,
    pub x0: Point,
    pub stop: StopRule,
    pub store_iterates: bool,
    pub file_name: String,
}

/// A validated experiment: problems built, methods resolved, outputs named.
#[derive(Debug, Clone)]
pub struct Plan {
    pub output_dir: PathBuf,
    pub checks: Vec<CheckKind>,
    pub cells: Vec<CellPlan>,
}

fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    while out.contains("__") {
        out = out.replace("__", "_");
    }
    out.trim_matches('_').to_string()
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<(Self, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((parse_toml(&text)?, base))
    }

    /// Validates everything and builds the run plan; nothing runs yet.
    pub fn resolve(&self, base: &Path) -> Result<Plan, ConfigError> {
        if self.problems.is_empty() {
            return Err(invalid("problems", "at least one problem is required"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is required"));
        }
        let mut labels = std::collections::HashSet::new();
        for (j, m) in self.methods.iter().enumerate() {
            if !labels.insert(m.label()) {
                return Err(invalid(format!("methods[{j}].label"), format!("duplicate label `{}`", m.label())));
            }
            let field = format!("methods[{j}]");
            m.stop_rule(&field)?;
            let is_plain = m.kind == MethodKind::Agraal && !m.growth_cap.unwrap_or(false);
            if self.checks.contains(&CheckKind::Psi) && is_plain && !m.store_iterates {
                return Err(invalid(format!("{field}.store_iterates"), "the psi check needs store_iterates = true"));
            }
        }
        let mut checks = self.checks.clone();
        checks.sort();
        checks.dedup();

        let mut cells = Vec::new();
        for (i, spec) in self.problems.iter().enumerate() {
            let pfield = format!("problems[{i}]");
            let problem = spec.build(self.seed, base, &pfield)?;
            let x0 = self.start.point(problem.dim(), self.seed, "start")?;
            for (j, m) in self.methods.iter().enumerate() {
                let mfield = format!("methods[{j}]");
                let method = m.resolve(&problem, &mfield)?;
                let label = m.label();
                cells.push(CellPlan {
                    problem_index: i,
                    method_index: j,
                    file_name: format!("p{i:02}_{}__m{j:02}_{}.csv", slug(&problem.label), slug(&label)),
                    problem: problem.clone(),
                    method,
                    method_label: label,
                    x0: x0.clone(),
                    stop: m.stop_rule(&mfield)?,
                    store_iterates: m.store_iterates,
                });
            }
        }
        Ok(Plan {
            output_dir: base.join(&self.output_dir),
            checks,
            cells,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        parse_toml(text)
    }

    const MINIMAL: &str = r#"
        output_dir = "out"
        [[problems]]
        kind = "quadratic"
        dim = 3
        cond = 10.0
        [[methods]]
        kind = "agraal"
        eta0 = "1/L"
        max_iters = 5
    "#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = parse(MINIMAL).unwrap();
        let plan = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(plan.cells.len(), 1);
        match &plan.cells[0].method {
            ResolvedMethod::Agraal { params, .. } => assert!((params.eta0 - 0.1).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = parse(&MINIMAL.replace("cond = 10.0", "cond = 10.0\ncondd = 1")).unwrap_err();
        assert!(err.to_string().contains("problems[0]"), "{err}");
        assert!(err.to_string().contains("condd"), "{err}");
        let err = parse(&format!("{MINIMAL}\nverbose = true")).unwrap_err();
        assert!(err.to_string().contains("verbose"), "{err}");
    }

    #[test]
    fn eta_forms() {
        assert_eq!(EtaSpec::Text("1/L".into()).resolve(Some(4.0), "f").unwrap(), 0.25);
        assert_eq!(EtaSpec::Text(" 0.5 / L".into()).resolve(Some(4.0), "f").unwrap(), 0.125);
        assert!(EtaSpec::Text("1/L".into()).resolve(None, "f").is_err());
        assert!(EtaSpec::Text("L".into()).resolve(Some(1.0), "f").is_err());
        assert!(EtaSpec::Value(-1.0).resolve(None, "f").is_err());
    }

    #[test]
    fn irrelevant_hyperparameters_rejected() {
        let cfg = parse(&MINIMAL.replace("kind = \"agraal\"", "kind = \"gd\"\ntheta = 2.0")).unwrap();
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert_eq!(err.to_string(), "methods[0].theta: not a parameter of `gd`");
    }

    #[test]
    fn infeasible_theta_is_a_config_error() {
        let cfg = parse(&MINIMAL.replace("eta0 = \"1/L\"", "eta0 = \"1/L\"\ntheta = 1.5")).unwrap();
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert!(err.to_string().starts_with("methods[0]:"), "{err}");
    }

    #[test]
    fn psi_needs_iterates() {
        let cfg = parse(&format!("checks = [\"psi\"]\n{MINIMAL}")).unwrap();
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("store_iterates"), "{err}");
    }

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("quadratic(d=3,cond=1e1,seed=0)"), "quadratic_d_3_cond_1e1_seed_0");
    }
}
