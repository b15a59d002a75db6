use agraal::{make_quadratic, SolverParams, StopRule};
use agraal_cli::config::{CellPlan, CheckKind, Plan, ResolvedMethod};
use agraal_cli::{execute, ExitCode};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_agraal"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const THREE_METHODS: &str = r#"
output_dir = "out"
seed = 3
start = "seeded"
checks = ["lemma", "h_envelope", "corollary", "psi"]

[[problems]]
kind = "quadratic"
dim = 12
cond = 100.0

[[methods]]
kind = "agraal"
eta0 = 1e-6
max_iters = 300
store_iterates = true

[[methods]]
kind = "gd"
eta0 = "1/L"
max_iters = 300

[[methods]]
kind = "agd"
eta0 = "1/L"
max_iters = 300
"#;

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv") && !p.ends_with("summary.csv"))
        .collect();
    files.sort();
    files
}

#[test]
fn run_writes_one_trace_per_cell_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), THREE_METHODS);
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let out = dir.path().join("out");
    let files = csv_files(&out);
    assert_eq!(files.len(), 3, "{files:?}");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["all_certificates_passed"], true);
    let cells = summary["cells"].as_array().unwrap();
    let evals: Vec<u64> = cells.iter().map(|c| c["oracle_evals"].as_u64().unwrap()).collect();
    assert_eq!(evals, vec![601, 301, 301]);
    let names: Vec<&str> = cells[0]["certificates"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    for expected in ["coupling_identity", "h_envelope", "corollary_bound[xstar]", "psi_monotone[x0]"] {
        assert!(names.contains(&expected), "{names:?}");
    }
    let table = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("problem,method,status,iterations,oracle_evals"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), THREE_METHODS);
    let snapshot = || {
        assert_eq!(bin().arg("run").arg(&cfg).output().unwrap().status.code(), Some(0));
        let out = dir.path().join("out");
        let mut files = csv_files(&out);
        files.push(out.join("summary.json"));
        files.push(out.join("summary.csv"));
        files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>()
    };
    let first = snapshot();
    std::fs::remove_dir_all(dir.path().join("out")).unwrap();
    assert_eq!(first, snapshot());
}

#[test]
fn certificate_failure_exits_one_and_names_the_check() {
    // Understating L makes the curvature lower bound fail.
    let mut problem = make_quadratic(2, 10, 100.0).unwrap();
    problem.lipschitz = Some(1.0);
    let dir = tempfile::tempdir().unwrap();
    let plan = Plan {
        output_dir: dir.path().to_path_buf(),
        checks: vec![CheckKind::Lemma],
        cells: vec![CellPlan {
            problem_index: 0,
            method_index: 0,
            x0: agraal::problems::seeded_point(1, 10, 1.0),
            problem,
            method: ResolvedMethod::Agraal {
                params: SolverParams::defaults(1e-3).unwrap(),
                growth_cap: false,
            },
            method_label: "agraal".into(),
            stop: StopRule::iterations(100),
            store_iterates: false,
            file_name: "trace.csv".into(),
        }],
    };
    let summary = execute(&plan).unwrap();
    assert_eq!(summary.exit_code(), ExitCode::CertificateFailure);
    let json = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let entries = v["cells"][0]["certificates"]["entries"].as_array().unwrap();
    let failed = entries.iter().find(|e| e["name"] == "lambda_lower").unwrap();
    assert_eq!(failed["status"], "fail");
    assert!(failed["worst_k"].as_u64().unwrap() >= 1);
}

#[test]
fn config_errors_exit_two_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &THREE_METHODS.replace("max_iters = 300\nstore_iterates", "max_iter = 300\nstore_iterates"));
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("methods[0]") && err.contains("max_iter"), "{err}");

    let cfg = write_config(dir.path(), &THREE_METHODS.replace("eta0 = 1e-6", "eta0 = \"fast\""));
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("methods[0].eta0"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists(), "nothing runs before validation");
}

#[test]
fn divergence_exits_three_without_aborting_siblings() {
    let dir = tempfile::tempdir().unwrap();
    let body = THREE_METHODS.replace("kind = \"gd\"\neta0 = \"1/L\"\nmax_iters = 300", "kind = \"gd\"\neta0 = \"10/L\"\nmax_iters = 5000");
    let cfg = write_config(dir.path(), &body);
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(v["cells"][1]["status"]["status"], "diverged");
    assert_eq!(v["cells"][0]["status"]["status"], "max_iters");
    assert_eq!(v["cells"][2]["status"]["status"], "max_iters");
    assert_eq!(csv_files(&dir.path().join("out")).len(), 3);
}

#[test]
fn params_command() {
    let o = bin().args(["params", "--theta", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split('=').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!((value("gamma     ") - 1.0 / 22.0).abs() < 1e-16);
    assert!((value("nu ") - 5.1985e-3).abs() < 1e-7);

    let o = bin().args(["params", "--theta", "1.5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("1.618"), "{}", stdout(&o));

    let o = bin().args(["params", "--theta", "2", "--gamma", "0.01"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let nu: f64 = stdout(&o)
        .lines()
        .find(|l| l.starts_with("nu"))
        .and_then(|l| l.split('=').nth(1))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    // nu = gamma / (4 theta (1 + gamma)^2)
    assert!((nu - 0.01 / (8.0 * 1.01 * 1.01)).abs() < 1e-17);
}

#[test]
fn check_passes_on_the_golden_trace() {
    let trace = std::fs::read_to_string(data("golden_half_square.csv")).unwrap();
    let row1: Vec<&str> = trace.lines().nth(2).unwrap().split(',').collect();
    let cell = |i: usize| row1[i].parse::<f64>().unwrap();
    assert!((cell(3) - 23.0 / 45.0).abs() < 1e-15);
    assert!((cell(1) - 11.0 / 2116.0).abs() < 1e-15);

    let o = bin()
        .arg("check")
        .arg(data("golden_half_square.csv"))
        .arg("--problem")
        .arg(data("half_square.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("psi_monotone[xstar]") && text.contains("all 12 certificates passed"), "{text}");
}

#[test]
fn check_locates_a_corrupted_stepsize() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("golden_half_square.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[4].split(',').map(String::from).collect();
    assert_eq!(cells[0], "3");
    let eta: f64 = cells[1].parse().unwrap();
    cells[1] = format!("{:.16e}", eta * 1.001);
    lines[4] = cells.join(",");
    let path = dir.path().join("corrupt.csv");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();

    let o = bin()
        .arg("check")
        .arg(&path)
        .args(["--checks", "lemma"])
        .arg("--problem")
        .arg(data("half_square.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let line = stdout(&o).lines().find(|l| l.starts_with("coupling_identity")).unwrap().to_string();
    assert!(line.contains("FAIL") && line.contains("at k=3"), "{line}");
}

#[test]
fn psi_check_without_iterates_is_a_clear_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("golden_half_square.csv")).unwrap();
    let scalars: Vec<String> = text.lines().map(|l| l.split(',').take(10).collect::<Vec<_>>().join(",")).collect();
    let path = dir.path().join("scalars.csv");
    std::fs::write(&path, scalars.join("\n") + "\n").unwrap();

    let run = |checks: &str| {
        bin()
            .arg("check")
            .arg(&path)
            .args(["--checks", checks])
            .arg("--problem")
            .arg(data("half_square.toml"))
            .output()
            .unwrap()
    };
    let o = run("psi");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("store_iterates"), "{}", stderr(&o));
    let o = run("lemma,h_envelope");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn shipped_configs_resolve() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["golden.toml", "quickstart.toml"] {
        let (cfg, base) = agraal_cli::config::ExperimentConfig::from_path(&root.join(name)).unwrap();
        cfg.resolve(&base).unwrap();
    }
}
