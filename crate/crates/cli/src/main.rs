use agraal_cli::config::CheckKind;
use agraal_cli::{cmd_check, cmd_params, cmd_run, ExitCode};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "agraal", version, about = "Run and certify Accelerated GRAAL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (problem, method) cell of a TOML experiment config.
    Run { config: PathBuf },
    /// Report gamma_max, nu and the feasibility residuals for theta (and gamma).
    Params {
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Evaluate certificates on a stored trace CSV.
    Check {
        trace: PathBuf,
        /// TOML file holding one problem table (same keys as `[[problems]]`).
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Comma-separated subset of lemma, h_envelope, corollary, psi.
        #[arg(long, value_delimiter = ',', value_parser = parse_check)]
        checks: Option<Vec<CheckKind>>,
    },
}

fn parse_check(s: &str) -> Result<CheckKind, String> {
    CheckKind::parse(s).ok_or_else(|| format!("unknown check `{s}` (expected lemma, h_envelope, corollary or psi)"))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(ExitCode::ConfigError.code());
        }
        Err(e) => {
            let _ = e.print();
            std::process::exit(0);
        }
    };
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config, &mut out, &mut err),
        Command::Params { theta, gamma } => cmd_params(theta, gamma, &mut out),
        Command::Check {
            trace,
            problem,
            theta,
            gamma,
            checks,
        } => cmd_check(&trace, &problem, theta, gamma, checks, &mut out, &mut err),
    };
    std::process::exit(code.code());
}
