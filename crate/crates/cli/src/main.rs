mod config;
mod experiment;
mod record;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use enatp::entanglement::DEFAULT_CONCURRENCE_TOL;
use enatp::matrix::Vec3;
use enatp::sequences::{run_example, verify_suite, Example, ExampleParams, ExampleReport, Suite, Target};

use crate::config::{parse_config, StateSpec, Tolerances};
use crate::experiment::{run_experiment, sweep, RunOutput, SweepParams};
use crate::record::write_csv;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Engine(#[from] enatp::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 2,
            CliError::Engine(enatp::Error::ConvergenceFailure(_) | enatp::Error::NonRealSpectrum { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "enatp", version, about = "Two-qubit weak-measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment described by a config file and write CSV rows.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep special weak measurements over ε and round counts.
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        eps_min: f64,
        #[arg(long, default_value_t = 1.0)]
        eps_max: f64,
        #[arg(long, default_value_t = 11)]
        eps_steps: usize,
        #[arg(long, default_value_t = 10)]
        rounds_max: usize,
        #[arg(long, default_value = "bell-phi-plus")]
        state: String,
        /// system, environment or both
        #[arg(long, default_value = "system")]
        target: String,
        /// Measurement axis as `x,y,z`.
        #[arg(long, default_value = "0,0,1")]
        axis: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run property suites and print one line per check.
    Verify {
        /// all, theorem1, theorem2, lemma2, corollary3 or examples
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Reproduce a worked example.
    Examples {
        /// 1, 2, 3 or appendix
        #[arg(long)]
        which: String,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        target: Option<String>,
    },
}

/// The concurrence-zero tolerance, from `ENATP_TOL` when set.
fn default_tolerance() -> Result<f64, CliError> {
    match std::env::var("ENATP_TOL") {
        Err(_) => Ok(DEFAULT_CONCURRENCE_TOL),
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
            _ => Err(CliError::Usage(format!("ENATP_TOL must be a positive number, got `{v}`"))),
        },
    }
}

fn write_output(path: &Path, output: &RunOutput) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, &output.records).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    if output.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(output.violations.join("; ")))
    }
}

fn parse_axis(text: &str) -> Result<Vec3, CliError> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad axis `{text}`")))?;
    match parts.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(CliError::Usage(format!("axis needs three components, got `{text}`"))),
    }
}

fn usage<T, E: std::fmt::Display>(what: &str, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn print_example(r: &ExampleReport) {
    println!("example {} ({})", r.example, r.measurement);
    if let Some(eps) = r.epsilon {
        println!("  epsilon              {eps}");
    }
    if let Some(theta) = r.theta {
        println!("  theta                {theta}");
    }
    println!("  initial concurrence  {:.12}", r.initial_concurrence);
    println!("  readings (one unknown-outcome round):");
    for i in &r.interpretations {
        println!(
            "    {:<12} C = {:.6e}  min PT eig = {:+.6e}  separable = {}",
            i.target.to_string(),
            i.final_concurrence,
            i.min_pt_eigenvalue,
            i.separable
        );
    }
    println!("  recorded reading     {}", r.target);
    println!("  final concurrence    {:.6e}", r.final_concurrence);
    println!("  PPT                  {} (min eig {:+.6e}, det {:+.6e})", r.ppt, r.min_pt_eigenvalue, r.pt_determinant);
    println!("  separable            {}", r.separable);
    if let Some(res) = r.appendix_residual {
        println!("  closed-form residual {res:.3e}");
    }
    println!("  known-outcome branches:");
    for (outcomes, p, c) in &r.branches {
        println!("    {outcomes:<8} p = {p:.6}  C = {c:.6e}");
    }
    println!("  min branch concurrence {:.6e}", r.min_branch_concurrence);
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let tol = default_tolerance()?;
    match cli.command {
        Command::Run { config, out } => {
            let text = fs::read_to_string(&config).map_err(|source| CliError::Io { path: config.clone(), source })?;
            let cfg = parse_config(&text, tol)?;
            write_output(&out, &run_experiment(&cfg)?)
        }
        Command::Sweep { eps_min, eps_max, eps_steps, rounds_max, state, target, axis, seed, out } => {
            let params = SweepParams {
                eps_min,
                eps_max,
                eps_steps,
                rounds_max,
                state: usage("state", state.parse::<StateSpec>())?,
                target: usage("target", target.parse::<Target>())?,
                axis: parse_axis(&axis)?,
                seed,
                tol: Tolerances::with_concurrence(tol),
            };
            write_output(&out, &sweep(&params)?)
        }
        Command::Verify { suite, seed, trials } => {
            let suite: Suite = usage("suite", suite.parse())?;
            let report = verify_suite(suite, seed, trials)?;
            for check in &report.checks {
                println!("{check}");
            }
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            println!("{} of {} checks passed", report.checks.len() - failed, report.checks.len());
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Invariant(format!("{failed} verification checks failed")))
            }
        }
        Command::Examples { which, epsilon, theta, a, target } => {
            let which: Example = usage("example", which.parse())?;
            let target = target.map(|t| usage("target", t.parse::<Target>())).transpose()?;
            let params = ExampleParams { a, epsilon, theta, target, tol: Some(tol) };
            print_example(&run_example(which, &params)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("enatp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
