//! `blc`: Brascamp–Lieb constants from the command line.
//!
//! Subcommands cover the pipeline end to end: `validate` a datum file,
//! `check` finiteness with certificates, `compute` the constant by either
//! formulation, `probe` the straight-line path between two data, `example`
//! for built-in families, and `dump-weights` for the subset table.
//!
//! Exit codes are a stable contract: 0 success (finite), 1 datum
//! violations, 2 I/O or parse errors, 3 provably infinite, 4 unknown or
//! unresolved.

use anyhow::{Context, Result};
use blc_core::linalg::RotationParams;
use blc_core::{
    builtin_datum, compute_dI, datum_to_json, decide_finiteness, family_from_name, one_sided_slopes,
    optimize_barthe, optimize_lieb, parse_datum_json, sample_at, sample_path, samples_to_csv,
    validate_datum, weights_to_csv, Config, Datum, FinitenessStatus, Method, ProbeError,
    SolveError,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_VIOLATIONS: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_INFINITE: u8 = 3;
const EXIT_UNKNOWN: u8 = 4;

/// Step used by `--slopes` for the one-sided difference quotients.
const SLOPE_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Subset route up to 12 flattened indices, gaussian route beyond.
    Auto,
    /// Gaussian-ratio maximization.
    Lieb,
    /// Weighted-subset (scaling/rotation) maximization.
    Barthe,
}

impl From<MethodArg> for Method {
    fn from(arg: MethodArg) -> Method {
        match arg {
            MethodArg::Auto => Method::Auto,
            MethodArg::Lieb => Method::Lieb,
            MethodArg::Barthe => Method::Barthe,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Formulation to maximize.
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Independent optimizer starts.
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Iteration budget per start.
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Gradient max-norm declaring convergence.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolveArgs {
    fn config(&self) -> Config {
        Config { starts: self.starts, max_iter: self.max_iter, tol: self.tol, seed: self.seed }
    }
}

#[derive(Parser)]
#[command(name = "blc", version, about = "Brascamp–Lieb constants: compute, certify, probe")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a datum file and report every structural violation.
    Validate { file: PathBuf },
    /// Decide finiteness; prints the verdict and any certificate.
    Check {
        file: PathBuf,
        /// Candidate-subspace budget for the general-rank search.
        #[arg(long, default_value_t = 64)]
        budget: usize,
        /// Seed for the randomized candidate closure.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute the constant; prints BL and BL² with diagnostics.
    Compute {
        file: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Run both formulations and report their discrepancy.
        #[arg(long)]
        both: bool,
    },
    /// Sample the constant along the straight path from FILE_A to FILE_B.
    Probe {
        file_a: PathBuf,
        file_b: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Number of evenly spaced samples over t in [0, 1].
        #[arg(long, default_value_t = 11)]
        grid: usize,
        /// Write the sample CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print one-sided slopes at this t (step 1e-3).
        #[arg(long, value_name = "T0")]
        slopes: Option<f64>,
    },
    /// Print a built-in example datum as JSON.
    Example {
        /// holder[:M,N], loomis-whitney[:N], young[:P1,P2,P3], four-linear[:A]
        name: String,
        /// Write the JSON to this file instead of stdout.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Write the subset weight table (subset, d_I, q_I) at identity rotations.
    DumpWeights {
        file: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Check { file, budget, seed } => cmd_check(&file, budget, seed),
        Command::Compute { file, solve, both } => cmd_compute(&file, &solve, both),
        Command::Probe { file_a, file_b, solve, grid, out, slopes } => {
            cmd_probe(&file_a, &file_b, &solve, grid, out.as_deref(), slopes)
        }
        Command::Example { name, emit } => cmd_example(&name, emit.as_deref()),
        Command::DumpWeights { file, out } => cmd_dump_weights(&file, out.as_deref()),
    }
}

fn load_datum(path: &Path) -> Result<Datum> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    // flatten the error chain so the serde detail prints once
    let datum = parse_datum_json(&text)
        .map_err(|e| anyhow::anyhow!("parsing {}: {e}", path.display()))?;
    Ok(datum)
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Maps solver errors onto the exit-code contract, printing as it goes.
fn report_solve_error(err: &SolveError<f64>) -> u8 {
    match err {
        SolveError::InvalidDatum(report) => {
            println!("{report}");
            EXIT_VIOLATIONS
        }
        SolveError::Infinite { certificate } => {
            println!("BL = +inf");
            println!("certificate: {certificate}");
            EXIT_INFINITE
        }
        other => {
            eprintln!("error: {other}");
            EXIT_UNKNOWN
        }
    }
}

fn cmd_validate(file: &Path) -> Result<u8> {
    let datum = load_datum(file)?;
    let report = validate_datum(&datum);
    if report.ok() {
        println!("valid: {} maps on R^{}", datum.maps.len(), datum.n);
        Ok(EXIT_OK)
    } else {
        println!("{report}");
        Ok(EXIT_VIOLATIONS)
    }
}

fn cmd_check(file: &Path, budget: usize, seed: u64) -> Result<u8> {
    let datum = load_datum(file)?;
    let verdict = match decide_finiteness(&datum, budget, seed) {
        Ok(v) => v,
        Err(err) => return Ok(report_solve_error(&err)),
    };
    let diag = verdict.diagnostics;
    match verdict.status {
        FinitenessStatus::Finite => {
            println!(
                "finite: no violating subspace among {} candidates (exhaustive family)",
                diag.candidates_tested
            );
            Ok(EXIT_OK)
        }
        FinitenessStatus::Infinite => {
            let certificate = verdict.certificate.expect("infinite verdicts carry a certificate");
            println!("infinite: {certificate}");
            Ok(EXIT_INFINITE)
        }
        FinitenessStatus::Unknown => {
            println!(
                "unknown: no violation among {} candidates{}",
                diag.candidates_tested,
                if diag.truncated { " (search truncated by budget)" } else { "" }
            );
            Ok(EXIT_UNKNOWN)
        }
    }
}

struct Outcome {
    value: f64,
    iterations: usize,
    converged: bool,
    grad_norm: f64,
    starts: usize,
}

fn run_method(datum: &Datum, method: Method, config: &Config) -> Result<Outcome, SolveError<f64>> {
    match method.resolve(datum) {
        Method::Lieb => optimize_lieb(datum, config).map(|r| Outcome {
            value: r.value,
            iterations: r.iterations,
            converged: r.converged,
            grad_norm: r.grad_norm,
            starts: r.starts_used,
        }),
        Method::Barthe => optimize_barthe(datum, config).map(|r| Outcome {
            value: r.value,
            iterations: r.iterations,
            converged: r.converged,
            grad_norm: r.grad_norm,
            starts: r.starts_used,
        }),
        Method::Auto => unreachable!("resolve never returns auto"),
    }
}

fn print_outcome(label: &str, outcome: &Outcome) {
    println!("method: {label}");
    println!("BL   = {}", outcome.value);
    println!("BL^2 = {}", outcome.value * outcome.value);
    println!(
        "converged: {} (iterations {}, grad max-norm {:e}, starts {})",
        outcome.converged, outcome.iterations, outcome.grad_norm, outcome.starts
    );
}

fn cmd_compute(file: &Path, solve: &SolveArgs, both: bool) -> Result<u8> {
    let datum = load_datum(file)?;
    let config = solve.config();
    if !both {
        let method = Method::from(solve.method).resolve(&datum);
        return Ok(match run_method(&datum, method, &config) {
            Ok(outcome) => {
                print_outcome(&method.to_string(), &outcome);
                EXIT_OK
            }
            Err(err) => report_solve_error(&err),
        });
    }
    let mut code = EXIT_OK;
    let mut values = Vec::new();
    for method in [Method::Lieb, Method::Barthe] {
        match run_method(&datum, method, &config) {
            Ok(outcome) => {
                print_outcome(&method.to_string(), &outcome);
                values.push(outcome.value);
            }
            Err(err) => code = code.max(report_solve_error(&err)),
        }
    }
    if let [a, b] = values[..] {
        let abs = (a - b).abs();
        let rel = abs / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        println!("discrepancy: {abs:e} absolute, {rel:e} relative");
    }
    Ok(code)
}

fn report_probe_error(err: &ProbeError<f64>) -> u8 {
    match err {
        // incompatible path endpoints and malformed grids are usage errors
        ProbeError::Solve(SolveError::Dimension(msg)) => {
            eprintln!("error: {msg}");
            EXIT_IO
        }
        ProbeError::Solve(inner) => report_solve_error(inner),
        ProbeError::InfiniteStencil { .. } => {
            eprintln!("error: {err}");
            EXIT_INFINITE
        }
        other => {
            eprintln!("error: {other}");
            EXIT_IO
        }
    }
}

fn cmd_probe(
    file_a: &Path,
    file_b: &Path,
    solve: &SolveArgs,
    grid: usize,
    out: Option<&Path>,
    slopes: Option<f64>,
) -> Result<u8> {
    let a = load_datum(file_a)?;
    let b = load_datum(file_b)?;
    let config = solve.config();
    let method = Method::from(solve.method);
    let samples = match sample_path(&a, &b, grid, method, &config) {
        Ok(s) => s,
        Err(err) => return Ok(report_probe_error(&err)),
    };
    write_or_print(&samples_to_csv(&samples), out)?;
    if let Some(t0) = slopes {
        let quotients =
            one_sided_slopes(&samples, t0, SLOPE_STEP, |t| sample_at(&a, &b, t, method, &config));
        match quotients {
            Ok(s) => println!("slopes at t0 = {t0}: left = {}, right = {}", s.left, s.right),
            Err(err) => return Ok(report_probe_error(&err)),
        }
    }
    Ok(EXIT_OK)
}

fn cmd_example(name: &str, emit: Option<&Path>) -> Result<u8> {
    let family = family_from_name::<f64>(name)?;
    let datum = builtin_datum(&family)?;
    let json = datum_to_json(&datum);
    match emit {
        Some(path) => std::fs::write(path, &json)
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(EXIT_OK)
}

fn cmd_dump_weights(file: &Path, out: Option<&Path>) -> Result<u8> {
    let datum = load_datum(file)?;
    let report = validate_datum(&datum);
    if !report.ok() {
        println!("{report}");
        return Ok(EXIT_VIOLATIONS);
    }
    let dims: Vec<usize> = datum.maps.iter().map(|m| m.target_dim()).collect();
    let weights = match compute_dI(&datum, &RotationParams::identity(&dims)) {
        Ok(w) => w,
        Err(err) => return Ok(report_solve_error(&err)),
    };
    write_or_print(&weights_to_csv(&weights), out)?;
    Ok(EXIT_OK)
}
