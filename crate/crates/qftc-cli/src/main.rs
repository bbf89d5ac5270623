//! `qftc`: run the QFTC circuit on input files, verify the arithmetic
//! exhaustively, apply circulant operators and benchmark gate tallies.
//!
//! Exit codes: 0 pass, 1 usage or I/O error, 2 domain rejection, 3
//! tolerance failure.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use manifest::{csv_bytes, csv_header, RunManifest};
use qftc::circulant::{
    apply_circulant, evolve_circulant, exact_evolution, expected_success_probability, CirculantSpec, EvolutionConfig,
};
use qftc::oracle::InputVector;
use qftc::qftc::{qftc_run, Mode, QftcConfig, DEFAULT_MAX_QUBITS};
use qftc::reference::{circulant_dense, matvec};
use qftc::state::StateVector;
use qftc::verify::{bench, verify_arith, ArithOp, SweepKind, VerifyMode};
use qftc::QftcError;

const EXIT_USAGE: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qftc",
    version,
    about = "Quantum Fourier transform in the computational basis, simulated"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode the DFT of an input vector and decode it.
    Qftc {
        /// JSON file {"n", "real", "imag"}.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        p0: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// full or block_diagonal.
        #[arg(long, default_value = "block_diagonal")]
        mode: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Recorded in the manifest; the run itself draws no samples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare an arithmetic circuit with the classical oracle on every input.
    ArithVerify {
        /// adder, mul_add or sigma_minus.
        op: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// gate, semantic or both.
        #[arg(long, default_value = "both")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a circulant operator or its Hamiltonian evolution.
    Circulant {
        #[command(subcommand)]
        action: CirculantAction,
    },
    /// Tally the circuit over a parameter sweep and fit the log-log slope.
    Bench {
        /// L, epsilon or delta.
        #[arg(long)]
        sweep: String,
        /// Inclusive integer range `a..b`: L, p0, or d with delta = 2^-d.
        #[arg(long)]
        range: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum CirculantAction {
    /// Post-selected application of C to a state.
    Apply {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// e^{-iCt} applied to a state.
    Evolve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<QftcError> for Failure {
    fn from(e: QftcError) -> Self {
        let code = match e {
            QftcError::InvalidArgument(_) | QftcError::NotNormalized { .. } | QftcError::NotPowerOfTwo(_) => EXIT_USAGE,
            QftcError::State(_)
            | QftcError::Range { .. }
            | QftcError::Unrepresentable(_)
            | QftcError::NotHermitian
            | QftcError::QubitBudget { .. }
            | QftcError::SweepBudget { .. } => EXIT_DOMAIN,
        };
        let mut message = e.to_string();
        if let QftcError::SweepBudget { .. } = e {
            message.push_str("; reduce m or n");
        }
        Self { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("I/O error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::usage(format!("CSV error: {e}"))
    }
}

type CmdResult = Result<RunManifest, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn max_qubits() -> Result<usize, Failure> {
    match std::env::var("QFTC_MAX_QUBITS") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::usage(format!("QFTC_MAX_QUBITS = {v:?} is not a qubit count"))),
        Err(_) => Ok(DEFAULT_MAX_QUBITS),
    }
}

fn parse_range(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::usage(format!("range {text:?} must look like a..b with a <= b"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

#[derive(Serialize)]
struct QftcRow {
    k: usize,
    y_exact: f64,
    y_hat: f64,
    abs_error: f64,
    prob_mass: f64,
}

#[derive(Serialize)]
struct DistributionRow {
    k: usize,
    code: usize,
    value: f64,
    probability: f64,
}

fn cmd_qftc(input: &Path, p0: usize, delta: f64, mode: &str, out: &Path, seed: u64) -> CmdResult {
    let x = InputVector::from_json(&read(input)?)?;
    let mode: Mode = mode.parse()?;
    let config = QftcConfig::new(x.num_qubits(), p0, delta, mode)?.with_max_qubits(max_qubits()?);
    let (_, result) = qftc_run(&x, &config)?;
    let mut m = RunManifest::new("qftc", json!({ "input": input, "qftc": config }));
    m.seed = Some(seed);
    m.tallies = Some(result.tally);
    let rows: Vec<QftcRow> = result
        .per_k
        .iter()
        .map(|r| QftcRow {
            k: r.k,
            y_exact: r.y_exact,
            y_hat: r.y_hat,
            abs_error: (r.y_hat - r.y_exact).abs(),
            prob_mass: r.prob_mass,
        })
        .collect();
    let fmt = config.output_format();
    let dist: Vec<DistributionRow> = result
        .per_k
        .iter()
        .flat_map(|r| {
            r.distribution.iter().enumerate().map(move |(code, p)| DistributionRow {
                k: r.k,
                code,
                value: fmt.value_of(code as u64),
                probability: *p,
            })
        })
        .collect();
    m.write_output(out, "qftc.csv", &csv_bytes(&rows)?)?;
    m.write_output(out, "qftc_distribution.csv", &csv_bytes(&dist)?)?;
    let eps = config.epsilon();
    m.check(
        "max_abs_error",
        result.max_abs_error(),
        eps,
        result.max_abs_error() <= eps,
    );
    m.check("fidelity", result.fidelity, 1.0 - delta, result.fidelity >= 1.0 - delta);
    for r in &rows {
        println!(
            "k={} y={:.6} y_hat={:.6} err={:.3e}",
            r.k, r.y_exact, r.y_hat, r.abs_error
        );
    }
    println!("fidelity {:.6} (target >= {:.3})", result.fidelity, 1.0 - delta);
    Ok(m)
}

#[derive(Serialize)]
struct MismatchRow {
    variant: String,
    implementation: String,
    inputs: String,
    expected: u64,
    got: String,
}

fn cmd_arith_verify(op: &str, m_digits: usize, n_digits: usize, mode: &str, out: &Path) -> CmdResult {
    let op: ArithOp = op.parse()?;
    let mode: VerifyMode = mode.parse()?;
    let report = verify_arith(op, m_digits, n_digits, mode)?;
    let mut m = RunManifest::new(
        "arith-verify",
        json!({ "op": op, "m": m_digits, "n": n_digits, "mode": mode }),
    );
    let rows: Vec<MismatchRow> = report
        .mismatches
        .iter()
        .map(|x| MismatchRow {
            variant: x.variant.clone(),
            implementation: x.implementation.clone(),
            inputs: x.inputs.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
            expected: x.expected,
            got: x.got.map_or_else(|| "none".into(), |g| g.to_string()),
        })
        .collect();
    let bytes = if rows.is_empty() {
        csv_header(&["variant", "implementation", "inputs", "expected", "got"])?
    } else {
        csv_bytes(&rows)?
    };
    m.write_output(out, "arith_mismatches.csv", &bytes)?;
    let bad = report.mismatches.len() as f64;
    m.check("mismatches", bad, 0.0, report.passed());
    println!(
        "{op} m={m_digits} n={n_digits} mode={mode}: {} cases, {} mismatches",
        report.cases,
        report.mismatches.len()
    );
    Ok(m)
}

#[derive(Serialize)]
struct AmplitudeRow {
    index: usize,
    re: f64,
    im: f64,
    reference_re: f64,
    reference_im: f64,
}

fn amplitude_rows(out: &StateVector, reference: &StateVector) -> Vec<AmplitudeRow> {
    out.amplitudes()
        .iter()
        .zip(reference.amplitudes())
        .enumerate()
        .map(|(index, (a, r))| AmplitudeRow {
            index,
            re: a.re,
            im: a.im,
            reference_re: r.re,
            reference_im: r.im,
        })
        .collect()
}

fn load_circulant(spec: &Path, state: &Path) -> Result<(CirculantSpec, InputVector), Failure> {
    let spec = CirculantSpec::from_json(&read(spec)?)?;
    let s = InputVector::from_json(&read(state)?)?;
    Ok((spec, s))
}

fn cmd_circulant_apply(spec_path: &Path, state_path: &Path, out: &Path) -> CmdResult {
    let (spec, s) = load_circulant(spec_path, state_path)?;
    let (state, prob) = apply_circulant(&s, &spec)?;
    let dense = StateVector::from_amplitudes(matvec(&circulant_dense(spec.c.components()), s.components()))
        .map_err(QftcError::from)?
        .normalized();
    let expected = expected_success_probability(&s, &spec);
    let mut m = RunManifest::new("circulant apply", json!({ "spec": spec_path, "state": state_path }));
    m.write_output(out, "circulant_apply.csv", &csv_bytes(&amplitude_rows(&state, &dense))?)?;
    let prob_err = (prob - expected).abs();
    let diff = state.max_abs_diff(&dense).map_err(QftcError::from)?;
    m.check("success_probability_error", prob_err, 1e-10, prob_err <= 1e-10);
    m.check("max_abs_diff_vs_dense", diff, 1e-9, diff <= 1e-9);
    println!("success_prob {prob:.12} (spectrum {expected:.12}); max diff vs dense {diff:.3e}");
    Ok(m)
}

fn cmd_circulant_evolve(spec_path: &Path, state_path: &Path, time: f64, delta: f64, out: &Path) -> CmdResult {
    let (spec, s) = load_circulant(spec_path, state_path)?;
    if !spec.hermitian {
        return Err(QftcError::NotHermitian.into());
    }
    let config = EvolutionConfig::new(s.len(), time, delta)?;
    let evo = evolve_circulant(&s, &spec, &config)?;
    let exact = exact_evolution(&s, &spec, time)?;
    let fidelity = evo.fidelity(&exact)?;
    let mut m = RunManifest::new(
        "circulant evolve",
        json!({ "spec": spec_path, "state": state_path, "evolution": config, "qftc": evo.qftc }),
    );
    m.tallies = Some(evo.tally);
    m.write_output(
        out,
        "circulant_evolve.csv",
        &csv_bytes(&amplitude_rows(&evo.state(), &exact))?,
    )?;
    let threshold = 1.0 - 2.0 * delta;
    m.check("fidelity", fidelity, threshold, fidelity >= threshold);
    println!("fidelity {fidelity:.6} (target >= {threshold:.3}), p0 = {}", config.p0);
    Ok(m)
}

fn cmd_bench(sweep: &str, range: &str, out: &Path) -> CmdResult {
    let sweep: SweepKind = sweep.parse()?;
    let values = parse_range(range)?;
    let report = bench(sweep, &values)?;
    let mut m = RunManifest::new("bench", json!({ "sweep": sweep, "range": values }));
    m.write_output(out, &format!("bench_{sweep}.csv"), &csv_bytes(&report.points)?)?;
    m.check(&format!("slope_{sweep}"), report.slope, report.target, report.passed());
    println!(
        "{sweep} sweep slope {:.4} (target {} +- {})",
        report.slope, report.target, report.tolerance
    );
    if let Some(s) = report.phase_network_slope {
        println!("phase network slope {s:.4}");
    }
    Ok(m)
}

fn out_dir(command: &Command) -> &Path {
    match command {
        Command::Qftc { out, .. } | Command::ArithVerify { out, .. } | Command::Bench { out, .. } => out,
        Command::Circulant { action } => match action {
            CirculantAction::Apply { out, .. } | CirculantAction::Evolve { out, .. } => out,
        },
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let out = out_dir(&cli.command);
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut manifest = match &cli.command {
        Command::Qftc {
            input,
            p0,
            delta,
            mode,
            seed,
            ..
        } => cmd_qftc(input, *p0, *delta, mode, out, *seed)?,
        Command::ArithVerify { op, m, n, mode, .. } => cmd_arith_verify(op, *m, *n, mode, out)?,
        Command::Circulant { action } => match action {
            CirculantAction::Apply { spec, state, .. } => cmd_circulant_apply(spec, state, out)?,
            CirculantAction::Evolve {
                spec,
                state,
                time,
                delta,
                ..
            } => cmd_circulant_evolve(spec, state, *time, *delta, out)?,
        },
        Command::Bench { sweep, range, .. } => cmd_bench(sweep, range, out)?,
    };
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.save(out)?;
    for c in &manifest.checks {
        println!(
            "{} {}: {} (threshold {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    Ok(manifest.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..6").unwrap(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(parse_range("2..=3").unwrap(), vec![2, 3]);
        assert!(parse_range("5..3").is_err());
        assert!(parse_range("").is_err());
        assert!(parse_range("x..2").is_err());
    }
}
