//! `skewric` command-line front-end.
//!
//! Exit codes: 0 all checks pass, 1 a verification failed, 2 malformed input.

mod commands;
mod job;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use commands::Outcome;
use job::JobSpec;

const SCHEMA: &str = "skewric/1";

#[derive(Parser)]
#[command(name = "skewric", version, about = "Verification suites for connections with skew-symmetric Ricci tensor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Skewness, projective flatness, flat decomposition and recurrence form.
    VerifySurface(Common),
    /// Normal form of a subalgebra of sl(2,R); rank and Ricci of a left-invariant connection.
    LieClassify(Common),
    /// Geodesics, first-integral drift and trajectory CSVs.
    Geodesic(Common),
    /// Legendre, Hamilton and Euler-Lagrange checks for a frame.
    DynamicsCheck(Common),
    /// Riemann-extension certification: Ricci-flat, self-dual, Walker, Petrov type.
    ExtendCertify(Common),
}

impl Command {
    fn split(self) -> (&'static str, Common) {
        match self {
            Command::VerifySurface(c) => ("verify-surface", c),
            Command::LieClassify(c) => ("lie-classify", c),
            Command::Geodesic(c) => ("geodesic", c),
            Command::DynamicsCheck(c) => ("dynamics-check", c),
            Command::ExtendCertify(c) => ("extend-certify", c),
        }
    }
}

#[derive(clap::Args)]
struct Common {
    /// Job file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for report.json and CSV outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Omits the timestamp so identical inputs give identical reports.
    #[arg(long)]
    reproducible: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
    seed: u64,
    tol: f64,
    passed: bool,
    failures: &'a [String],
    result: &'a Value,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema: &'static str,
    command: &'a str,
    error: String,
}

enum Failure {
    Input(String),
    Verification(String),
}

impl From<skewric::Error> for Failure {
    fn from(e: skewric::Error) -> Self {
        use skewric::Error::*;
        match e {
            Parse(_) | Json(_) | InvalidInput(_) | Sampling(_) => Failure::Input(e.to_string()),
            _ => Failure::Verification(e.to_string()),
        }
    }
}

fn default_tol(name: &str) -> f64 {
    match name {
        "geodesic" => 1e-6,
        "extend-certify" => 1e-8,
        _ => 1e-9,
    }
}

fn write_outputs(dir: &Path, report: &str, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Input(format!("writing to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("report.json"), report).map_err(io)?;
    for (name, bytes) in files {
        std::fs::write(dir.join(name), bytes).map_err(io)?;
    }
    Ok(())
}

fn run(name: &str, common: &Common) -> Result<bool, Failure> {
    let text = std::fs::read_to_string(&common.spec)
        .map_err(|e| Failure::Input(format!("reading {}: {e}", common.spec.display())))?;
    let mut job = JobSpec::from_json(&text)?;
    if let Some(cmd) = &job.command {
        if cmd != name {
            return Err(Failure::Input(format!("spec is for `{cmd}`, invoked as `{name}`")));
        }
    }
    if let Some(seed) = common.seed {
        job.seed = Some(seed);
    }
    if let Some(t) = common.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Input(format!("--tol must be positive, got {t}")));
        }
        job.tol = Some(t);
    }
    let tol = job.tol.unwrap_or_else(|| default_tol(name));
    let outcome: Outcome = match name {
        "verify-surface" => commands::verify_surface(&job, tol)?,
        "lie-classify" => commands::lie_classify(&job, tol)?,
        "geodesic" => commands::geodesic(&job, tol)?,
        "dynamics-check" => commands::dynamics_check(&job, tol)?,
        "extend-certify" => commands::extend_certify(&job)?,
        _ => unreachable!("subcommands are fixed"),
    };
    let passed = outcome.failures.is_empty();
    let generated_at = (!common.reproducible)
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let report = Report {
        schema: SCHEMA,
        command: name,
        generated_at,
        seed: job.seed(),
        tol,
        passed,
        failures: &outcome.failures,
        result: &outcome.result,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(dir) = common.out.as_ref().or(job.out.as_ref()) {
        write_outputs(dir, &text, &outcome.files)?;
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let (name, common) = Cli::parse().command.split();
    match run(name, &common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            let (code, msg) = match f {
                Failure::Input(m) => (2, m),
                Failure::Verification(m) => (1, m),
            };
            let report = ErrorReport { schema: SCHEMA, command: name, error: msg.clone() };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            eprintln!("skewric {name}: {msg}");
            ExitCode::from(code)
        }
    }
}
