//! Batch driver: identity verification and the numerical experiments, from
//! a TOML config, with deterministic JSON reports and CSV series.
//!
//! Exit status: 0 when every check passes, 1 when a check is falsified, 2 on
//! a usage, config or I/O error. On status 2 no report is written.

pub mod config;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Parser)]
#[command(name = "carleman", version, about = "Weighted-identity verifier and Carleman estimate experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// TOML config; blocks left out take the verb's defaults
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// JSON report path (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV series path
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// overrides the config seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// add wall-clock timings to the report (makes it non-reproducible)
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    /// Canonical residual of the general identity, or of a catalog case
    IdentityVerify {
        /// R1, R2, R3 or unconstrained; all three constrained regimes when absent
        #[arg(long)]
        regime: Option<String>,
        /// dimension 1..=3; all three when absent
        #[arg(long)]
        n: Option<usize>,
        /// catalog id such as `transport` or `proof_step:3`
        #[arg(long)]
        case: Option<String>,
        /// drop one right-hand summand from every identity (negative control)
        #[arg(long)]
        mutate: bool,
    },
    /// Every intermediate identity of the proof
    IdentitySteps {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        mutate: bool,
    },
    /// Heat Carleman estimate over manufactured pairs and a λ sweep
    CarlemanHeat {
        /// CSV trace of the weight (x, t, γ, φ, α, θ, A, B)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Forward Ginzburg-Landau Carleman estimate with one fitted C per μ
    CarlemanGl,
    /// Hölder stability, μ optimizer and backward uniqueness
    InverseGl,
    /// Elementary demos
    Demo {
        #[arg(value_enum)]
        kind: DemoKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoKind {
    Ode,
    #[value(name = "first_order", alias = "first-order")]
    FirstOrder,
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::IdentityVerify { .. } => "identity-verify",
            Verb::IdentitySteps { .. } => "identity-steps",
            Verb::CarlemanHeat { .. } => "carleman-heat",
            Verb::CarlemanGl => "carleman-gl",
            Verb::InverseGl => "inverse-gl",
            Verb::Demo { .. } => "demo",
        }
    }
}

/// Runs a parsed command and writes its outputs. Returns the exit status.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(p) => config::Config::load(p)?,
        None => config::Config::default(),
    };
    let out = run::run(&cli.verb, &cfg, cli.seed, cli.timings)?;
    if let (Some(path), Some(series)) = (&cli.csv, &out.series) {
        series.write(path)?;
    }
    if let (Verb::CarlemanHeat { trace: Some(path) }, Some(series)) = (&cli.verb, &out.trace) {
        series.write(path)?;
    }
    match &cli.out {
        Some(path) => report::write_report(&out.report, path)?,
        None => print!("{}", out.report.to_json()),
    }
    Ok(if out.report.passed { 0 } else { 1 })
}

/// `main` without the process: parses `args`, runs, and maps errors to 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => {
            eprintln!("{}: {}", cli.verb.name(), if code == 0 { "pass" } else { "FALSIFIED" });
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
