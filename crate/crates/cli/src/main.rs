//! `angcov`: run covariance-measurement scenarios and print JSON reports.
//!
//! Exit status: 0 on success, 2 for parse or configuration errors, 3 when a
//! hard invariant fails.

mod commands;
mod config;
mod report;
mod state;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::ScenarioConfig;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Invariant(String),
}

impl From<angcov::Error> for Failure {
    fn from(e: angcov::Error) -> Failure {
        use angcov::Error::*;
        match e {
            NotUnitary(_) | NotSymmetric(_) | Invariant(_) | TruncationThreshold { .. } | BasisMismatch => {
                Failure::Invariant(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "angcov", version, about = "Angular-momentum covariance measurement scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON scenario file; a previous report also works.
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    shots: Option<usize>,
    /// Fock cutoff on the total photon number.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Intensity transmission of the unbalanced splitters.
    #[arg(long, global = true)]
    t2: Option<f64>,
    /// Fail when the state truncation weight exceeds the threshold.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true)]
    truncation_threshold: Option<f64>,
    /// Tolerance for hard invariant residuals.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Covariance matrix of a two-mode state and its principal axes.
    Covariance {
        #[arg(long)]
        state: Option<String>,
    },
    /// Six-variance reconstruction through a measurement plan.
    Reconstruct {
        #[arg(long)]
        state: Option<String>,
        /// `polarimetric` or `interferometric`.
        #[arg(long)]
        plan: Option<String>,
        /// `exact` or `sampled`.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Simultaneous twelve-port measurement with noise correction.
    Twelveport {
        #[arg(long)]
        state: Option<String>,
        /// `moments`, `fullstate` or `sampled`.
        #[arg(long)]
        mode: Option<String>,
        /// CSV destination for sampled counts.
        #[arg(long)]
        records_out: Option<String>,
    },
    /// Compile and verify Ramsey pulse sequences.
    Ramsey {
        #[arg(long)]
        k: Option<usize>,
        /// `+` or `-`.
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        omega0: Option<f64>,
        #[arg(long)]
        rabi: Option<f64>,
        /// `schwinger`, `n/2` or a half-integer.
        #[arg(long)]
        spin: Option<String>,
    },
    /// Bright-oscillator expansion of the covariance matrix.
    Bright {
        /// Single-mode state of the weak mode.
        #[arg(long)]
        state: Option<String>,
        /// Oscillator amplitude `re` or `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Comma-separated amplitudes for the convergence table.
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Estimate covariances from recorded detector counts.
    Estimate {
        #[arg(long)]
        records: Option<String>,
        /// Scheme metadata JSON; twelve-port at `t2` when absent.
        #[arg(long)]
        metadata: Option<String>,
    },
}

fn floats(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Config(format!("{what}: `{}` is not a number", s.trim())))
        })
        .collect()
}

fn flags(cli: &Cli) -> Result<(&'static str, ScenarioConfig), Failure> {
    let c = &cli.common;
    let mut cfg = ScenarioConfig {
        n_max: c.nmax,
        seed: c.seed,
        shots: c.shots,
        t2: c.t2,
        strict: c.strict.then_some(true),
        truncation_threshold: c.truncation_threshold,
        tolerance: c.tolerance,
        output: c.output.clone(),
        ..Default::default()
    };
    let name = match &cli.command {
        Command::Covariance { state } => {
            cfg.state = state.clone();
            "covariance"
        }
        Command::Reconstruct { state, plan, mode } => {
            cfg.state = state.clone();
            cfg.plan = plan.clone();
            cfg.mode = mode.clone();
            "reconstruct"
        }
        Command::Twelveport {
            state,
            mode,
            records_out,
        } => {
            cfg.state = state.clone();
            cfg.mode = mode.clone();
            cfg.records_out = records_out.clone();
            "twelveport"
        }
        Command::Ramsey {
            k,
            sign,
            m,
            omega0,
            rabi,
            spin,
        } => {
            cfg.k = *k;
            cfg.sign = sign.clone();
            cfg.m = *m;
            cfg.omega0 = *omega0;
            cfg.rabi = *rabi;
            cfg.spin = spin.clone();
            "ramsey"
        }
        Command::Bright { state, alpha, alphas } => {
            cfg.state = state.clone();
            if let Some(a) = alpha {
                cfg.alpha = Some(match floats(a, "alpha")?[..] {
                    [re] => [re, 0.0],
                    [re, im] => [re, im],
                    _ => return Err(Failure::Config("alpha must be `re` or `re,im`".into())),
                });
            }
            if let Some(a) = alphas {
                cfg.alphas = Some(floats(a, "alphas")?);
            }
            "bright"
        }
        Command::Estimate { records, metadata } => {
            cfg.records = records.clone();
            cfg.metadata = metadata.clone();
            "estimate"
        }
    };
    Ok((name, cfg))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let (name, top) = flags(cli)?;
    let base = match &cli.common.config {
        Some(path) => config::load(path)?,
        None => ScenarioConfig::default(),
    };
    let mut cfg = base.overlay(top);
    let report = match name {
        "covariance" => commands::covariance(&mut cfg),
        "reconstruct" => commands::reconstruct(&mut cfg),
        "twelveport" => commands::twelveport(&mut cfg),
        "ramsey" => commands::ramsey(&mut cfg),
        "bright" => commands::bright(&mut cfg),
        _ => commands::estimate(&mut cfg),
    }?;
    let ok = report.failures.is_empty();
    let text = report::render(&json!({
        "command": name,
        "config": cfg.echo(),
        "results": report.results,
        "warnings": report.warnings,
        "invariant_failures": report.failures,
    }));
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Config(format!("{path}: {e}")))?,
        None => print!("{text}"),
    }
    for f in &report.failures {
        eprintln!("invariant failure: {f}");
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(3)
        }
    }
}
