//! `spcp`: low-rank plus sparse decomposition from the command line.
//!
//! Exit codes: 0 converged, 1 usage or i/o error, 2 iteration cap or time
//! budget reached, 3 numerical failure.

mod bench;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spcp_core::{CertificateSchedule, InitStrategy, MatrixFormat};

use crate::config::{RunConfig, SolverKind};
use crate::error::{CliError, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "spcp", version, about = "Low-rank plus sparse matrix decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a matrix into low-rank and sparse parts.
    Decompose(DecomposeArgs),
    /// Evaluate the optimality certificate of a given low-rank part.
    Certify(commands::CertifyArgs),
    /// Generate a synthetic low-rank plus sparse problem.
    Synth(commands::SynthArgs),
    /// Run several solvers on one problem and compare their traces.
    Bench(bench::BenchArgs),
}

/// Flags override the matching fields of `--config`.
#[derive(Args, Debug, Default)]
pub struct RunFlags {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    #[arg(long)]
    lambda_l: Option<f64>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(short, long)]
    k: Option<usize>,
    /// rsvd, full_svd or random.
    #[arg(long)]
    init: Option<InitStrategy>,
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    no_accel: bool,
    #[arg(long)]
    rank_growth: bool,
    #[arg(long)]
    max_k: Option<usize>,
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// off, final or every:N.
    #[arg(long)]
    certificate: Option<CertificateSchedule>,
    #[arg(long)]
    gap_warn_rel: Option<f64>,
}

impl RunFlags {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { c.$target = v; })*
            };
        }
        macro_rules! set_opt {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if self.$field.is_some() { c.$target = self.$field.clone(); })*
            };
        }
        set!(solver => solver, init => init, memory => memory, grad_tol => grad_tol, step => step,
             seed => seed, certificate => certificate, gap_warn_rel => gap_warn_rel);
        set_opt!(lambda_l => lambda_l, lambda_s => lambda_s, k => k, max_iter => max_iter, tol => tol,
                 max_k => max_k, time_budget => time_budget_s);
        if self.no_accel {
            c.accel = false;
        }
        if self.rank_growth {
            c.rank_growth = true;
        }
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Data matrix (csv or binary, by extension unless --format is given).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Observation mask: nonzero entries are observed.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    out_l: Option<PathBuf>,
    #[arg(long)]
    out_s: Option<PathBuf>,
    /// JSON report with the per-iteration trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    cert_out: Option<PathBuf>,
    /// Matrix format for all files; inferred from the extension if absent.
    #[arg(long)]
    format: Option<MatrixFormat>,
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SPCP_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Usage(format!("SPCP_THREADS must be a count, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Decompose(a) => commands::decompose(a),
        Command::Certify(a) => commands::certify(a),
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => bench::bench(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("spcp: {e}");
            ExitCode::from(e.exit_code().max(EXIT_USAGE))
        }
    }
}
