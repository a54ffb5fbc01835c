use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use spcp_core::io::write_atomic;
use spcp_core::{
    certificate, certificate_dense, CertificateSchedule, gen_low_rank_plus_sparse, gen_mask, read_matrix, solve_convex_prox, solve_frank_wolfe,
    solve_split_spcp, write_matrix, CertificateReport, DenseMatrix, FactorPair, Mask, MatrixFormat, ProblemSpec,
    SolveReport, TerminationReason,
};

use crate::config::{RunConfig, SolverKind};
use crate::error::{CliError, EXIT_ITERATION_CAP, EXIT_NUMERICAL, EXIT_OK};
use crate::DecomposeArgs;

pub fn format_for(path: &Path, forced: Option<MatrixFormat>) -> MatrixFormat {
    forced.unwrap_or_else(|| MatrixFormat::from_path(path))
}

pub fn load(path: &Path, forced: Option<MatrixFormat>) -> Result<DenseMatrix, CliError> {
    Ok(read_matrix(path, format_for(path, forced))?)
}

pub fn save(path: &Path, m: &DenseMatrix, forced: Option<MatrixFormat>) -> Result<(), CliError> {
    Ok(write_matrix(path, m, format_for(path, forced))?)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

pub fn exit_code(reason: TerminationReason) -> u8 {
    match reason {
        TerminationReason::Converged => EXIT_OK,
        TerminationReason::MaxIterations | TerminationReason::TimeBudget => EXIT_ITERATION_CAP,
        TerminationReason::LineSearchFailed | TerminationReason::NumericalFailure => EXIT_NUMERICAL,
    }
}

pub fn load_spec(cfg: &RunConfig, format: Option<MatrixFormat>) -> Result<ProblemSpec, CliError> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Usage("no input matrix given".into()))?;
    let x = load(input, format)?;
    let mask = match &cfg.mask {
        Some(p) => Some(Mask::from_matrix(&load(p, format)?)),
        None => None,
    };
    let (l, s) = cfg.lambdas()?;
    Ok(ProblemSpec::with_mask(x, mask, l, s)?)
}

pub fn run_solver(spec: &ProblemSpec, cfg: &RunConfig) -> Result<SolveReport, CliError> {
    Ok(match cfg.solver {
        SolverKind::Split => {
            let (k, split) = cfg.split_config()?;
            solve_split_spcp(spec, k, &split)?
        }
        SolverKind::Prox => solve_convex_prox(spec, &cfg.prox_config(), None)?,
        SolverKind::Fw => solve_frank_wolfe(spec, &cfg.fw_config())?,
    })
}

fn final_certificate(report: &SolveReport, spec: &ProblemSpec) -> Result<CertificateReport, CliError> {
    if let Some(c) = &report.certificate {
        return Ok(c.clone());
    }
    let best = report.records.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
    Ok(match &report.factors {
        Some(fp) => certificate(fp, spec, Some(best))?,
        None => certificate_dense(&report.l, spec, Some(best))?,
    })
}

pub fn decompose(args: DecomposeArgs) -> Result<u8, CliError> {
    let mut cfg = args.run.resolve()?;
    for (flag, field) in [
        (args.input, &mut cfg.input),
        (args.mask, &mut cfg.mask),
        (args.out_l, &mut cfg.out_l),
        (args.out_s, &mut cfg.out_s),
        (args.trace, &mut cfg.trace),
        (args.cert_out, &mut cfg.cert_out),
    ] {
        if flag.is_some() {
            *field = flag;
        }
    }
    cfg.validate()?;
    let spec = load_spec(&cfg, args.format)?;
    let report = run_solver(&spec, &cfg)?;

    let cert = if cfg.certificate == CertificateSchedule::Off && cfg.cert_out.is_none() {
        None
    } else {
        Some(final_certificate(&report, &spec)?)
    };
    if let Some(c) = &cert {
        if c.gap_bound > cfg.gap_warn_rel * c.objective.abs() {
            eprintln!(
                "warning: certificate gap bound {:.3e} exceeds {:.1e} of the objective {:.6e}; the rank bound may be too small",
                c.gap_bound, cfg.gap_warn_rel, c.objective
            );
        }
    }
    if let Some(p) = &cfg.out_l {
        save(p, &report.l, args.format)?;
    }
    if let Some(p) = &cfg.out_s {
        save(p, &report.s, args.format)?;
    }
    if let Some(p) = &cfg.trace {
        save_json(p, &report)?;
    }
    if let (Some(p), Some(c)) = (&cfg.cert_out, &cert) {
        save_json(p, c)?;
    }
    eprintln!(
        "{}: {} after {} iterations, objective {:.10e}, rank {}, {:.3} s",
        report.solver, report.reason, report.iterations, report.objective, report.rank, report.elapsed_s
    );
    Ok(exit_code(report.reason))
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Data matrix.
    #[arg(long)]
    input: PathBuf,
    /// Low-rank part as a full matrix.
    #[arg(long, conflicts_with_all = ["u", "v"])]
    l: Option<PathBuf>,
    /// Left factor; requires --v.
    #[arg(long, requires = "v")]
    u: Option<PathBuf>,
    #[arg(long, requires = "u")]
    v: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    lambda_l: f64,
    #[arg(long)]
    lambda_s: f64,
    /// Known upper bound on the optimal objective.
    #[arg(long)]
    f_bound: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<MatrixFormat>,
}

pub fn certify(args: CertifyArgs) -> Result<u8, CliError> {
    let cfg = RunConfig {
        lambda_l: Some(args.lambda_l),
        lambda_s: Some(args.lambda_s),
        input: Some(args.input),
        mask: args.mask,
        ..RunConfig::default()
    };
    let spec = load_spec(&cfg, args.format)?;
    let report = match (&args.l, &args.u, &args.v) {
        (Some(l), _, _) => certificate_dense(&load(l, args.format)?, &spec, args.f_bound)?,
        (None, Some(u), Some(v)) => {
            let fp = FactorPair::new(load(u, args.format)?, load(v, args.format)?)?;
            certificate(&fp, &spec, args.f_bound)?
        }
        _ => return Err(CliError::Usage("give either --l or both --u and --v".into())),
    };
    match &args.out {
        Some(p) => save_json(p, &report)?,
        None => {
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
            // a closed pipe on stdout is not an error
            let _ = writeln!(std::io::stdout(), "{text}");
        }
    }
    Ok(EXIT_OK)
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0.0)]
    sparse_frac: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_rel: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_x: PathBuf,
    #[arg(long)]
    out_l: Option<PathBuf>,
    #[arg(long)]
    out_s: Option<PathBuf>,
    /// Also write a random observation mask with this fraction observed.
    #[arg(long, requires = "out_mask")]
    observe_frac: Option<f64>,
    #[arg(long, requires = "observe_frac")]
    out_mask: Option<PathBuf>,
    #[arg(long)]
    format: Option<MatrixFormat>,
}

pub fn synth(args: SynthArgs) -> Result<u8, CliError> {
    let p = gen_low_rank_plus_sparse(args.m, args.n, args.rank, args.sparse_frac, args.noise_rel, args.seed)?;
    save(&args.out_x, &p.x, args.format)?;
    if let Some(path) = &args.out_l {
        save(path, &p.l_ref, args.format)?;
    }
    if let Some(path) = &args.out_s {
        save(path, &p.s_ref, args.format)?;
    }
    if let (Some(frac), Some(path)) = (args.observe_frac, &args.out_mask) {
        // the mask stream is seeded apart from the data stream
        let mask = gen_mask(args.m, args.n, frac, args.seed.wrapping_add(1))?;
        save(path, &mask.to_matrix(), args.format)?;
    }
    Ok(EXIT_OK)
}
