use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use spcp_core::metrics::relative_objective_error;
use spcp_core::{gen_low_rank_plus_sparse, MatrixFormat, ProblemSpec, SolveReport};

use crate::commands::{load_spec, run_solver, save_json};
use crate::config::{RunConfig, SolverKind};
use crate::error::{CliError, EXIT_NUMERICAL, EXIT_OK};
use crate::RunFlags;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Shared settings; `--config` here is a single-run config used as the base.
    #[command(flatten)]
    run: RunFlags,
    /// Bench description: problem plus a list of runs.
    #[arg(long, conflicts_with = "solvers")]
    bench_config: Option<PathBuf>,
    /// Comma-separated solvers to run with the shared settings.
    #[arg(long, value_delimiter = ',')]
    solvers: Vec<SolverKind>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Write the comparison as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<MatrixFormat>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthProblem {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    #[serde(default)]
    pub sparse_frac: f64,
    #[serde(default)]
    pub noise_rel: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub mask: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthProblem>,
    pub lambda_l: f64,
    pub lambda_s: f64,
    pub runs: Vec<RunConfig>,
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub solver: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub iterations: usize,
    pub elapsed_s: f64,
    pub objective: f64,
    pub rel_err: f64,
    pub rank: usize,
    /// `(elapsed_s, relative error)` per recorded iteration.
    pub series: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub reference_objective: f64,
    pub rows: Vec<BenchRow>,
}

fn problem(args: &BenchArgs, base: &RunConfig) -> Result<(ProblemSpec, Vec<RunConfig>), CliError> {
    if let Some(path) = &args.bench_config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let bc: BenchConfig = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(|p| p.to_path_buf()).unwrap_or_default();
        let spec = match (&bc.synth, &bc.input) {
            (Some(s), None) => {
                let p = gen_low_rank_plus_sparse(s.m, s.n, s.rank, s.sparse_frac, s.noise_rel, s.seed)?;
                ProblemSpec::new(p.x, bc.lambda_l, bc.lambda_s)?
            }
            (None, Some(input)) => {
                let cfg = RunConfig {
                    input: Some(base_dir.join(input)),
                    mask: bc.mask.as_ref().map(|m| base_dir.join(m)),
                    lambda_l: Some(bc.lambda_l),
                    lambda_s: Some(bc.lambda_s),
                    ..RunConfig::default()
                };
                load_spec(&cfg, args.format)?
            }
            _ => return Err(CliError::Usage("bench config needs exactly one of input and synth".into())),
        };
        let runs = bc
            .runs
            .into_iter()
            .map(|r| RunConfig { lambda_l: Some(bc.lambda_l), lambda_s: Some(bc.lambda_s), ..r })
            .collect();
        Ok((spec, runs))
    } else {
        let mut cfg = base.clone();
        if args.input.is_some() {
            cfg.input = args.input.clone();
        }
        if args.mask.is_some() {
            cfg.mask = args.mask.clone();
        }
        let spec = load_spec(&cfg, args.format)?;
        let runs = args.solvers.iter().map(|&solver| RunConfig { solver, ..cfg.clone() }).collect();
        Ok((spec, runs))
    }
}

pub fn bench(args: BenchArgs) -> Result<u8, CliError> {
    let base = args.run.resolve()?;
    let (spec, runs) = problem(&args, &base)?;
    if runs.len() < 2 {
        return Err(CliError::Usage(format!("bench needs at least two solver runs, got {}", runs.len())));
    }
    for r in &runs {
        r.validate()?;
    }

    // solvers run one after another so their timings do not interfere
    let results: Vec<(String, Result<SolveReport, CliError>)> =
        runs.iter().map(|r| (r.solver.to_string(), run_solver(&spec, r))).collect();
    let reference = results
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min);

    let rows: Vec<BenchRow> = results
        .into_iter()
        .map(|(solver, r)| match r {
            Ok(rep) => BenchRow {
                solver,
                status: rep.reason.to_string(),
                error: None,
                iterations: rep.iterations,
                elapsed_s: rep.elapsed_s,
                objective: rep.objective,
                rel_err: relative_objective_error(rep.objective, reference),
                rank: rep.rank,
                series: rep.records.iter().map(|x| (x.elapsed_s, relative_objective_error(x.objective, reference))).collect(),
            },
            Err(e) => BenchRow {
                solver,
                status: "failed".into(),
                error: Some(e.to_string()),
                iterations: 0,
                elapsed_s: f64::NAN,
                objective: f64::NAN,
                rel_err: f64::NAN,
                rank: 0,
                series: vec![],
            },
        })
        .collect();

    println!("{:<8} {:<20} {:>8} {:>10} {:>20} {:>10} {:>6}", "solver", "status", "iters", "time_s", "objective", "rel_err", "rank");
    for r in &rows {
        println!(
            "{:<8} {:<20} {:>8} {:>10.3} {:>20.10e} {:>10.2e} {:>6}",
            r.solver, r.status, r.iterations, r.elapsed_s, r.objective, r.rel_err, r.rank
        );
        if let Some(e) = &r.error {
            eprintln!("{}: {e}", r.solver);
        }
    }
    let all_failed = rows.iter().all(|r| r.error.is_some());
    let report = BenchReport { reference_objective: reference, rows };
    if let Some(p) = &args.out {
        save_json(p, &report)?;
    }
    Ok(if all_failed { EXIT_NUMERICAL } else { EXIT_OK })
}
