use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::certificate::{certificate, CertificateReport};
use crate::error::{Error, Result};
use crate::linalg::{leading_triple, PowerParams, RsvdParams};
use crate::marginal::{phi_value_grad, ProblemSpec};
use crate::report::{CertSummary, CertificateSchedule, IterRecord, SolveReport, TerminationReason};

use super::init::{init_factors, InitStrategy};
use super::lbfgs::{lbfgs_minimize, LbfgsConfig};
use super::objective::{split_objective, FlatObjective};
use super::FactorPair;

/// Rank-growth settings: after convergence one column is appended along the
/// leading singular pair of `−∇φ(UVᵀ)` and the problem is re-solved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankGrowth {
    pub max_k: usize,
    /// Stop growing once a new column improves the objective by less than
    /// this fraction.
    pub min_rel_improvement: f64,
    /// New column scale `η = step · σ₁`.
    pub step: f64,
}

impl Default for RankGrowth {
    fn default() -> Self {
        Self { max_k: usize::MAX, min_rel_improvement: 1e-6, step: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub memory: usize,
    pub grad_tol: f64,
    /// Iteration cap per solve (each rank-growth stage gets its own).
    pub max_iter: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub init: InitStrategy,
    pub rsvd: RsvdParams,
    pub rank_growth: Option<RankGrowth>,
    pub seed: u64,
    pub certificate: CertificateSchedule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let lb = LbfgsConfig::default();
        Self {
            memory: lb.memory,
            grad_tol: lb.grad_tol,
            max_iter: lb.max_iter,
            wolfe_c1: lb.c1,
            wolfe_c2: lb.c2,
            init: InitStrategy::Rsvd,
            rsvd: RsvdParams::default(),
            rank_growth: None,
            seed: 0,
            certificate: CertificateSchedule::Off,
        }
    }
}

impl SolverConfig {
    pub fn lbfgs(&self) -> LbfgsConfig {
        LbfgsConfig {
            memory: self.memory,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            c1: self.wolfe_c1,
            c2: self.wolfe_c2,
            ..LbfgsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lbfgs().validate()?;
        if let Some(g) = &self.rank_growth {
            if !(g.step > 0.0) || !(g.min_rel_improvement >= 0.0) {
                return Err(Error::InvalidParameter("rank growth step and threshold must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Factored solve: initialize rank-`k` factors, run L-BFGS, optionally grow
/// the rank.
pub fn solve_split_spcp(spec: &ProblemSpec, k: usize, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let start = init_factors(spec, k, cfg.init, cfg.rsvd, cfg.seed)?;
    solve_split_from(spec, start, cfg)
}

/// Same as [`solve_split_spcp`] from given starting factors.
pub fn solve_split_from(spec: &ProblemSpec, start: FactorPair, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let (m, n) = spec.shape();
    if start.shape() != (m, n) {
        return Err(Error::dim("solve_split", format!("factors give {:?}, data is {m}x{n}", start.shape())));
    }
    let mut trace = Trace::new(cfg.certificate);
    let mut fp = start;
    let mut stage = run_stage(spec, fp, cfg, &mut trace)?;

    if let Some(growth) = cfg.rank_growth {
        let stationary = |r: TerminationReason| matches!(r, TerminationReason::Converged | TerminationReason::LineSearchFailed);
        while stationary(stage.reason) && stage.fp.k() < growth.max_k.min(m.min(n)) {
            let clock = Instant::now();
            let Some(grown) = grow_once(spec, &stage.fp, stage.value, &growth, cfg.seed)? else {
                trace.solver_time += clock.elapsed();
                break;
            };
            trace.solver_time += clock.elapsed();
            let prev = stage.value;
            stage = run_stage(spec, grown, cfg, &mut trace)?;
            if prev - stage.value < growth.min_rel_improvement * prev.abs() {
                break;
            }
        }
    }

    fp = stage.fp;
    let l = fp.product();
    let s = phi_value_grad(&l, spec)?.s_star;
    let cert = if cfg.certificate.wants_final() {
        let c = certificate(&fp, spec, Some(trace.best))?;
        if let Some(last) = trace.records.last_mut() {
            last.cert = Some(CertSummary::from(&c));
        }
        Some(c)
    } else {
        None
    };
    Ok(SolveReport {
        solver: "split".into(),
        reason: stage.reason,
        iterations: trace.offset,
        objective: stage.value,
        rank: fp.k(),
        elapsed_s: trace.solver_time.as_secs_f64(),
        records: trace.records,
        certificate: cert,
        l,
        s,
        factors: Some(fp),
    })
}

struct Stage {
    fp: FactorPair,
    value: f64,
    reason: TerminationReason,
}

struct Trace {
    schedule: CertificateSchedule,
    records: Vec<IterRecord>,
    offset: usize,
    best: f64,
    solver_time: Duration,
    first_grad_norm: Option<f64>,
}

impl Trace {
    fn new(schedule: CertificateSchedule) -> Self {
        Self { schedule, records: Vec::new(), offset: 0, best: f64::INFINITY, solver_time: Duration::ZERO, first_grad_norm: None }
    }
}

fn run_stage(spec: &ProblemSpec, fp: FactorPair, cfg: &SolverConfig, trace: &mut Trace) -> Result<Stage> {
    let (m, n) = spec.shape();
    let k = fp.k();
    let mut objective = FlatObjective::new(spec, k);
    let offset = trace.offset;
    let first_stage = trace.records.is_empty();
    let mut cert_error = None;

    // later stages keep the absolute tolerance of the first one
    let mut lbfgs = cfg.lbfgs();
    if let Some(g0) = trace.first_grad_norm {
        lbfgs.grad_tol *= g0.max(1.0);
    }
    let mut segment_start = Instant::now();
    let result = lbfgs_minimize(
        |x, g| objective.eval(x, g),
        fp.to_flat(),
        &lbfgs,
        |info| {
            trace.solver_time += segment_start.elapsed();
            // later stages start where the previous one stopped
            if info.iter == 0 && !first_stage {
                segment_start = Instant::now();
                return;
            }
            trace.first_grad_norm.get_or_insert(info.grad_norm);
            trace.best = trace.best.min(info.value);
            let iter = offset + info.iter;
            let cert = if trace.schedule.due(iter) {
                FactorPair::from_flat(m, n, k, info.x)
                    .and_then(|f| certificate(&f, spec, Some(trace.best)))
                    .map_err(|e| cert_error = Some(e))
                    .ok()
                    .map(|c: CertificateReport| CertSummary::from(&c))
            } else {
                None
            };
            trace.records.push(IterRecord {
                iter,
                objective: info.value,
                grad_norm: info.grad_norm,
                elapsed_s: trace.solver_time.as_secs_f64(),
                cert,
            });
            segment_start = Instant::now();
        },
    )?;
    if let Some(e) = cert_error {
        return Err(e);
    }
    trace.offset += result.iterations;
    Ok(Stage { fp: FactorPair::from_flat(m, n, k, &result.x)?, value: result.value, reason: result.reason })
}

/// Appends `(√η·u₁, √η·v₁)` from the leading pair of `−∇φ(UVᵀ)`, halving `η`
/// until the objective does not increase. `None` when no rank-one direction
/// descends.
fn grow_once(spec: &ProblemSpec, fp: &FactorPair, value: f64, growth: &RankGrowth, seed: u64) -> Result<Option<FactorPair>> {
    let neg_grad = phi_value_grad(&fp.product(), spec)?.grad.scaled(-1.0);
    let triple = match leading_triple(&neg_grad, PowerParams::default(), seed) {
        Ok(t) => t,
        Err(Error::LeadingTripleNotConverged { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    if triple.sigma <= spec.lambda_l {
        return Ok(None);
    }
    let mut eta = growth.step * triple.sigma;
    for _ in 0..40 {
        let r = eta.sqrt();
        let u: Vec<f64> = triple.u.iter().map(|x| r * x).collect();
        let v: Vec<f64> = triple.v.iter().map(|x| r * x).collect();
        let candidate = fp.with_column(&u, &v);
        if split_objective(&candidate, spec)?.value <= value {
            return Ok(Some(candidate));
        }
        eta *= 0.5;
    }
    Ok(None)
}
