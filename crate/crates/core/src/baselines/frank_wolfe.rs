use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certificate::certificate_dense;
use crate::error::{Error, Result};
use crate::linalg::{leading_triple, singular_values, numerical_rank, DenseMatrix, PowerParams};
use crate::marginal::{phi_value_grad, ProblemSpec};
use crate::report::{CertSummary, CertificateSchedule, IterRecord, SolveReport, TerminationReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FwConfig {
    pub max_iter: usize,
    /// Stop once the gap falls to `tol` times the first gap.
    pub tol: f64,
    pub lmo: PowerParams,
    pub seed: u64,
    /// Wall-clock budget in seconds.
    pub time_budget_s: Option<f64>,
    /// Use `η = 2/(k+2)` instead of the exact line search.
    pub fixed_step: bool,
    pub certificate: CertificateSchedule,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-6,
            lmo: PowerParams::default(),
            seed: 0,
            time_budget_s: None,
            fixed_step: false,
            certificate: CertificateSchedule::Off,
        }
    }
}

/// Iterate of the epigraph formulation `min_{‖L‖_* ≤ t} λ_L·t + φ(L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FwState {
    pub l: DenseMatrix,
    pub t: f64,
    /// Upper bound on `‖L*‖_*`.
    pub u_bound: f64,
    /// `λ_L·t + φ(l)`.
    pub objective: f64,
}

impl FwState {
    /// Starts at `L = 0`, `t = 0`.
    pub fn initial(spec: &ProblemSpec) -> Result<Self> {
        let (m, n) = spec.shape();
        Self::at(spec, DenseMatrix::zeros(m, n), 0.0)
    }

    /// Starts at `l` with `t = ‖l‖_*`.
    pub fn from_matrix(spec: &ProblemSpec, l: DenseMatrix) -> Result<Self> {
        if l.shape() != spec.shape() {
            return Err(Error::dim("FwState", format!("start {:?} vs data {:?}", l.shape(), spec.shape())));
        }
        let t = singular_values(&l)?.iter().sum();
        Self::at(spec, l, t)
    }

    fn at(spec: &ProblemSpec, l: DenseMatrix, t: f64) -> Result<Self> {
        let phi = phi_value_grad(&l, spec)?.value;
        Ok(Self { u_bound: t + phi / spec.lambda_l, objective: spec.lambda_l * t + phi, l, t })
    }
}

/// One iteration's data, enough to replay the line search.
#[derive(Clone, Debug)]
pub struct FwStep {
    pub next: FwState,
    /// Sparse part `shrink(X − L_k, λ_S)` on Ω used by the line search.
    pub s: DenseMatrix,
    /// Vertex `V_k` and its nuclear-norm level `V_{t_k}`.
    pub v: DenseMatrix,
    pub v_t: f64,
    pub eta: f64,
    pub gap: f64,
    /// `λ_L ≥ σ₁(∇φ(L_k))`, so the vertex is the origin.
    pub zero_branch: bool,
}

/// One Frank-Wolfe step from `state`. `iter` counts from 0 and seeds the LMO.
pub fn fw_step(state: &FwState, spec: &ProblemSpec, cfg: &FwConfig, iter: usize) -> Result<FwStep> {
    let lambda = spec.lambda_l;
    let eval = phi_value_grad(&state.l, spec)?;
    let grad = eval.grad;
    let triple = match leading_triple(&grad, cfg.lmo, cfg.seed.wrapping_add(iter as u64)) {
        Ok(t) => t,
        Err(Error::LeadingTripleNotConverged { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let (m, n) = spec.shape();
    let zero_branch = lambda >= triple.sigma;
    let (v, v_t) = if zero_branch {
        (DenseMatrix::zeros(m, n), 0.0)
    } else {
        let scale = -state.u_bound;
        (DenseMatrix::from_fn(m, n, |i, j| scale * triple.u[i] * triple.v[j]), state.u_bound)
    };
    let gap = lambda * (state.t - v_t) + grad.dot(&state.l.sub(&v));

    let eta = if cfg.fixed_step {
        2.0 / (iter as f64 + 2.0)
    } else {
        // ½‖R + ηD‖² + λ((1−η)t + η·V_t) with R = P_Ω(L + S − X), D = P_Ω(V − L)
        let d = spec.project(&v.sub(&state.l));
        let dd = d.frobenius_norm_sq();
        let slope = grad.dot(&d) + lambda * (v_t - state.t);
        if dd > 0.0 {
            (-slope / dd).clamp(0.0, 1.0)
        } else if slope < 0.0 {
            1.0
        } else {
            0.0
        }
    };

    let mut l = state.l.scaled(1.0 - eta);
    l.axpy(eta, &v);
    let t = (1.0 - eta) * state.t + eta * v_t;
    let phi = phi_value_grad(&l, spec)?.value;
    let next = FwState {
        u_bound: state.u_bound.min(t + phi / lambda),
        objective: lambda * t + phi,
        l,
        t,
    };
    Ok(FwStep { next, s: eval.s_star, v, v_t, eta, gap, zero_branch })
}

/// Frank-Wolfe with the sparse part marginalized, from `L = 0`.
pub fn solve_frank_wolfe(spec: &ProblemSpec, cfg: &FwConfig) -> Result<SolveReport> {
    let clock = Instant::now();
    let mut excluded = 0.0;
    let mut state = FwState::initial(spec)?;
    let mut best = state.objective;
    let mut records = Vec::new();
    let mut gap0 = None;
    let mut reason = TerminationReason::MaxIterations;
    let mut iterations = 0;

    let mut push = |iter: usize, state: &FwState, gap: f64, excluded: &mut f64, best: f64| -> Result<()> {
        let elapsed_s = clock.elapsed().as_secs_f64() - *excluded;
        let cert = if cfg.certificate.due(iter) {
            let t = Instant::now();
            let c = certificate_dense(&state.l, spec, Some(best))?;
            *excluded += t.elapsed().as_secs_f64();
            Some(CertSummary::from(&c))
        } else {
            None
        };
        records.push(IterRecord { iter, objective: state.objective, grad_norm: gap, elapsed_s, cert });
        Ok(())
    };
    push(0, &state, f64::NAN, &mut excluded, best)?;

    for iter in 0..cfg.max_iter {
        if let Some(budget) = cfg.time_budget_s {
            if clock.elapsed().as_secs_f64() - excluded >= budget {
                reason = TerminationReason::TimeBudget;
                break;
            }
        }
        let step = fw_step(&state, spec, cfg, iter)?;
        let g0 = *gap0.get_or_insert(step.gap);
        if step.gap <= cfg.tol * g0 || g0 <= 0.0 {
            reason = TerminationReason::Converged;
            break;
        }
        if !step.next.objective.is_finite() {
            reason = TerminationReason::NumericalFailure;
            break;
        }
        state = step.next;
        best = best.min(state.objective);
        iterations = iter + 1;
        push(iterations, &state, step.gap, &mut excluded, best)?;
    }

    let elapsed_s = clock.elapsed().as_secs_f64() - excluded;
    let certificate = if cfg.certificate.wants_final() {
        let c = certificate_dense(&state.l, spec, Some(best))?;
        if let Some(last) = records.last_mut() {
            last.cert = Some(CertSummary::from(&c));
        }
        Some(c)
    } else {
        None
    };
    let rank = numerical_rank(&singular_values(&state.l)?, crate::certificate::DEFAULT_RANK_TOL);
    let s = phi_value_grad(&state.l, spec)?.s_star;
    Ok(SolveReport {
        solver: "fw".into(),
        reason,
        iterations,
        objective: state.objective,
        rank,
        elapsed_s,
        records,
        certificate,
        factors: None,
        l: state.l,
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_low_rank_plus_sparse;

    #[test]
    fn over_regularized_stays_at_zero() {
        let p = gen_low_rank_plus_sparse(8, 6, 2, 0.2, 0.0, 3).unwrap();
        let spec = ProblemSpec::new(p.x, 1e6, 0.5).unwrap();
        let step = fw_step(&FwState::initial(&spec).unwrap(), &spec, &FwConfig::default(), 0).unwrap();
        assert!(step.zero_branch);
        assert_eq!(step.next.l.max_abs(), 0.0);
        assert_eq!(step.next.t, 0.0);
    }

    #[test]
    fn surrogate_dominates_nuclear_norm() {
        let p = gen_low_rank_plus_sparse(10, 8, 2, 0.2, 1e-3, 4).unwrap();
        let spec = ProblemSpec::new(p.x, 0.5, 0.3).unwrap();
        let cfg = FwConfig::default();
        let mut state = FwState::initial(&spec).unwrap();
        for k in 0..50 {
            state = fw_step(&state, &spec, &cfg, k).unwrap().next;
            let nuc: f64 = singular_values(&state.l).unwrap().iter().sum();
            assert!(state.t >= nuc - 1e-6 * state.t);
        }
    }
}
