use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certificate::certificate_from_svd;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, svd_small, DenseMatrix, SvdTriplet};
use crate::marginal::{phi_value_grad, ProblemSpec};
use crate::report::{CertSummary, CertificateSchedule, IterRecord, SolveReport, TerminationReason};

/// Singular value thresholding, the proximal map of `tau·‖·‖_*`.
pub fn svt(a: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_svd(a, tau)?.reconstruct())
}

/// Compact SVD of `svt(a, tau)`; only strictly positive values are kept.
pub fn svt_svd(a: &DenseMatrix, tau: f64) -> Result<SvdTriplet> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {tau}")));
    }
    let mut s = svd_small(a)?;
    s.sigma.iter_mut().for_each(|x| *x = (*x - tau).max(0.0));
    let r = s.sigma.iter().take_while(|&&x| x > 0.0).count();
    Ok(s.truncate(r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxConfig {
    /// Gradient step; `∇φ` is 1-Lipschitz so any step in (0, 1] is safe.
    pub step: f64,
    pub max_iter: usize,
    /// Stop when the objective changes by at most `tol` relative.
    pub tol: f64,
    /// Nesterov momentum with restart on objective increase.
    pub accel: bool,
    pub certificate: CertificateSchedule,
}

impl Default for ProxConfig {
    fn default() -> Self {
        Self { step: 1.0, max_iter: 5000, tol: 1e-10, accel: true, certificate: CertificateSchedule::Off }
    }
}

/// Proximal gradient on `λ_L‖L‖_* + φ(L)`.
pub fn solve_convex_prox(spec: &ProblemSpec, cfg: &ProxConfig, start: Option<&DenseMatrix>) -> Result<SolveReport> {
    if !(cfg.step > 0.0 && cfg.step <= 1.0) {
        return Err(Error::InvalidParameter(format!("prox step must be in (0, 1], got {}", cfg.step)));
    }
    let (m, n) = spec.shape();
    let lambda = spec.lambda_l;
    let clock = Instant::now();
    let mut excluded = 0.0;

    let mut l = match start {
        Some(s) if s.shape() != (m, n) => {
            return Err(Error::dim("solve_convex_prox", format!("start {:?} vs data {:?}", s.shape(), (m, n))))
        }
        Some(s) => s.clone(),
        None => DenseMatrix::zeros(m, n),
    };
    let mut l_svd = {
        let s = svd_small(&l)?;
        let r = numerical_rank(&s.sigma, 0.0);
        s.truncate(r)
    };
    let mut value = lambda * l_svd.nuclear_norm() + phi_value_grad(&l, spec)?.value;
    let mut y = l.clone();
    let mut momentum: f64 = 1.0;
    let mut best = value;

    let mut records = Vec::new();
    let mut record = |iter: usize, value: f64, gnorm: f64, svd: &SvdTriplet, excluded: &mut f64, best: f64| -> Result<()> {
        let elapsed_s = clock.elapsed().as_secs_f64() - *excluded;
        let cert = if cfg.certificate.due(iter) {
            let t = Instant::now();
            let c = certificate_from_svd(svd, spec, Some(best))?;
            *excluded += t.elapsed().as_secs_f64();
            Some(CertSummary::from(&c))
        } else {
            None
        };
        records.push(IterRecord { iter, objective: value, grad_norm: gnorm, elapsed_s, cert });
        Ok(())
    };
    record(0, value, f64::NAN, &l_svd, &mut excluded, best)?;

    let mut reason = TerminationReason::MaxIterations;
    let mut iterations = 0;
    for iter in 1..=cfg.max_iter {
        let point = if cfg.accel { &y } else { &l };
        let grad = phi_value_grad(point, spec)?.grad;
        let mut z = point.clone();
        z.axpy(-cfg.step, &grad);
        let next_svd = svt_svd(&z, cfg.step * lambda)?;
        let next = next_svd.reconstruct();
        let next_value = lambda * next_svd.nuclear_norm() + phi_value_grad(&next, spec)?.value;
        if !next_value.is_finite() {
            reason = TerminationReason::NumericalFailure;
            break;
        }
        iterations = iter;
        if cfg.accel && next_value > value {
            // restart momentum from the last accepted iterate
            momentum = 1.0;
            y = l.clone();
            continue;
        }
        let gnorm = point.sub(&next).frobenius_norm() / cfg.step;
        let change = (value - next_value).abs();
        if cfg.accel {
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            y = next.clone();
            y.axpy(beta, &next.sub(&l));
            momentum = next_momentum;
        }
        l = next;
        l_svd = next_svd;
        value = next_value;
        best = best.min(value);
        record(iter, value, gnorm, &l_svd, &mut excluded, best)?;
        if change <= cfg.tol * value.abs().max(f64::MIN_POSITIVE) {
            reason = TerminationReason::Converged;
            break;
        }
    }

    let elapsed_s = clock.elapsed().as_secs_f64() - excluded;
    let certificate = if cfg.certificate.wants_final() {
        let c = certificate_from_svd(&l_svd, spec, Some(best))?;
        if let Some(last) = records.last_mut() {
            last.cert = Some(CertSummary::from(&c));
        }
        Some(c)
    } else {
        None
    };
    let s = phi_value_grad(&l, spec)?.s_star;
    Ok(SolveReport {
        solver: "prox".into(),
        reason,
        iterations,
        objective: value,
        rank: l_svd.rank(),
        elapsed_s,
        records,
        certificate,
        factors: Some(crate::split::FactorPair::from_svd(&l_svd)),
        l,
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::standard_normal_matrix;

    #[test]
    fn svt_on_diagonal() {
        let out = svt(&DenseMatrix::from_diag(&[3.0, 1.0]), 2.0).unwrap();
        assert!(out.sub(&DenseMatrix::from_diag(&[1.0, 0.0])).max_abs() < 1e-14);
    }

    #[test]
    fn large_threshold_gives_zero() {
        let a = standard_normal_matrix(5, 4, 1);
        let s1 = svd_small(&a).unwrap().sigma[0];
        assert_eq!(svt(&a, s1).unwrap().max_abs(), 0.0);
        assert_eq!(svt_svd(&a, s1 * 1.5).unwrap().rank(), 0);
    }

    #[test]
    fn svt_satisfies_subgradient_condition() {
        // Z = svt(A, τ) iff (A − Z)/τ ∈ ∂‖Z‖_*: on range(Z) it equals U₁V₁ᵀ,
        // on the complement its spectral norm is at most 1.
        let a = standard_normal_matrix(6, 6, 3);
        let tau = 1.2;
        let zs = svt_svd(&a, tau).unwrap();
        let w = a.sub(&zs.reconstruct()).scaled(1.0 / tau);
        let u1v1 = zs.u.matmul_nt(&zs.v);
        let pu = DenseMatrix::identity(6).sub(&zs.u.matmul_nt(&zs.u));
        let pv = DenseMatrix::identity(6).sub(&zs.v.matmul_nt(&zs.v));
        let on_range = w.sub(&pu.matmul(&w).matmul(&pv));
        assert!(on_range.sub(&u1v1).max_abs() < 1e-10);
        let off = svd_small(&pu.matmul(&w).matmul(&pv)).unwrap().sigma[0];
        assert!(off <= 1.0 + 1e-10);
    }

    #[test]
    fn svt_beats_random_candidates() {
        let a = standard_normal_matrix(6, 6, 4);
        let tau = 0.8;
        let obj = |z: &DenseMatrix| 0.5 * z.sub(&a).frobenius_norm_sq() + tau * svd_small(z).unwrap().nuclear_norm();
        let z = svt(&a, tau).unwrap();
        let best = obj(&z);
        for seed in 0..200u64 {
            let mut cand = z.clone();
            cand.axpy(0.05, &standard_normal_matrix(6, 6, 1000 + seed));
            assert!(obj(&cand) >= best - 1e-12);
        }
    }

    #[test]
    fn plain_prox_is_monotone() {
        let spec = ProblemSpec::new(standard_normal_matrix(10, 8, 1).scaled(2.0), 1.0, 0.5).unwrap();
        let cfg = ProxConfig { accel: false, max_iter: 300, tol: 1e-12, ..Default::default() };
        let r = solve_convex_prox(&spec, &cfg, None).unwrap();
        for w in r.records.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12);
        }
    }

    #[test]
    fn bad_step_is_rejected() {
        let spec = ProblemSpec::new(DenseMatrix::zeros(3, 3), 1.0, 1.0).unwrap();
        let cfg = ProxConfig { step: 1.5, ..Default::default() };
        assert!(solve_convex_prox(&spec, &cfg, None).is_err());
    }
}
