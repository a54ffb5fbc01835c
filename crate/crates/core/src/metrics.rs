//! Degrees of freedom, log-likelihood and AIC_c for a decomposition
//! `X ≈ L + S`, plus small trace helpers.

use serde::{Deserialize, Serialize};

use crate::certificate::DEFAULT_RANK_TOL;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values, DenseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreesOfFreedom {
    pub rank: usize,
    pub dof_rank: f64,
    pub dof_sparse: f64,
    pub dof_resid: f64,
}

impl DegreesOfFreedom {
    pub fn total(&self) -> f64 {
        self.dof_rank + self.dof_sparse + self.dof_resid
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiccComponents {
    pub dof: DegreesOfFreedom,
    pub sigma2_hat: f64,
    pub b_hat: f64,
    pub bstar_hat: f64,
    /// `b̂ = 0`: the Laplace terms for `S` were left out.
    pub sparse_terms_dropped: bool,
    /// `b̂_* = 0`: the Laplace terms for the singular values were left out.
    pub rank_terms_dropped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiccReport {
    pub p: f64,
    pub loglik: f64,
    /// `None` when `mn − p − 1 ≤ 0`.
    pub aicc: Option<f64>,
    pub components: AiccComponents,
}

fn check_shapes(l: &DenseMatrix, s: &DenseMatrix, x: &DenseMatrix) -> Result<()> {
    if l.shape() != x.shape() || s.shape() != x.shape() {
        return Err(Error::dim("metrics", format!("l {:?}, s {:?}, x {:?}", l.shape(), s.shape(), x.shape())));
    }
    Ok(())
}

/// Entries with `|s| > threshold`.
pub fn nnz(s: &DenseMatrix, threshold: f64) -> usize {
    s.data().iter().filter(|v| v.abs() > threshold).count()
}

/// Degrees of freedom with `nnz(S)` counting exact nonzeros.
pub fn degrees_of_freedom(l: &DenseMatrix, s: &DenseMatrix, x: &DenseMatrix) -> Result<DegreesOfFreedom> {
    degrees_of_freedom_thresholded(l, s, x, 0.0)
}

/// As [`degrees_of_freedom`], counting only `|s| > threshold` as nonzero.
pub fn degrees_of_freedom_thresholded(
    l: &DenseMatrix,
    s: &DenseMatrix,
    x: &DenseMatrix,
    threshold: f64,
) -> Result<DegreesOfFreedom> {
    check_shapes(l, s, x)?;
    let sv = singular_values(l)?;
    dof_with_spectrum(&sv, l, s, x, threshold)
}

fn dof_with_spectrum(sv: &[f64], l: &DenseMatrix, s: &DenseMatrix, x: &DenseMatrix, threshold: f64) -> Result<DegreesOfFreedom> {
    let xx = x.frobenius_norm_sq();
    if xx == 0.0 {
        return Err(Error::InvalidParameter("x is zero; residual degrees of freedom undefined".into()));
    }
    let (m, n) = x.shape();
    let k = numerical_rank(sv, DEFAULT_RANK_TOL);
    let resid = l.add(s).sub(x).frobenius_norm_sq();
    Ok(DegreesOfFreedom {
        rank: k,
        dof_rank: (k * (m + n - k)) as f64,
        dof_sparse: nnz(s, threshold) as f64,
        dof_resid: resid / xx * (m * n) as f64,
    })
}

/// AIC_c of `(l, s)` as a model for `x`; lower is better.
pub fn aicc(l: &DenseMatrix, s: &DenseMatrix, x: &DenseMatrix) -> Result<AiccReport> {
    aicc_thresholded(l, s, x, 0.0)
}

/// As [`aicc`] with `nnz(S)` counting only `|s| > threshold`.
pub fn aicc_thresholded(l: &DenseMatrix, s: &DenseMatrix, x: &DenseMatrix, threshold: f64) -> Result<AiccReport> {
    check_shapes(l, s, x)?;
    let sv = singular_values(l)?;
    let dof = dof_with_spectrum(&sv, l, s, x, threshold)?;
    let (m, n) = x.shape();
    let mn = (m * n) as f64;
    let two_pi = 2.0 * std::f64::consts::PI;

    let sigma2_hat = x.frobenius_norm_sq() / mn;
    let resid = l.add(s).sub(x).frobenius_norm_sq();
    let mut loglik = -0.5 * mn * (two_pi * sigma2_hat).ln() - resid / (2.0 * sigma2_hat);

    let s1 = s.l1_norm();
    let b_hat = s1 / mn;
    let sparse_terms_dropped = b_hat == 0.0;
    if !sparse_terms_dropped {
        loglik -= mn * (2.0 * b_hat).ln() + s1 / (2.0 * b_hat);
    }

    let nuclear: f64 = sv[..dof.rank].iter().sum();
    let bstar_hat = if dof.rank == 0 { 0.0 } else { nuclear / dof.rank as f64 };
    let rank_terms_dropped = bstar_hat == 0.0;
    if !rank_terms_dropped {
        loglik -= dof.rank as f64 * (2.0 * bstar_hat).ln() + nuclear / (2.0 * bstar_hat);
    }

    let p = dof.total();
    let denom = mn - p - 1.0;
    let aicc = (denom > 0.0).then(|| 2.0 * (p - loglik) + 2.0 * p * (p + 1.0) / denom);
    Ok(AiccReport {
        p,
        loglik,
        aicc,
        components: AiccComponents { dof, sigma2_hat, b_hat, bstar_hat, sparse_terms_dropped, rank_terms_dropped },
    })
}

/// `(objective − reference) / |reference|`.
pub fn relative_objective_error(objective: f64, reference: f64) -> f64 {
    (objective - reference) / reference.abs().max(f64::MIN_POSITIVE)
}
