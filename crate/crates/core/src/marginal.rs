//! The marginal loss `phi(L) = min_S ½‖P_Ω(L + S − X)‖_F² + λ_S‖S‖₁`.
//!
//! With the sparse term minimized out in closed form, `phi` is the Huber
//! function of the residual `X − L`, summed over observed entries. It is
//! convex and its gradient is 1-Lipschitz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Boolean observation pattern, row-major, `true` = observed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != rows * cols {
            return Err(Error::dim("Mask::new", format!("{} flags for {rows}x{cols}", observed.len())));
        }
        Ok(Self { rows, cols, observed })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self { rows, cols, observed: vec![true; rows * cols] }
    }

    /// Nonzero entries of `m` count as observed.
    pub fn from_matrix(m: &DenseMatrix) -> Self {
        Self { rows: m.rows(), cols: m.cols(), observed: m.data().iter().map(|&v| v != 0.0).collect() }
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        let data = self.observed.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        DenseMatrix::from_vec(self.rows, self.cols, data).expect("shape")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn flags(&self) -> &[bool] {
        &self.observed
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }
}

/// Data and tuning parameters of a regularized low-rank + sparse problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub x: DenseMatrix,
    pub mask: Option<Mask>,
    pub lambda_l: f64,
    pub lambda_s: f64,
}

impl ProblemSpec {
    pub fn new(x: DenseMatrix, lambda_l: f64, lambda_s: f64) -> Result<Self> {
        Self::with_mask(x, None, lambda_l, lambda_s)
    }

    pub fn with_mask(x: DenseMatrix, mask: Option<Mask>, lambda_l: f64, lambda_s: f64) -> Result<Self> {
        if !(lambda_l > 0.0 && lambda_l.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda_l must be positive, got {lambda_l}")));
        }
        if !(lambda_s > 0.0 && lambda_s.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda_s must be positive, got {lambda_s}")));
        }
        if let Some(mask) = &mask {
            if mask.shape() != x.shape() {
                return Err(Error::dim("ProblemSpec", format!("mask {:?} vs data {:?}", mask.shape(), x.shape())));
            }
        }
        if !x.is_finite() {
            return Err(Error::InvalidParameter("data contains non-finite entries".into()));
        }
        Ok(Self { x, mask, lambda_l, lambda_s })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }

    #[inline]
    pub(crate) fn observed(&self, idx: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m.observed[idx])
    }

    /// `P_Ω(X)`: the data with unobserved entries set to zero.
    pub fn observed_data(&self) -> DenseMatrix {
        self.project(&self.x)
    }

    /// Zeros the unobserved entries of `a`.
    pub fn project(&self, a: &DenseMatrix) -> DenseMatrix {
        let mut out = a.clone();
        if let Some(mask) = &self.mask {
            out.data_mut().iter_mut().zip(&mask.observed).for_each(|(v, &o)| {
                if !o {
                    *v = 0.0
                }
            });
        }
        out
    }

    pub fn regularizer(&self) -> L1 {
        L1 { lambda: self.lambda_s }
    }
}

/// Entrywise sparse regularizer: value and proximal map of `r(s)`.
///
/// Only [`L1`] ships; the marginal computation goes through this trait.
pub trait EntrywiseRegularizer {
    fn penalty(&self, s: f64) -> f64;
    /// `argmin_s ½(s − z)² + r(s)`.
    fn prox(&self, z: f64) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1 {
    pub lambda: f64,
}

impl EntrywiseRegularizer for L1 {
    #[inline]
    fn penalty(&self, s: f64) -> f64 {
        self.lambda * s.abs()
    }

    #[inline]
    fn prox(&self, z: f64) -> f64 {
        shrink(z, self.lambda)
    }
}

/// Soft-thresholding `sign(z)·max(|z| − tau, 0)`.
#[inline]
pub fn shrink(z: f64, tau: f64) -> f64 {
    if z > tau {
        z - tau
    } else if z < -tau {
        z + tau
    } else {
        0.0
    }
}

/// Huber function: `½z²` for `|z| <= tau`, else `tau|z| − ½tau²`.
#[inline]
pub fn huber(z: f64, tau: f64) -> f64 {
    let a = z.abs();
    if a <= tau {
        0.5 * z * z
    } else {
        tau * a - 0.5 * tau * tau
    }
}

/// Value, gradient and minimizing sparse part of the marginal loss at `l`.
#[derive(Clone, Debug)]
pub struct MarginalEval {
    pub value: f64,
    pub grad: DenseMatrix,
    pub s_star: DenseMatrix,
}

/// Evaluates `phi` at `l`. `s_star` is zero off the mask.
pub fn phi_value_grad(l: &DenseMatrix, spec: &ProblemSpec) -> Result<MarginalEval> {
    check_shape(l, spec)?;
    let (m, n) = spec.shape();
    let mut grad = DenseMatrix::zeros(m, n);
    let mut s_star = DenseMatrix::zeros(m, n);
    let reg = spec.regularizer();
    let mut value = 0.0;
    for (idx, ((g, s), (&x, &lv))) in grad
        .data_mut()
        .iter_mut()
        .zip(s_star.data_mut().iter_mut())
        .zip(spec.x.data().iter().zip(l.data()))
        .enumerate()
    {
        if !spec.observed(idx) {
            continue;
        }
        let z = x - lv;
        let sv = reg.prox(z);
        let r = z - sv;
        value += 0.5 * r * r + reg.penalty(sv);
        *s = sv;
        *g = -r;
    }
    Ok(MarginalEval { value, grad, s_star })
}

/// Like [`phi_value_grad`] but writes the gradient into `grad` and skips `S*`.
pub(crate) fn phi_value_grad_into(l: &DenseMatrix, spec: &ProblemSpec, grad: &mut DenseMatrix) -> f64 {
    debug_assert_eq!(l.shape(), spec.shape());
    let reg = spec.regularizer();
    let mut value = 0.0;
    for (idx, (g, (&x, &lv))) in grad.data_mut().iter_mut().zip(spec.x.data().iter().zip(l.data())).enumerate() {
        if !spec.observed(idx) {
            *g = 0.0;
            continue;
        }
        let z = x - lv;
        let sv = reg.prox(z);
        let r = z - sv;
        value += 0.5 * r * r + reg.penalty(sv);
        *g = -r;
    }
    value
}

/// `phi(l)` alone.
pub fn phi_value(l: &DenseMatrix, spec: &ProblemSpec) -> Result<f64> {
    check_shape(l, spec)?;
    let tau = spec.lambda_s;
    Ok(spec
        .x
        .data()
        .iter()
        .zip(l.data())
        .enumerate()
        .filter(|(idx, _)| spec.observed(*idx))
        .map(|(_, (&x, &lv))| huber(x - lv, tau))
        .sum())
}

/// `S* = shrink(X − L, λ_S)` on observed entries, zero elsewhere.
pub fn sparse_part(l: &DenseMatrix, spec: &ProblemSpec) -> Result<DenseMatrix> {
    Ok(phi_value_grad(l, spec)?.s_star)
}

fn check_shape(l: &DenseMatrix, spec: &ProblemSpec) -> Result<()> {
    if l.shape() != spec.shape() {
        return Err(Error::dim("phi_value_grad", format!("L is {:?}, data is {:?}", l.shape(), spec.shape())));
    }
    Ok(())
}
