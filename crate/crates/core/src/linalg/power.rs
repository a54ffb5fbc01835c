use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::matrix::{norm, DenseMatrix};
use crate::error::{Error, Result};

/// A linear map `R^cols -> R^rows` together with its adjoint.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64>;
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.matvec_t(y)
    }
}

/// Leading singular triple `(u, sigma, v)`, with `u` and `v` unit vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeadingTriple {
    pub u: Vec<f64>,
    pub sigma: f64,
    pub v: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    /// Stop once the relative change of the sigma estimate drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 1000 }
    }
}

/// Power iteration on `AᵀA` for the leading singular triple of `op`.
pub fn leading_triple<O: LinearOperator + ?Sized>(op: &O, params: PowerParams, seed: u64) -> Result<LeadingTriple> {
    let (m, n) = (op.rows(), op.cols());
    if m == 0 || n == 0 {
        return Err(Error::dim("leading_triple", format!("empty operator {m}x{n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|e| *e /= nv);

    let mut sigma_prev = f64::NAN;
    let mut best = None;
    for _ in 0..params.max_iter {
        let mut u = op.apply(&v);
        let sigma = norm(&u);
        if sigma == 0.0 {
            let mut e1 = vec![0.0; m];
            e1[0] = 1.0;
            return Ok(LeadingTriple { u: e1, sigma: 0.0, v });
        }
        u.iter_mut().for_each(|e| *e /= sigma);
        let converged = (sigma - sigma_prev).abs() <= params.tol * sigma;
        let mut w = op.apply_adjoint(&u);
        let nw = norm(&w);
        if converged || nw == 0.0 {
            return Ok(LeadingTriple { u, sigma, v });
        }
        w.iter_mut().for_each(|e| *e /= nw);
        best = Some(LeadingTriple { u, sigma, v: v.clone() });
        v = w;
        sigma_prev = sigma;
    }
    Err(Error::LeadingTripleNotConverged {
        iterations: params.max_iter,
        best: Box::new(best.expect("max_iter > 0")),
    })
}
