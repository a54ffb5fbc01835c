use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use super::qr::thin_qr;
use super::svd::{svd_small, SvdTriplet};
use crate::error::{Error, Result};

/// Sketch parameters for [`rand_svd`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsvdParams {
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for RsvdParams {
    fn default() -> Self {
        Self { oversample: 10, power_iters: 1 }
    }
}

/// Randomized range-finder SVD returning the leading `k` triples.
///
/// Gaussian test matrix of width `k + oversample` drawn from ChaCha8 seeded
/// with `seed`; each power iteration re-orthonormalizes with a thin QR.
pub fn rand_svd(a: &DenseMatrix, k: usize, params: RsvdParams, seed: u64) -> Result<SvdTriplet> {
    let (m, n) = a.shape();
    let width = k + params.oversample;
    if k == 0 || width > m.min(n) {
        return Err(Error::dim(
            "rand_svd",
            format!("sketch width {width} (k = {k}) must be in 1..={} for a {m}x{n} matrix", m.min(n)),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DenseMatrix::from_fn(n, width, |_, _| StandardNormal.sample(&mut rng));

    let (mut q, _) = thin_qr(&a.matmul(&omega))?;
    for _ in 0..params.power_iters {
        let (z, _) = thin_qr(&a.matmul_tn(&q))?;
        q = thin_qr(&a.matmul(&z))?.0;
    }
    // B = Qᵀ A is width x n; its SVD lifts back through Q.
    let b = q.matmul_tn(a);
    let small = svd_small(&b)?;
    let full = SvdTriplet { u: q.matmul(&small.u), sigma: small.sigma, v: small.v };
    Ok(full.truncate(k))
}
