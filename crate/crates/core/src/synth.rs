//! Seeded synthetic problem generators.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; normal
//! variates use `rand_distr::StandardNormal` (ziggurat). Draw order for
//! [`gen_low_rank_plus_sparse`]: left factor, right factor (both row-major),
//! support positions, support values, noise.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::marginal::Mask;

/// A low-rank + sparse + noise instance with its ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticProblem {
    pub x: DenseMatrix,
    pub l_ref: DenseMatrix,
    pub s_ref: DenseMatrix,
}

pub fn standard_normal_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    normal_matrix(rows, cols, &mut rng)
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn target_count(frac: f64, total: usize) -> usize {
    ((frac * total as f64).round() as usize).min(total)
}

/// `X = A·Bᵀ + S + Z` with Gaussian factors, a Gaussian sparse part on
/// `round(sparse_frac·mn)` uniformly chosen entries, and Gaussian noise scaled
/// so that `‖Z‖_F / ‖X‖_F = noise_rel`.
pub fn gen_low_rank_plus_sparse(
    m: usize,
    n: usize,
    rank: usize,
    sparse_frac: f64,
    noise_rel: f64,
    seed: u64,
) -> Result<SyntheticProblem> {
    if rank > m.min(n) {
        return Err(Error::InvalidParameter(format!("rank {rank} exceeds min({m}, {n})")));
    }
    if !(0.0..=1.0).contains(&sparse_frac) {
        return Err(Error::InvalidParameter(format!("sparse_frac {sparse_frac} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&noise_rel) {
        return Err(Error::InvalidParameter(format!("noise_rel {noise_rel} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = normal_matrix(m, rank, &mut rng);
    let b = normal_matrix(n, rank, &mut rng);
    let l_ref = a.matmul_nt(&b);

    let mut s_ref = DenseMatrix::zeros(m, n);
    let count = target_count(sparse_frac, m * n);
    let mut support = index::sample(&mut rng, m * n, count).into_vec();
    support.sort_unstable();
    for idx in support {
        s_ref.data_mut()[idx] = StandardNormal.sample(&mut rng);
    }

    let clean = l_ref.add(&s_ref);
    let x = if noise_rel == 0.0 {
        clean
    } else {
        let z = normal_matrix(m, n, &mut rng);
        // Solve ‖cZ‖² = ρ²‖Y + cZ‖² for the positive root c.
        let (zz, yz, yy) = (z.frobenius_norm_sq(), clean.dot(&z), clean.frobenius_norm_sq());
        let rho2 = noise_rel * noise_rel;
        let qa = zz * (1.0 - rho2);
        let qb = -2.0 * rho2 * yz;
        let qc = -rho2 * yy;
        let c = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
        let mut x = clean;
        x.axpy(c, &z);
        x
    };
    Ok(SyntheticProblem { x, l_ref, s_ref })
}

/// Exactly `round(observe_frac·mn)` observed entries, uniform without replacement.
pub fn gen_mask(m: usize, n: usize, observe_frac: f64, seed: u64) -> Result<Mask> {
    if !(observe_frac > 0.0 && observe_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!("observe_frac {observe_frac} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = target_count(observe_frac, m * n);
    let mut flags = vec![false; m * n];
    for idx in index::sample(&mut rng, m * n, count) {
        flags[idx] = true;
    }
    Mask::new(m, n, flags)
}
