use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rand_svd, svd_small, DenseMatrix, RsvdParams};
use crate::marginal::ProblemSpec;

use super::FactorPair;

/// How the starting factors are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    #[default]
    Rsvd,
    FullSvd,
    Random,
}

impl FromStr for InitStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rsvd" => Ok(Self::Rsvd),
            "full_svd" | "full-svd" => Ok(Self::FullSvd),
            "random" => Ok(Self::Random),
            other => Err(format!("unknown init strategy {other:?} (rsvd, full_svd, random)")),
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rsvd => "rsvd",
            Self::FullSvd => "full_svd",
            Self::Random => "random",
        })
    }
}

/// Starting factors of rank `k`.
///
/// The SVD strategies return `U_k Σ_k^½` and `V_k Σ_k^½` from the rank-`k`
/// (randomized) SVD of the zero-filled observations; `Random` draws i.i.d.
/// normals scaled by `1/√k`.
pub fn init_factors(
    spec: &ProblemSpec,
    k: usize,
    strategy: InitStrategy,
    rsvd: RsvdParams,
    seed: u64,
) -> Result<FactorPair> {
    let (m, n) = spec.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParameter(format!("rank bound {k} must be in 1..={}", m.min(n))));
    }
    match strategy {
        InitStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = 1.0 / (k as f64).sqrt();
            let mut draw = |rows| DenseMatrix::from_fn(rows, k, |_, _| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng));
            let u = draw(m);
            let v = draw(n);
            FactorPair::new(u, v)
        }
        InitStrategy::FullSvd => Ok(FactorPair::from_svd(&svd_small(&spec.observed_data())?.truncate(k))),
        InitStrategy::Rsvd => {
            let params = RsvdParams { oversample: rsvd.oversample.min(m.min(n) - k), ..rsvd };
            Ok(FactorPair::from_svd(&rand_svd(&spec.observed_data(), k, params, seed)?))
        }
    }
    .map(|fp| pad_to_rank(fp, k))
}

// from_svd collapses an all-zero spectrum to one column
fn pad_to_rank(fp: FactorPair, k: usize) -> FactorPair {
    let mut fp = fp;
    while fp.k() < k {
        let (m, n) = fp.shape();
        fp = fp.with_column(&vec![0.0; m], &vec![0.0; n]);
    }
    fp
}
