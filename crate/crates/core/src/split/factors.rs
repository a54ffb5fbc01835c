use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SvdTriplet};

/// Factored iterate `L = U·Vᵀ` with `U` `m x k` and `V` `n x k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl FactorPair {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.cols() != v.cols() || u.cols() == 0 {
            return Err(Error::dim("FactorPair", format!("U has {} columns, V has {}", u.cols(), v.cols())));
        }
        Ok(Self { u, v })
    }

    /// Balanced factors `U·Σ^½`, `V·Σ^½` of a compact SVD. A rank-0 input
    /// gives a single zero column.
    pub fn from_svd(svd: &SvdTriplet) -> Self {
        if svd.rank() == 0 {
            return Self { u: DenseMatrix::zeros(svd.u.rows(), 1), v: DenseMatrix::zeros(svd.v.rows(), 1) };
        }
        let root: Vec<f64> = svd.sigma.iter().map(|s| s.sqrt()).collect();
        let mut u = svd.u.clone();
        let mut v = svd.v.clone();
        u.scale_columns(&root);
        v.scale_columns(&root);
        Self { u, v }
    }

    pub fn zeros(m: usize, n: usize, k: usize) -> Self {
        Self { u: DenseMatrix::zeros(m, k), v: DenseMatrix::zeros(n, k) }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.u.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    /// Materializes `U·Vᵀ`.
    pub fn product(&self) -> DenseMatrix {
        self.u.matmul_nt(&self.v)
    }

    /// `½(‖U‖_F² + ‖V‖_F²)`, an upper bound on `‖U·Vᵀ‖_*`.
    pub fn half_squared_norm(&self) -> f64 {
        0.5 * (self.u.frobenius_norm_sq() + self.v.frobenius_norm_sq())
    }

    /// `[vec(U); vec(V)]`, both row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.u.data().len() + self.v.data().len());
        flat.extend_from_slice(self.u.data());
        flat.extend_from_slice(self.v.data());
        flat
    }

    pub fn from_flat(m: usize, n: usize, k: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != (m + n) * k {
            return Err(Error::dim("FactorPair::from_flat", format!("{} values for ({m}+{n})x{k}", flat.len())));
        }
        let (a, b) = flat.split_at(m * k);
        Self::new(DenseMatrix::from_vec(m, k, a.to_vec())?, DenseMatrix::from_vec(n, k, b.to_vec())?)
    }

    /// Appends the column pair `(u, v)`.
    pub fn with_column(&self, u: &[f64], v: &[f64]) -> Self {
        Self { u: self.u.with_column(u), v: self.v.with_column(v) }
    }

    /// `(U·Q, V·Q)`; leaves the product unchanged for orthogonal `Q`.
    pub fn rotate(&self, q: &DenseMatrix) -> Self {
        Self { u: self.u.matmul(q), v: self.v.matmul(q) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::standard_normal_matrix;

    #[test]
    fn flat_round_trip() {
        let fp = FactorPair::new(standard_normal_matrix(4, 2, 1), standard_normal_matrix(3, 2, 2)).unwrap();
        let back = FactorPair::from_flat(4, 3, 2, &fp.to_flat()).unwrap();
        assert_eq!(back, fp);
        assert!(FactorPair::from_flat(4, 3, 2, &[0.0; 5]).is_err());
    }

    #[test]
    fn mismatched_ranks_are_rejected() {
        assert!(FactorPair::new(DenseMatrix::zeros(3, 2), DenseMatrix::zeros(3, 1)).is_err());
        assert!(FactorPair::new(DenseMatrix::zeros(3, 0), DenseMatrix::zeros(3, 0)).is_err());
    }
}
