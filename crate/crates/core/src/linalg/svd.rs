use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Compact singular value decomposition `a ≈ u · diag(sigma) · vᵀ`.
///
/// `sigma` is sorted in non-increasing order and non-negative; `u` and `v`
/// have orthonormal columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvdTriplet {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdTriplet {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Number of singular values strictly above `rel_tol * sigma_1`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&self.sigma, rel_tol)
    }

    /// Keeps the leading `r` triples.
    pub fn truncate(&self, r: usize) -> SvdTriplet {
        let r = r.min(self.rank());
        SvdTriplet {
            u: self.u.leading_columns(r),
            sigma: self.sigma[..r].to_vec(),
            v: self.v.leading_columns(r),
        }
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        us.scale_columns(&self.sigma);
        us.matmul_nt(&self.v)
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }
}

pub(crate) fn numerical_rank(sigma: &[f64], rel_tol: f64) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().take_while(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

fn to_nalgebra(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.data())
}

// a tighter tolerance makes nalgebra return wrong factors on some rank-deficient inputs
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

fn iteration_cap(a: &DenseMatrix) -> usize {
    1000 + 100 * a.rows().min(a.cols())
}

/// Dense SVD of rank `min(m, n)`, for small and moderate sizes.
pub fn svd_small(a: &DenseMatrix) -> Result<SvdTriplet> {
    let (m, n) = a.shape();
    let p = m.min(n);
    if p == 0 {
        return Ok(SvdTriplet { u: DenseMatrix::zeros(m, 0), sigma: vec![], v: DenseMatrix::zeros(n, 0) });
    }
    if !a.is_finite() {
        return Err(Error::Numerical("svd_small: non-finite input".into()));
    }
    let cap = iteration_cap(a);
    let svd = to_nalgebra(a)
        .try_svd(true, true, SVD_EPS, cap)
        .ok_or(Error::NotConverged { op: "svd_small", iterations: cap })?;
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical("svd_small: missing singular vectors".into()));
    };

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut uu = DenseMatrix::zeros(m, p);
    let mut vv = DenseMatrix::zeros(n, p);
    let mut sigma = Vec::with_capacity(p);
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(svd.singular_values[src].max(0.0));
        for i in 0..m {
            uu[(i, dst)] = u[(i, src)];
        }
        for j in 0..n {
            vv[(j, dst)] = v_t[(src, j)];
        }
    }
    Ok(SvdTriplet { u: uu, sigma, v: vv })
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if a.rows().min(a.cols()) == 0 {
        return Ok(vec![]);
    }
    if !a.is_finite() {
        return Err(Error::Numerical("singular_values: non-finite input".into()));
    }
    let cap = iteration_cap(a);
    let svd = to_nalgebra(a)
        .try_svd(false, false, SVD_EPS, cap)
        .ok_or(Error::NotConverged { op: "singular_values", iterations: cap })?;
    let mut s: Vec<f64> = svd.singular_values.iter().map(|v| v.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::standard_normal_matrix;
    use proptest::prelude::*;

    fn check_orthonormal(q: &DenseMatrix, tol: f64) {
        let err = q.matmul_tn(q).sub(&DenseMatrix::identity(q.cols())).max_abs();
        assert!(err <= tol, "orthonormality error {err}");
    }

    #[test]
    fn rank_deficient_regression() {
        let l = standard_normal_matrix(14, 2, 17).matmul_nt(&standard_normal_matrix(11, 2, 67));
        let s = svd_small(&l).unwrap();
        assert!(s.reconstruct().sub(&l).max_abs() < 1e-12 * l.max_abs());
        let sv = singular_values(&l).unwrap();
        assert!((sv[0] - s.sigma[0]).abs() < 1e-12 * sv[0]);
    }

    #[test]
    fn diagonal_input() {
        let s = svd_small(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-14 && (s.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_nonzero_singular_value() {
        let s = svd_small(&DenseMatrix::from_rows(&[[0.0, 2.0], [0.0, 0.0]])).unwrap();
        assert!((s.sigma[0] - 2.0).abs() < 1e-14);
        assert!(s.sigma[1].abs() < 1e-14);
    }

    #[test]
    fn random_8x5_frobenius_identity() {
        let a = standard_normal_matrix(8, 5, 3);
        let s = svd_small(&a).unwrap();
        let sum_sq: f64 = s.sigma.iter().map(|x| x * x).sum();
        assert!((sum_sq - a.frobenius_norm_sq()).abs() <= 1e-9 * a.frobenius_norm_sq());
        assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-9 * a.frobenius_norm());
        check_orthonormal(&s.u, 1e-10);
        check_orthonormal(&s.v, 1e-10);
    }

    #[test]
    fn wide_and_tall_shapes() {
        for &(m, n) in &[(3, 9), (9, 3), (1, 4), (4, 1)] {
            let a = standard_normal_matrix(m, n, (m * 31 + n) as u64);
            let s = svd_small(&a).unwrap();
            assert_eq!(s.u.shape(), (m, m.min(n)));
            assert_eq!(s.v.shape(), (n, m.min(n)));
            assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-9 * a.frobenius_norm());
            let sv = singular_values(&a).unwrap();
            for (x, y) in sv.iter().zip(&s.sigma) {
                assert!((x - y).abs() <= 1e-12 * s.sigma[0]);
            }
        }
    }

    #[test]
    fn numerical_rank_counts_relative_to_leading_value() {
        assert_eq!(numerical_rank(&[2.0, 1.0, 1e-12], 1e-10), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-10), 0);
        assert_eq!(numerical_rank(&[], 1e-10), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn sorted_nonnegative_and_frobenius(m in 1usize..12, n in 1usize..12, seed in any::<u64>()) {
            let a = standard_normal_matrix(m, n, seed);
            let s = svd_small(&a).unwrap();
            for w in s.sigma.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            prop_assert!(s.sigma.iter().all(|&x| x >= 0.0));
            let sum_sq: f64 = s.sigma.iter().map(|x| x * x).sum();
            prop_assert!((sum_sq - a.frobenius_norm_sq()).abs() <= 1e-9 * a.frobenius_norm_sq());
            prop_assert!(s.u.matmul_tn(&s.u).sub(&DenseMatrix::identity(s.rank())).max_abs() <= 1e-10);
            prop_assert!(s.v.matmul_tn(&s.v).sub(&DenseMatrix::identity(s.rank())).max_abs() <= 1e-10);
        }
    }
}
