use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Thin QR factorization by Householder reflections.
///
/// For an `m x k` input with `m >= k` returns `q` (`m x k`, orthonormal
/// columns) and upper-triangular `r` (`k x k`) with a non-negative diagonal.
pub fn thin_qr(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, k) = a.shape();
    if m < k {
        return Err(Error::dim("thin_qr", format!("need rows >= cols, got {m}x{k}")));
    }
    // Column-major working copy: reflections act on columns.
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| a.column(j)).collect();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);

    for j in 0..k {
        let x = &cols[j][j..];
        let norm_x = dot(x, x).sqrt();
        if norm_x == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm_x } else { norm_x };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vn = dot(&v, &v).sqrt();
        if vn == 0.0 {
            reflectors.push(None);
            continue;
        }
        v.iter_mut().for_each(|e| *e /= vn);
        for col in cols.iter_mut().skip(j) {
            reflect(&v, &mut col[j..]);
        }
        reflectors.push(Some(v));
    }

    let mut r = DenseMatrix::zeros(k, k);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..=j {
            r[(i, j)] = col[i];
        }
    }

    // Q = H_0 H_1 ... H_{k-1} applied to the first k columns of the identity.
    let mut q_cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for (j, v) in reflectors.iter().enumerate().rev() {
        if let Some(v) = v {
            for qc in q_cols.iter_mut() {
                reflect(v, &mut qc[j..]);
            }
        }
    }

    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for c in j..k {
                r[(j, c)] = -r[(j, c)];
            }
            q_cols[j].iter_mut().for_each(|e| *e = -*e);
        }
    }
    Ok((DenseMatrix::from_columns(m, &q_cols), r))
}

#[inline]
fn reflect(v: &[f64], x: &mut [f64]) {
    let s = 2.0 * dot(v, x);
    x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= s * vi);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::standard_normal_matrix;
    use proptest::prelude::*;

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        q.matmul_tn(q).sub(&DenseMatrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn already_orthonormal_input_is_returned() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let (q, r) = thin_qr(&a).unwrap();
        assert!(q.sub(&a).max_abs() < 1e-15);
        assert!(r.sub(&DenseMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn single_column_normalizes() {
        let (q, r) = thin_qr(&DenseMatrix::from_rows(&[[3.0], [4.0]])).unwrap();
        assert!((q[(0, 0)] - 0.6).abs() < 1e-15 && (q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn wide_input_is_rejected() {
        assert!(matches!(thin_qr(&DenseMatrix::zeros(2, 3)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn zero_matrix_still_gives_orthonormal_q() {
        let (q, r) = thin_qr(&DenseMatrix::zeros(5, 3)).unwrap();
        assert!(orthonormality_error(&q) < 1e-15);
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn random_50x5_reconstructs() {
        let a = standard_normal_matrix(50, 5, 7);
        let (q, r) = thin_qr(&a).unwrap();
        assert!(q.matmul(&r).sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(orthonormality_error(&q) <= 1e-10);
        for i in 0..5 {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn factors_are_orthonormal_and_reconstruct(k in 1usize..8, extra in 0usize..20, seed in any::<u64>()) {
            let a = standard_normal_matrix(k + extra, k, seed);
            let (q, r) = thin_qr(&a).unwrap();
            prop_assert!(orthonormality_error(&q) <= 1e-10);
            prop_assert!(q.matmul(&r).sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        }
    }
}
