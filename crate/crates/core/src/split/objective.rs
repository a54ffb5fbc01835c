use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::marginal::{phi_value_grad_into, ProblemSpec};

use super::FactorPair;

/// Factored objective value with its partial gradients.
#[derive(Clone, Debug)]
pub struct SplitEval {
    pub value: f64,
    pub grad_u: DenseMatrix,
    pub grad_v: DenseMatrix,
}

/// `(λ_L/2)(‖U‖² + ‖V‖²) + φ(U·Vᵀ)` and its gradient
/// `(G·V + λ_L·U, Gᵀ·U + λ_L·V)` with `G = ∇φ(U·Vᵀ)`.
pub fn split_objective(fp: &FactorPair, spec: &ProblemSpec) -> Result<SplitEval> {
    let (m, n) = spec.shape();
    if fp.shape() != (m, n) {
        return Err(Error::dim("split_objective", format!("factors give {:?}, data is {m}x{n}", fp.shape())));
    }
    let mut grad = DenseMatrix::zeros(m, n);
    let (value, grad_u, grad_v) = evaluate(&fp.u, &fp.v, spec, &mut grad);
    Ok(SplitEval { value, grad_u, grad_v })
}

fn evaluate(u: &DenseMatrix, v: &DenseMatrix, spec: &ProblemSpec, g: &mut DenseMatrix) -> (f64, DenseMatrix, DenseMatrix) {
    let lambda = spec.lambda_l;
    let l = u.matmul_nt(v);
    let phi = phi_value_grad_into(&l, spec, g);
    let value = 0.5 * lambda * (u.frobenius_norm_sq() + v.frobenius_norm_sq()) + phi;
    let mut grad_u = g.matmul(v);
    grad_u.axpy(lambda, u);
    let mut grad_v = g.matmul_tn(u);
    grad_v.axpy(lambda, v);
    (value, grad_u, grad_v)
}

/// The factored objective over the flat variable `[vec(U); vec(V)]`.
pub(crate) struct FlatObjective<'a> {
    spec: &'a ProblemSpec,
    k: usize,
    scratch: DenseMatrix,
}

impl<'a> FlatObjective<'a> {
    pub(crate) fn new(spec: &'a ProblemSpec, k: usize) -> Self {
        let (m, n) = spec.shape();
        Self { spec, k, scratch: DenseMatrix::zeros(m, n) }
    }

    pub(crate) fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (m, n) = self.spec.shape();
        let k = self.k;
        let (a, b) = x.split_at(m * k);
        let u = DenseMatrix::from_vec(m, k, a.to_vec()).expect("flat layout");
        let v = DenseMatrix::from_vec(n, k, b.to_vec()).expect("flat layout");
        let (value, gu, gv) = evaluate(&u, &v, self.spec, &mut self.scratch);
        let (ga, gb) = grad.split_at_mut(m * k);
        ga.copy_from_slice(gu.data());
        gb.copy_from_slice(gv.data());
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::huber;
    use crate::synth::standard_normal_matrix;

    #[test]
    fn origin_is_stationary() {
        let x = standard_normal_matrix(5, 4, 1);
        let spec = ProblemSpec::new(x.clone(), 1.0, 0.5).unwrap();
        let e = split_objective(&FactorPair::zeros(5, 4, 2), &spec).unwrap();
        let expected: f64 = x.data().iter().map(|&z| huber(z, 0.5)).sum();
        assert!((e.value - expected).abs() < 1e-14);
        assert_eq!(e.grad_u.max_abs(), 0.0);
        assert_eq!(e.grad_v.max_abs(), 0.0);
    }

    #[test]
    fn one_by_one_hand_arithmetic() {
        let spec = ProblemSpec::new(DenseMatrix::from_rows(&[[0.0]]), 1.0, 10.0).unwrap();
        let fp = FactorPair::new(DenseMatrix::from_rows(&[[2.0]]), DenseMatrix::from_rows(&[[3.0]])).unwrap();
        let e = split_objective(&fp, &spec).unwrap();
        assert_eq!(e.value, 24.5);
        assert_eq!(e.grad_u[(0, 0)], 20.0);
        assert_eq!(e.grad_v[(0, 0)], 6.0 * 2.0 + 3.0);
    }

    #[test]
    fn flat_and_matrix_forms_agree() {
        let spec = ProblemSpec::new(standard_normal_matrix(6, 5, 3), 0.7, 0.4).unwrap();
        let fp = FactorPair::new(standard_normal_matrix(6, 2, 4), standard_normal_matrix(5, 2, 5)).unwrap();
        let e = split_objective(&fp, &spec).unwrap();
        let mut obj = FlatObjective::new(&spec, 2);
        let mut g = vec![0.0; 22];
        let v = obj.eval(&fp.to_flat(), &mut g);
        assert_eq!(v, e.value);
        assert_eq!(&g[..12], e.grad_u.data());
        assert_eq!(&g[12..], e.grad_v.data());
    }

    #[test]
    fn shape_mismatch() {
        let spec = ProblemSpec::new(DenseMatrix::zeros(3, 3), 1.0, 1.0).unwrap();
        assert!(split_objective(&FactorPair::zeros(3, 2, 1), &spec).is_err());
    }
}
