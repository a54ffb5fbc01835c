#![allow(dead_code)]

use spcp_core::linalg::thin_qr;
use spcp_core::synth::standard_normal_matrix;
use spcp_core::{solve_convex_prox, DenseMatrix, ProblemSpec, ProxConfig, SolveReport};

/// High-accuracy convex optimum from the proximal baseline.
pub fn convex_optimum(spec: &ProblemSpec) -> SolveReport {
    let cfg = ProxConfig { max_iter: 20_000, tol: 1e-14, ..Default::default() };
    solve_convex_prox(spec, &cfg, None).unwrap()
}

pub fn random_orthogonal(k: usize, seed: u64) -> DenseMatrix {
    thin_qr(&standard_normal_matrix(k, k, seed)).unwrap().0
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
