mod common;

use spcp_core::linalg::{svd_small, thin_qr};
use spcp_core::synth::standard_normal_matrix;
use spcp_core::{
    certificate_dense, gen_low_rank_plus_sparse, phi_value_grad, solve_convex_prox, solve_split_spcp, CertificateSchedule,
    DenseMatrix, ProblemSpec, ProxConfig, SolverConfig,
};

/// Distance from `d` to the subdifferential of the nuclear norm at a rank-2
/// 4×3 matrix, by grid search over the free 2×1 block (a unit disk).
fn brute_force_distance(l: &DenseMatrix, d: &DenseMatrix) -> f64 {
    let svd = svd_small(l).unwrap();
    let u1 = svd.u.leading_columns(2);
    let v1 = svd.v.leading_columns(2);
    let v2 = svd.v.column(2);
    let padded = DenseMatrix::from_fn(4, 4, |i, j| if j < 2 { u1[(i, j)] } else { standard_normal_matrix(4, 2, 9)[(i, j - 2)] });
    let q = thin_qr(&padded).unwrap().0;
    let u2 = [q.column(2), q.column(3)];
    let base = d.sub(&u1.matmul_nt(&v1));
    let mut best = f64::INFINITY;
    let (nr, nt) = (400, 720);
    for a in 0..=nr {
        let r = a as f64 / nr as f64;
        for b in 0..nt {
            let th = b as f64 / nt as f64 * std::f64::consts::TAU;
            let w = [r * th.cos(), r * th.sin()];
            let resid = DenseMatrix::from_fn(4, 3, |i, j| base[(i, j)] - (u2[0][i] * w[0] + u2[1][i] * w[1]) * v2[j]);
            best = best.min(resid.frobenius_norm());
        }
    }
    best
}

#[test]
fn e_norm_matches_grid_search_over_subgradients() {
    for seed in 0..5u64 {
        let x = standard_normal_matrix(4, 3, seed).scaled(2.0);
        let lambda = 0.5 + seed as f64 * 0.3;
        let spec = ProblemSpec::new(x.clone(), lambda, 0.6).unwrap();
        let l = standard_normal_matrix(4, 2, 10 + seed).matmul_nt(&standard_normal_matrix(3, 2, 20 + seed));
        let cert = certificate_dense(&l, &spec, None).unwrap();
        assert_eq!(cert.rank, 2);
        let d = phi_value_grad(&l, &spec).unwrap().grad.scaled(-1.0 / lambda);
        let brute = brute_force_distance(&l, &d);
        let exact = cert.e_norm / lambda;
        // grid spacing in the disk is at most 2π/720 ≈ 0.0087
        assert!(brute >= exact - 1e-10, "{brute} < {exact}");
        assert!(brute - exact <= 1e-2, "{brute} vs {exact}");
    }
}

#[test]
fn zero_is_certified_when_over_regularized() {
    let p = gen_low_rank_plus_sparse(8, 6, 2, 0.2, 0.0, 1).unwrap();
    let sigma = svd_small(&phi_value_grad(&DenseMatrix::zeros(8, 6), &ProblemSpec::new(p.x.clone(), 1.0, 0.3).unwrap()).unwrap().grad)
        .unwrap()
        .sigma[0];
    let spec = ProblemSpec::new(p.x, 1.01 * sigma, 0.3).unwrap();
    let r = solve_convex_prox(&spec, &ProxConfig::default(), None).unwrap();
    assert_eq!(r.l.max_abs(), 0.0);
    let cert = certificate_dense(&r.l, &spec, None).unwrap();
    assert_eq!(cert.e_norm, 0.0);
}

#[test]
fn prox_optimum_has_small_certificate() {
    let p = gen_low_rank_plus_sparse(8, 6, 2, 0.2, 1e-3, 2).unwrap();
    let spec = ProblemSpec::new(p.x, 0.3, 0.2).unwrap();
    let r = common::convex_optimum(&spec);
    let cert = certificate_dense(&r.l, &spec, None).unwrap();
    assert!(cert.e_norm <= 1e-5 * spec.lambda_l, "e_norm {}", cert.e_norm);
}

#[test]
fn gap_bound_dominates_suboptimality_along_traces() {
    for seed in 0..4u64 {
        let p = gen_low_rank_plus_sparse(15, 12, 3, 0.2, 1e-2, 30 + seed).unwrap();
        let spec = ProblemSpec::new(p.x, 0.8, 0.3).unwrap();
        let best = common::convex_optimum(&spec).objective;

        let split = SolverConfig { certificate: CertificateSchedule::Every(1), seed, ..Default::default() };
        let prox = ProxConfig { certificate: CertificateSchedule::Every(1), max_iter: 200, ..Default::default() };
        let traces = [
            solve_split_spcp(&spec, 5, &split).unwrap().records,
            solve_split_spcp(&spec, 1, &split).unwrap().records,
            solve_convex_prox(&spec, &prox, None).unwrap().records,
        ];
        for rec in traces.iter().flatten() {
            let c = rec.cert.expect("certificate on every record");
            assert!(c.objective - best <= c.gap_bound + 1e-9 * best, "iter {}: {} > {}", rec.iter, c.objective - best, c.gap_bound);
        }
    }
}

#[test]
fn too_small_rank_bound_leaves_a_large_gap() {
    let p = gen_low_rank_plus_sparse(40, 30, 6, 0.1, 1e-3, 5).unwrap();
    let spec = ProblemSpec::new(p.x, 3.0, 0.5).unwrap();
    let star = common::convex_optimum(&spec);
    assert_eq!(star.rank, 6);
    let cfg = SolverConfig { certificate: CertificateSchedule::Final, ..Default::default() };
    let small = solve_split_spcp(&spec, 3, &cfg).unwrap().certificate.unwrap();
    let ample = solve_split_spcp(&spec, 16, &cfg).unwrap().certificate.unwrap();
    assert!(small.gap_bound >= 10.0 * ample.gap_bound, "{} vs {}", small.gap_bound, ample.gap_bound);
}
