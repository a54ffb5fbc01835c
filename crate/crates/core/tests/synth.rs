use spcp_core::linalg::{rand_svd, RsvdParams};
use spcp_core::{gen_low_rank_plus_sparse, gen_mask};

#[test]
fn full_scale_configuration() {
    let p = gen_low_rank_plus_sparse(1000, 1000, 150, 0.5, 8.12e-5, 2024).unwrap();
    let ratio = p.l_ref.add(&p.s_ref).sub(&p.x).frobenius_norm() / p.x.frobenius_norm();
    assert!((ratio - 8.12e-5).abs() <= 1e-6 * 8.12e-5);
    assert_eq!(p.s_ref.data().iter().filter(|v| **v != 0.0).count(), 500_000);
    let sv = rand_svd(&p.l_ref, 160, RsvdParams::default(), 1).unwrap().sigma;
    assert!(sv[149] > 1e-6 * sv[0]);
    assert!(sv[150] < 1e-10 * sv[0]);
}

#[test]
fn masks_differ_by_seed_only_in_placement() {
    let masks: Vec<_> = (0..5).map(|s| gen_mask(20, 20, 0.5, s).unwrap()).collect();
    for (i, a) in masks.iter().enumerate() {
        assert_eq!(a.count(), 200);
        for b in &masks[i + 1..] {
            let overlap = a.flags().iter().zip(b.flags()).filter(|(x, y)| **x && **y).count();
            // independent uniform masks overlap in about a quarter of the entries
            assert!((60..=140).contains(&overlap), "{overlap}");
        }
    }
}
