use farming_core::cavity::{decoupled_positions, CavityConfig, DECOUPLING_THRESHOLD};
use farming_core::farming::{iterate_superoperator, CycleBlocks};
use farming_core::gaussian::vacuum_state;
use farming_core::linalg::{congruence, max_abs, max_abs_diff, real_eigenvalues, submatrix};
use farming_core::spectral::{
    coupled_indices, field_spectrum, fixed_point_for_config, power_map, restricted_spectrum, solve_stein_kronecker,
    solve_stein_schur, AffinePower, FieldSpectrum, FixedPointMethod,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn contraction(n: usize, entries: &[f64], radius: f64) -> DMatrix<f64> {
    let mut d = DMatrix::from_fn(n, n, |i, j| entries[(i * n + j) % entries.len()]);
    let rho = real_eigenvalues(&d).unwrap().iter().map(|z| z.norm()).fold(0.0, f64::max);
    d *= radius / rho.max(1e-12);
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stein_solvers_agree(
        n in 2usize..10,
        entries in prop::collection::vec(-1.0..1.0f64, 100),
        radius in 0.1..0.95f64,
        q_entries in prop::collection::vec(-1.0..1.0f64, 100),
    ) {
        let d = contraction(n, &entries, radius);
        let g = DMatrix::from_fn(n, n, |i, j| q_entries[(i * n + j) % q_entries.len()]);
        let q = &g * g.transpose() + DMatrix::identity(n, n);
        let a = solve_stein_kronecker(&d, &q).unwrap();
        let b = solve_stein_schur(&d, &q).unwrap();
        let scale = max_abs(&a).max(1.0);
        prop_assert!(max_abs_diff(&a, &b) < 1e-9 * scale);
        prop_assert!(max_abs_diff(&(congruence(&d, &a) + &q), &a) < 1e-9 * scale);
    }

    #[test]
    fn power_map_matches_iteration(k in 1u64..64, n in 1u32..6) {
        let config = CavityConfig::reference(n);
        let blocks = CycleBlocks::for_config(&config).unwrap();
        let vac = vacuum_state(n as usize).unwrap();
        let direct = iterate_superoperator(&vac, &blocks, k as usize).unwrap();
        let fast = power_map(&blocks, k).unwrap();
        prop_assert_eq!(fast.k, k);
        prop_assert!(max_abs_diff(fast.apply(&vac).unwrap().matrix(), direct.matrix()) < 1e-10);
    }

    #[test]
    fn composition_is_associative(a in 1u64..20, b in 1u64..20) {
        let blocks = CycleBlocks::for_config(&CavityConfig::reference(3)).unwrap();
        let one = AffinePower::single(&blocks);
        let pa = power_map(&blocks, a).unwrap();
        let pb = power_map(&blocks, b).unwrap();
        let lhs = pa.after(&pb).after(&one);
        let rhs = pa.after(&pb.after(&one));
        prop_assert!(max_abs_diff(&lhs.q, &rhs.q) < 1e-10 * max_abs(&lhs.q).max(1.0));
    }
}

/// Matrix of `Y ↦ D Y Dᵀ` in the basis `E_ii` and `E_ij + E_ji`, `i < j`.
fn symmetric_operator(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let mut op = DMatrix::zeros(pairs.len(), pairs.len());
    for (col, &(i, j)) in pairs.iter().enumerate() {
        let mut e = DMatrix::zeros(n, n);
        e[(i, j)] = 1.0;
        e[(j, i)] = 1.0;
        let img = d * e * d.transpose();
        for (row, &(a, b)) in pairs.iter().enumerate() {
            op[(row, col)] = img[(a, b)];
        }
    }
    op
}

#[test]
fn symmetric_product_spectrum() {
    for n in 1..=4 {
        let blocks = CycleBlocks::for_config(&CavityConfig::reference(n)).unwrap();
        let predicted = field_spectrum(&blocks).unwrap().symmetric_product();
        let actual = real_eigenvalues(&symmetric_operator(&blocks.d)).unwrap();
        let p = FieldSpectrum::from_eigenvalues(predicted).eigenvalues;
        let a = FieldSpectrum::from_eigenvalues(actual).eigenvalues;
        assert_eq!(p.len(), a.len());
        // match each predicted eigenvalue to its nearest neighbour
        for z in &p {
            let best = a.iter().map(|w: &Complex64| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "n = {n}: {z} unmatched ({best:.2e})");
        }
    }
}

#[test]
fn convergence_rate_is_leading_modulus_squared() {
    let config = CavityConfig::reference(2).with_coupling(0.1);
    let blocks = CycleBlocks::for_config(&config).unwrap();
    let vac = vacuum_state(2).unwrap();
    let fp = fixed_point_for_config(&config, &blocks, &vac, FixedPointMethod::Auto).unwrap();
    let idx = coupled_indices(2, &decoupled_positions(&config, DECOUPLING_THRESHOLD));
    let lead = restricted_spectrum(&blocks, &idx).unwrap().max_modulus();
    let dist = |k: usize| {
        let s = iterate_superoperator(&vac, &blocks, k).unwrap();
        max_abs(&(submatrix(s.matrix(), &idx, &idx) - submatrix(fp.sigma_star.matrix(), &idx, &idx)))
    };
    let (k0, span) = (200, 100);
    let rate = (dist(k0 + span) / dist(k0)).powf(1.0 / span as f64);
    assert!((rate / (lead * lead) - 1.0).abs() < 0.1, "rate {rate} vs {}", lead * lead);
}

#[test]
fn kronecker_and_stein_fixed_points_agree_on_cavity() {
    let config = CavityConfig::reference(6).with_coupling(0.05);
    let blocks = CycleBlocks::for_config(&config).unwrap();
    let vac = vacuum_state(6).unwrap();
    let a = fixed_point_for_config(&config, &blocks, &vac, FixedPointMethod::Kronecker).unwrap();
    let b = fixed_point_for_config(&config, &blocks, &vac, FixedPointMethod::Stein).unwrap();
    assert!(max_abs_diff(a.sigma_star.matrix(), b.sigma_star.matrix()) < 1e-8 * max_abs(a.sigma_star.matrix()));
    assert!(a.residual < 1e-8 && b.residual < 1e-8);
}
