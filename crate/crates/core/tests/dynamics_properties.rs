mod common;

use common::*;
use farming_core::cavity::{decoupled_positions, hamiltonian_matrix, CavityConfig, ModeLayout, DECOUPLING_THRESHOLD};
use farming_core::dynamics::{evolve, integrate_propagator, propagator, Propagator};
use farming_core::gaussian::{check_symplectic, vacuum_state, CovarianceMatrix};
use farming_core::linalg::max_abs_diff;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagators_compose(t1 in 0.0..15.0f64, t2 in 0.0..15.0f64, n in 1u32..6) {
        let h = hamiltonian_matrix(&CavityConfig::reference(n)).unwrap();
        let a = propagator(&h.f_sym, t1).unwrap();
        let b = propagator(&h.f_sym, t2).unwrap();
        let ab = propagator(&h.f_sym, t1 + t2).unwrap();
        prop_assert!(max_abs_diff(&(b.matrix() * a.matrix()), ab.matrix()) < 1e-10);
    }

    #[test]
    fn hamiltonian_expectation_is_conserved(
        (sigma, _) in physical_state(4),
        t in 0.0..30.0f64,
    ) {
        let h = hamiltonian_matrix(&CavityConfig::reference(2)).unwrap();
        let p = propagator(&h.f_sym, t).unwrap();
        let moved = evolve(&sigma, &p).unwrap();
        let e0 = (&h.f_sym * sigma.matrix()).trace() / 4.0;
        let e1 = (&h.f_sym * moved.matrix()).trace() / 4.0;
        prop_assert!((e0 - e1).abs() < 1e-9 * e0.abs().max(1.0), "{e0} vs {e1}");
    }

    #[test]
    fn propagator_is_symplectic(n in 1u32..12, t in 0.0..40.0f64, lambda in 0.0..0.1f64) {
        let h = hamiltonian_matrix(&CavityConfig::reference(n).with_coupling(lambda)).unwrap();
        prop_assert!(check_symplectic(propagator(&h.f_sym, t).unwrap().matrix()).unwrap() < 1e-9);
    }
}

#[test]
fn rk4_matches_exponential() {
    let config = CavityConfig::reference(16);
    let h = hamiltonian_matrix(&config).unwrap();
    let exact = Propagator::for_config(&config).unwrap();
    let f = h.f_sym.clone();
    let rk = integrate_propagator(|_| f.clone(), config.cycle_time, 1e-3).unwrap();
    let err = max_abs_diff(rk.matrix(), exact.matrix());
    assert!(err < 1e-8, "{err:.3e}");
}

#[test]
fn rk4_is_fourth_order() {
    let config = CavityConfig::reference(4);
    let h = hamiltonian_matrix(&config).unwrap();
    let exact = Propagator::for_config(&config).unwrap();
    let f = h.f_sym.clone();
    let err = |step: f64| max_abs_diff(integrate_propagator(|_| f.clone(), 20.0, step).unwrap().matrix(), exact.matrix());
    let ratio = err(0.04) / err(0.02);
    let order = ratio.log2();
    assert!((order - 4.0).abs() < 0.2, "observed order {order}");
}

#[test]
fn decoupled_mode_rotates_freely() {
    // x₁ = L/3 and x₂ = 2L/3 are nodes of every third mode
    let config = CavityConfig::reference(6);
    let positions = decoupled_positions(&config, DECOUPLING_THRESHOLD);
    assert_eq!(positions, vec![2, 5]);
    let s = Propagator::for_config(&config).unwrap();
    let layout = ModeLayout::of(&config);
    for p in positions {
        let w = config.wavenumber(config.modes[p]);
        let (q, pp) = (layout.field_q(p), layout.field_p(p));
        let angle = w * config.cycle_time;
        assert!((s.matrix()[(q, q)] - angle.cos()).abs() < 1e-12);
        assert!((s.matrix()[(q, pp)] - angle.sin()).abs() < 1e-12);
        assert!((s.matrix()[(pp, q)] + angle.sin()).abs() < 1e-12);
        for j in 0..s.matrix().ncols() {
            if j != q && j != pp {
                assert!(s.matrix()[(q, j)].abs() < 1e-12 && s.matrix()[(j, q)].abs() < 1e-12);
            }
        }
    }
}

#[test]
fn detector_correlation_grows_quadratically() {
    let config = CavityConfig::reference(8);
    let h = hamiltonian_matrix(&config).unwrap();
    let vac = vacuum_state(config.n_total_modes()).unwrap();
    let ts: Vec<f64> = (0..=10).map(|i| 1e-3 * 10f64.powf(i as f64 / 10.0)).collect();
    let corr: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let s: CovarianceMatrix = evolve(&vac, &propagator(&h.f_sym, t).unwrap()).unwrap();
            s.matrix()[(1, 3)].abs()
        })
        .collect();
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = corr.iter().map(|c| c.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
}
