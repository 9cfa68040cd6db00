//! Brute-force checks of the Gaussian engine against the truncated-Fock oracle.

use farming_core::cavity::{mode_amplitude, CavityConfig};
use farming_core::dynamics::{evolve, Propagator};
use farming_core::fock::{evolve_and_covariance, ground_state_energy, FockConfig, FockMethod, LEAKAGE_TOL};
use farming_core::gaussian::{log_negativity, reduce, vacuum_state, CovarianceMatrix, LogBase, TwoModeState};
use farming_core::linalg::{lapack_self_check, max_abs_diff};

pub const OBSERVABLE_TOL: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> farming_core::Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn detector_negativity(sigma: &CovarianceMatrix) -> farming_core::Result<f64> {
    log_negativity(&TwoModeState::from_covariance(&reduce(sigma, &[0, 1])?)?, LogBase::Natural)
}

pub fn run_checks() -> Vec<Check> {
    let single = CavityConfig::reference(1);
    vec![
        check("lapack_backend", || lapack_self_check().map(|_| (true, "reconstruction ok".into()))),
        check("one_mode_covariance_and_negativity", || {
            let fock = evolve_and_covariance(&FockConfig::new(single.clone(), 8, 2)?, single.cycle_time, FockMethod::Auto)?;
            let gauss = evolve(&vacuum_state(single.n_total_modes())?, &Propagator::for_config(&single)?)?;
            let cov = max_abs_diff(fock.covariance.matrix(), gauss.matrix());
            let en = (detector_negativity(&fock.covariance)? - detector_negativity(&gauss)?).abs();
            let ok = fock.leakage < LEAKAGE_TOL && cov < OBSERVABLE_TOL && en < OBSERVABLE_TOL;
            Ok((ok, format!("covariance {cov:.2e}, negativity {en:.2e}, leakage {:.2e}", fock.leakage)))
        }),
        check("ground_state_shift", || {
            let cfg = FockConfig::new(single.clone(), 8, 1)?;
            let e0 = ground_state_energy(&cfg)?;
            let g = single.coupling * mode_amplitude(&single, 1, single.x1);
            let expected = -g * g / (single.detector_frequency + single.wavenumber(1));
            let rel = (e0 / expected - 1.0).abs();
            Ok((rel < 0.05, format!("relative deviation {rel:.2e} from second order")))
        }),
        check("dense_vs_krylov", || {
            let cfg = FockConfig::new(single.clone().with_coupling(0.05), 6, 2)?;
            let a = evolve_and_covariance(&cfg, 10.0, FockMethod::Dense)?;
            let b = evolve_and_covariance(&cfg, 10.0, FockMethod::Krylov)?;
            let d = max_abs_diff(a.covariance.matrix(), b.covariance.matrix());
            Ok((d < 1e-9, format!("covariance difference {d:.2e}")))
        }),
        check("two_mode_krylov", || {
            let cav = CavityConfig::reference(2).with_cycle_time(8.0);
            let fock = evolve_and_covariance(&FockConfig::new(cav.clone(), 7, 2)?, 8.0, FockMethod::Krylov)?;
            let gauss = evolve(&vacuum_state(cav.n_total_modes())?, &Propagator::for_config(&cav)?)?;
            let cov = max_abs_diff(fock.covariance.matrix(), gauss.matrix());
            Ok((cov < OBSERVABLE_TOL, format!("covariance {cov:.2e}, norm drift {:.1e}", (fock.norm - 1.0).abs())))
        }),
    ]
}
