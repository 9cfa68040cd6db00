//! One-cycle symplectic propagators `S(t) = exp(Ω F_sym t)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::cavity::{hamiltonian_matrix, CavityConfig};
use crate::error::{Error, Result};
use crate::gaussian::{check_symplectic, CovarianceMatrix, SymplecticMatrix};
use crate::linalg;

/// Largest tolerated `‖SΩSᵀ − Ω‖∞` for an exponential propagator.
pub const PROPAGATOR_TOL: f64 = 1e-9;

/// Largest tolerated symplectic drift of the RK4 oracle.
pub const INTEGRATOR_DRIFT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Propagator {
    pub s: SymplecticMatrix,
    pub t: f64,
    /// Fingerprint of the generating configuration, 0 for bare matrices.
    pub fingerprint: u64,
}

impl Propagator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        self.s.matrix()
    }

    pub fn for_config(config: &CavityConfig) -> Result<Self> {
        let h = hamiltonian_matrix(config)?;
        let mut p = propagator(&h.f_sym, config.cycle_time)?;
        p.fingerprint = config.fingerprint();
        Ok(p)
    }
}

fn check_hamiltonian(f_sym: &DMatrix<f64>) -> Result<()> {
    if !f_sym.is_square() || !f_sym.nrows().is_multiple_of(2) || f_sym.nrows() == 0 {
        return Err(Error::InvalidArgument("Hamiltonian matrix must be square with even dimension".into()));
    }
    if linalg::asymmetry(f_sym) > 1e-12 * linalg::max_abs(f_sym).max(1.0) {
        return Err(Error::InvalidArgument("Hamiltonian matrix must be symmetric".into()));
    }
    Ok(())
}

/// `exp(Ω F_sym t)` with a post-hoc symplecticity check.
pub fn propagator(f_sym: &DMatrix<f64>, t: f64) -> Result<Propagator> {
    check_hamiltonian(f_sym)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("evolution time must be non-negative, got {t}")));
    }
    let generator = linalg::omega_left(f_sym) * t;
    let s = linalg::expm(&generator)?;
    let violation = check_symplectic(&s)?;
    if violation > PROPAGATOR_TOL {
        return Err(Error::PropagatorAccuracy { violation });
    }
    Ok(Propagator { s: SymplecticMatrix::new_unchecked(s), t, fingerprint: 0 })
}

/// `σ(t) = S σ Sᵀ`.
pub fn evolve(sigma: &CovarianceMatrix, propagator: &Propagator) -> Result<CovarianceMatrix> {
    propagator.s.act(sigma)
}

/// Fixed-step RK4 solution of `dS/dt = Ω F_sym(t) S`, `S(0) = I`.
///
/// The step is shortened so that an integer number of steps lands exactly on `t`.
pub fn integrate_propagator<F>(f_sym_of_t: F, t: f64, step: f64) -> Result<Propagator>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("evolution time must be non-negative, got {t}")));
    }
    let f0 = f_sym_of_t(0.0);
    check_hamiltonian(&f0)?;
    let dim = f0.nrows();
    let mut s = DMatrix::<f64>::identity(dim, dim);
    let n_steps = (t / step).ceil() as usize;
    if n_steps > 0 {
        let h = t / n_steps as f64;
        let rhs = |time: f64, s: &DMatrix<f64>| linalg::omega_left(&(f_sym_of_t(time) * s));
        for i in 0..n_steps {
            let t0 = i as f64 * h;
            let k1 = rhs(t0, &s);
            let k2 = rhs(t0 + 0.5 * h, &(&s + &k1 * (0.5 * h)));
            let k3 = rhs(t0 + 0.5 * h, &(&s + &k2 * (0.5 * h)));
            let k4 = rhs(t0 + h, &(&s + &k3 * h));
            s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    let drift = check_symplectic(&s)?;
    if drift > INTEGRATOR_DRIFT_TOL {
        return Err(Error::StepTooLarge { drift });
    }
    Ok(Propagator { s: SymplecticMatrix::new_unchecked(s), t, fingerprint: 0 })
}

/// Propagators keyed by configuration fingerprint, shared across threads.
#[derive(Debug, Default)]
pub struct PropagatorCache {
    entries: Mutex<HashMap<u64, Arc<Propagator>>>,
}

impl PropagatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, config: &CavityConfig) -> Result<Arc<Propagator>> {
        let key = config.fingerprint();
        if let Some(p) = self.entries.lock().expect("propagator cache poisoned").get(&key) {
            return Ok(Arc::clone(p));
        }
        // Computed outside the lock; a racing duplicate is harmless.
        let p = Arc::new(Propagator::for_config(config)?);
        self.entries.lock().expect("propagator cache poisoned").insert(key, Arc::clone(&p));
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("propagator cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
