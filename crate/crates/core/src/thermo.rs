//! Gaussian relative entropy, closest thermal states and the thermality estimator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{
    entropy_function, reduce, symplectic_eigenvalues, thermal_nu, thermal_state, von_neumann_entropy,
    williamson_normal_form, CovarianceMatrix, LogBase, WilliamsonForm,
};
use crate::linalg;

/// `ν − 1` below which a reference mode counts as pure.
pub const PURE_CUTOFF: f64 = 1e-9;

/// Tolerance on blocks of the compared state along pure reference directions.
const PURE_MATCH_TOL: f64 = 1e-8;

/// `log ρ = c + Σ H_ij x_i x_j` for a Gaussian state with no pure directions.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticLogDensity {
    pub c: f64,
    pub h: DMatrix<f64>,
}

impl QuadraticLogDensity {
    /// `⟨log ρ⟩` in the state `sigma`, natural log.
    pub fn expectation(&self, sigma: &CovarianceMatrix) -> Result<f64> {
        if sigma.dimension() != self.h.nrows() {
            return Err(Error::InvalidArgument("dimension mismatch in log-density expectation".into()));
        }
        Ok(self.c + 0.5 * self.h.component_mul(sigma.matrix()).sum())
    }
}

/// `S⁻¹ = −Ω Sᵀ Ω` for symplectic `S`.
fn symplectic_inverse(s: &DMatrix<f64>) -> DMatrix<f64> {
    // Sᵀ Ω = −(Ω S)ᵀ
    let st_omega = linalg::omega_left(s).transpose() * -1.0;
    linalg::omega_left(&st_omega) * -1.0
}

fn normal_mode_coefficient(nu: f64) -> f64 {
    0.5 * ((nu - 1.0) / (nu + 1.0)).ln()
}

fn normal_mode_constant(nu: f64) -> f64 {
    0.5 * (4.0 / (nu * nu - 1.0)).ln()
}

fn density_from_form(w: &WilliamsonForm) -> Result<QuadraticLogDensity> {
    if let Some(&nu) = w.nu.iter().find(|&&nu| nu <= 1.0 + PURE_CUTOFF) {
        return Err(Error::DivergentLogDensity { nu });
    }
    let n = w.nu.len();
    let mut h_tilde = DMatrix::zeros(2 * n, 2 * n);
    for (k, &nu) in w.nu.iter().enumerate() {
        let h = normal_mode_coefficient(nu);
        h_tilde[(2 * k, 2 * k)] = h;
        h_tilde[(2 * k + 1, 2 * k + 1)] = h;
    }
    let c = w.nu.iter().map(|&nu| normal_mode_constant(nu)).sum();
    // x = S y with ⟨y yᵀ⟩ diagonal, so H = S⁻ᵀ H̃ S⁻¹
    let s_inv = symplectic_inverse(w.symplectic.matrix());
    let h = linalg::congruence(&s_inv.transpose(), &h_tilde);
    Ok(QuadraticLogDensity { c, h })
}

pub fn log_density(sigma_b: &CovarianceMatrix) -> Result<QuadraticLogDensity> {
    density_from_form(&williamson_normal_form(sigma_b)?)
}

/// A reference state ρ_B prepared for repeated relative-entropy evaluations.
#[derive(Clone, Debug)]
pub struct RelativeEntropyReference {
    nu: Vec<f64>,
    s_inv: DMatrix<f64>,
    pure: Vec<usize>,
    density: Option<QuadraticLogDensity>,
}

impl RelativeEntropyReference {
    pub fn new(sigma_b: &CovarianceMatrix) -> Result<Self> {
        let w = williamson_normal_form(sigma_b)?;
        let pure: Vec<usize> = (0..w.nu.len()).filter(|&k| w.nu[k] <= 1.0 + PURE_CUTOFF).collect();
        let density = if pure.is_empty() { Some(density_from_form(&w)?) } else { None };
        let s_inv = symplectic_inverse(w.symplectic.matrix());
        Ok(RelativeEntropyReference { nu: w.nu, s_inv, pure, density })
    }

    pub fn dimension(&self) -> usize {
        self.s_inv.nrows()
    }

    /// `S(ρ_A ‖ ρ_B)`; `+∞` when ρ_B is pure along a direction in which ρ_A differs.
    pub fn relative_entropy(&self, sigma_a: &CovarianceMatrix, base: LogBase) -> Result<f64> {
        if sigma_a.dimension() != self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "relative entropy of a {}-dimensional state against a {}-dimensional reference",
                sigma_a.dimension(),
                self.dimension()
            )));
        }
        if let Some(density) = &self.density {
            let s_a = von_neumann_entropy(sigma_a, LogBase::Natural)?;
            return Ok(base.scale(-s_a - density.expectation(sigma_a)?));
        }

        // In the normal-mode coordinates of ρ_B the reference is a product state.
        let y = CovarianceMatrix::new(linalg::congruence(&self.s_inv, sigma_a.matrix()))?;
        let n = self.nu.len();
        let ym = y.matrix();
        for &k in &self.pure {
            for r in 0..2 * n {
                for c in [2 * k, 2 * k + 1] {
                    let expected = if r == c { 1.0 } else { 0.0 };
                    if (ym[(r, c)] - expected).abs() > PURE_MATCH_TOL {
                        return Ok(f64::INFINITY);
                    }
                }
            }
        }
        let rest: Vec<usize> = (0..n).filter(|k| !self.pure.contains(k)).collect();
        if rest.is_empty() {
            return Ok(0.0);
        }
        let y_rest = reduce(&y, &rest)?;
        let s_a = von_neumann_entropy(&y_rest, LogBase::Natural)?;
        let yr = y_rest.matrix();
        let mut cross = 0.0;
        let mut c = 0.0;
        for (i, &k) in rest.iter().enumerate() {
            let nu = self.nu[k];
            c += normal_mode_constant(nu);
            cross += normal_mode_coefficient(nu) * (yr[(2 * i, 2 * i)] + yr[(2 * i + 1, 2 * i + 1)]);
        }
        Ok(base.scale(-s_a - c - 0.5 * cross))
    }
}

/// `S(ρ_A ‖ ρ_B)` in the requested base.
pub fn relative_entropy(sigma_a: &CovarianceMatrix, sigma_b: &CovarianceMatrix, base: LogBase) -> Result<f64> {
    if sigma_a.dimension() != sigma_b.dimension() {
        return Err(Error::InvalidArgument(format!(
            "relative entropy of {}x{} and {}x{} covariances",
            sigma_a.dimension(),
            sigma_a.dimension(),
            sigma_b.dimension(),
            sigma_b.dimension()
        )));
    }
    RelativeEntropyReference::new(sigma_b)?.relative_entropy(sigma_a, base)
}

/// The thermal state with the same energy as a given state.
#[derive(Clone, Debug)]
pub struct ThermalFit {
    pub beta: f64,
    pub thermal_entropy: f64,
    pub thermal_sigma: CovarianceMatrix,
}

impl ThermalFit {
    pub fn temperature(&self) -> f64 {
        self.beta.recip()
    }
}

/// `Σ ω_i (Tr σ_i / 2 − 1)`: twice the normal-ordered energy.
///
/// Both energy conventions are affine in this quantity with the same weights, so the
/// equal-energy thermal state does not depend on which one is used.
fn excitation(sigma: &CovarianceMatrix, frequencies: &[f64]) -> Result<f64> {
    if frequencies.len() != sigma.mode_count() {
        return Err(Error::InvalidArgument(format!(
            "{} frequencies for {} modes",
            frequencies.len(),
            sigma.mode_count()
        )));
    }
    if let Some(w) = frequencies.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidArgument(format!("frequencies must be positive, got {w}")));
    }
    let m = sigma.matrix();
    Ok(frequencies
        .iter()
        .enumerate()
        .map(|(k, &w)| w * (0.5 * (m[(2 * k, 2 * k)] + m[(2 * k + 1, 2 * k + 1)]) - 1.0))
        .sum())
}

fn thermal_excitation(frequencies: &[f64], beta: f64) -> f64 {
    frequencies.iter().map(|&w| w * (thermal_nu(w, beta.recip()) - 1.0)).sum()
}

/// Inverse temperature at which the Gibbs state matches the energy of `sigma`.
///
/// Bisection in `log β`; the energy is monotone in temperature.
pub fn effective_temperature(sigma: &CovarianceMatrix, frequencies: &[f64], base: LogBase) -> Result<ThermalFit> {
    let target = excitation(sigma, frequencies)?;
    let vacuum: f64 = frequencies.iter().sum();
    if !(target > 0.0) {
        return Err(Error::NoThermalMatch { energy: target + vacuum, vacuum });
    }
    let w_min = frequencies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = (1e-6 / w_min).ln();
    let mut hi = (1e6 / w_min).ln();
    while thermal_excitation(frequencies, lo.exp()) < target {
        lo -= 10.0f64.ln() * 3.0;
        if lo < -700.0 {
            return Err(Error::DecompositionFailure("thermal bracket expansion failed".into()));
        }
    }
    while thermal_excitation(frequencies, hi.exp()) > target {
        hi += 10.0f64.ln() * 3.0;
        if hi > 700.0 {
            return Err(Error::DecompositionFailure("thermal bracket expansion failed".into()));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let e = thermal_excitation(frequencies, mid.exp());
        if (e - target).abs() <= 1e-13 * target || hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
            lo = mid;
            hi = mid;
            break;
        }
        if e > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = (0.5 * (lo + hi)).exp();
    let thermal_sigma = thermal_state(frequencies, beta.recip())?;
    let nu: Vec<f64> = frequencies.iter().map(|&w| thermal_nu(w, beta.recip())).collect();
    let thermal_entropy = base.scale(nu.iter().map(|&v| entropy_function(v)).sum());
    Ok(ThermalFit { beta, thermal_entropy, thermal_sigma })
}

/// `D(ρ) = S(ρ)/S_th`, the entropy relative to the equal-energy thermal state.
pub fn thermality_estimator(sigma: &CovarianceMatrix, frequencies: &[f64]) -> Result<f64> {
    let fit = match effective_temperature(sigma, frequencies, LogBase::Natural) {
        Ok(fit) => fit,
        Err(Error::NoThermalMatch { .. }) => return Err(Error::UndefinedEstimator),
        Err(e) => return Err(e),
    };
    if fit.thermal_entropy <= 0.0 {
        return Err(Error::UndefinedEstimator);
    }
    let s = von_neumann_entropy(sigma, LogBase::Natural)?;
    Ok(s / fit.thermal_entropy)
}

/// `(S(ρ ‖ ρ_th), S_th − S(ρ))`, two routes to the same number.
pub fn entropy_difference_check(sigma: &CovarianceMatrix, frequencies: &[f64], base: LogBase) -> Result<(f64, f64)> {
    let fit = effective_temperature(sigma, frequencies, base)?;
    let rel = relative_entropy(sigma, &fit.thermal_sigma, base)?;
    let s = von_neumann_entropy(sigma, base)?;
    Ok((rel, fit.thermal_entropy - s))
}

/// `S(ρ ‖ ρ_β) = β(F(ρ) − F(ρ_β))` through free energies of the free Hamiltonian.
pub fn thermal_relative_entropy_free_energy(
    sigma: &CovarianceMatrix,
    frequencies: &[f64],
    temperature: f64,
    base: LogBase,
) -> Result<f64> {
    let thermal = thermal_state(frequencies, temperature)?;
    let beta = temperature.recip();
    // Physical energy Σ ω (n + ½) differs from half the excitation by a constant.
    let de = 0.5 * (excitation(sigma, frequencies)? - excitation(&thermal, frequencies)?);
    let s_a = von_neumann_entropy(sigma, LogBase::Natural)?;
    let nu = symplectic_eigenvalues(&thermal)?;
    let s_b: f64 = nu.iter().map(|&v| entropy_function(v)).sum();
    Ok(base.scale(beta * de - (s_a - s_b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::vacuum_state;
    use approx::assert_abs_diff_eq;

    fn single(nu: f64) -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::from_row_slice(2, 2, &[nu, 0.0, 0.0, nu])).unwrap()
    }

    #[test]
    fn log_density_single_mode() {
        let d = log_density(&single(3.0)).unwrap();
        assert_abs_diff_eq!(d.c, -0.5 * 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.h[(0, 0)], 0.5 * 0.5f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.h[(1, 1)], 0.5 * 0.5f64.ln(), epsilon = 1e-14);
        assert!(d.h[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn log_density_expectation_is_minus_entropy() {
        let t = thermal_state(&[0.5, 1.3, 2.0], 0.9).unwrap();
        let d = log_density(&t).unwrap();
        let s = von_neumann_entropy(&t, LogBase::Natural).unwrap();
        assert_abs_diff_eq!(d.expectation(&t).unwrap(), -s, epsilon = 1e-12);
    }

    #[test]
    fn log_density_diverges_for_pure_reference() {
        assert!(matches!(log_density(&vacuum_state(1).unwrap()), Err(Error::DivergentLogDensity { .. })));
        assert!(matches!(log_density(&single(1.0 + 1e-10)), Err(Error::DivergentLogDensity { .. })));
    }

    #[test]
    fn relative_entropy_of_equal_states_is_zero() {
        assert_abs_diff_eq!(relative_entropy(&single(2.0), &single(2.0), LogBase::Natural).unwrap(), 0.0, epsilon = 1e-14);
        let v = vacuum_state(2).unwrap();
        assert_eq!(relative_entropy(&v, &v, LogBase::Natural).unwrap(), 0.0);
    }

    #[test]
    fn vacuum_against_thermal_matches_free_energy() {
        let thermal = thermal_state(&[1.0], 1.0).unwrap();
        let vac = vacuum_state(1).unwrap();
        let direct = relative_entropy(&vac, &thermal, LogBase::Natural).unwrap();
        let oracle = thermal_relative_entropy_free_energy(&vac, &[1.0], 1.0, LogBase::Natural).unwrap();
        assert_abs_diff_eq!(direct, oracle, epsilon = 1e-8);
        let nu = thermal_nu(1.0, 1.0);
        assert_abs_diff_eq!(direct, ((nu + 1.0) / 2.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn pure_reference_gives_infinity_unless_equal_there() {
        let vac = vacuum_state(1).unwrap();
        assert_eq!(relative_entropy(&single(2.0), &vac, LogBase::Natural).unwrap(), f64::INFINITY);
        // vacuum ⊗ thermal against vacuum ⊗ other thermal: only the mixed mode counts
        let a = vac.direct_sum(&single(2.0));
        let b = vac.direct_sum(&single(3.0));
        let expected = relative_entropy(&single(2.0), &single(3.0), LogBase::Natural).unwrap();
        assert_abs_diff_eq!(relative_entropy(&a, &b, LogBase::Natural).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn effective_temperature_round_trip() {
        let w = [0.4, 1.0, 2.5];
        let t = thermal_state(&w, 0.7).unwrap();
        let fit = effective_temperature(&t, &w, LogBase::Natural).unwrap();
        assert_abs_diff_eq!(fit.temperature(), 0.7, epsilon = 1e-8);
        assert!(matches!(
            effective_temperature(&vacuum_state(1).unwrap(), &[1.0], LogBase::Natural),
            Err(Error::NoThermalMatch { .. })
        ));
    }

    #[test]
    fn squeezed_state_temperature_by_bracketing() {
        let e: f64 = 1.0;
        let sq = CovarianceMatrix::new(DMatrix::from_row_slice(2, 2, &[(2.0 * e).exp(), 0.0, 0.0, (-2.0 * e).exp()])).unwrap();
        let fit = effective_temperature(&sq, &[1.0], LogBase::Natural).unwrap();
        // single mode: the matching ν is the mean of the diagonal
        let nu_target = 0.5 * ((2.0 * e).exp() + (-2.0 * e).exp());
        assert_abs_diff_eq!(thermal_nu(1.0, fit.temperature()), nu_target, epsilon = 1e-10);
        assert!(thermal_nu(1.0, fit.temperature() * 0.99) < nu_target);
        assert!(thermal_nu(1.0, fit.temperature() * 1.01) > nu_target);
        assert_abs_diff_eq!(thermality_estimator(&sq, &[1.0]).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn thermality_limits() {
        let w = [0.3, 0.6];
        let t = thermal_state(&w, 1.5).unwrap();
        assert_abs_diff_eq!(thermality_estimator(&t, &w).unwrap(), 1.0, epsilon = 1e-9);
        assert_eq!(thermality_estimator(&vacuum_state(2).unwrap(), &w), Err(Error::UndefinedEstimator));
    }

    #[test]
    fn entropy_difference_special_cases() {
        let w = [0.8];
        let (rel, diff) = entropy_difference_check(&thermal_state(&w, 2.0).unwrap(), &w, LogBase::Natural).unwrap();
        assert_abs_diff_eq!(rel, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(diff, 0.0, epsilon = 1e-10);
        let sq = CovarianceMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.25])).unwrap();
        let fit = effective_temperature(&sq, &w, LogBase::Natural).unwrap();
        let (rel, diff) = entropy_difference_check(&sq, &w, LogBase::Natural).unwrap();
        assert_abs_diff_eq!(rel, fit.thermal_entropy, epsilon = 1e-8);
        assert_abs_diff_eq!(diff, fit.thermal_entropy, epsilon = 1e-8);
    }

    #[test]
    fn symplectic_inverse_is_inverse() {
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            3.0, 0.2, 0.5, 0.0,
            0.2, 2.0, 0.0, -0.3,
            0.5, 0.0, 2.5, 0.1,
            0.0, -0.3, 0.1, 1.8,
        ]);
        let w = williamson_normal_form(&CovarianceMatrix::new(m).unwrap()).unwrap();
        let s = w.symplectic.matrix();
        let prod = s * symplectic_inverse(s);
        assert!(linalg::max_abs_diff(&prod, &DMatrix::identity(4, 4)) < 1e-12);
    }
}
