//! Zero-mean Gaussian states in the covariance-matrix picture.
//!
//! Covariances are vacuum-normalized, `σ_ij = ⟨x_i x_j + x_j x_i⟩`, so the vacuum is the
//! identity and every symplectic eigenvalue of a physical state is at least one.

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on `ν ≥ 1` and on symmetry checks.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Relative mismatch allowed between the `+ν` and `−ν` halves of the iΩσ spectrum.
const PAIRING_TOL: f64 = 1e-8;

/// Logarithm used by entropies, negativity and relative entropy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    /// Converts a natural logarithm into this base.
    pub fn scale(self, natural: f64) -> f64 {
        match self {
            LogBase::Natural => natural,
            LogBase::Two => natural / std::f64::consts::LN_2,
        }
    }

    pub fn log(self, x: f64) -> f64 {
        self.scale(x.ln())
    }
}

/// Which additive and multiplicative constants the energy functional carries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnergyConvention {
    /// `E = Σ (ω_i/2) Tr σ_i`; the vacuum has energy `Σ ω_i`.
    #[default]
    HalfTrace,
    /// `E = Σ ω_i (Tr σ_i − 2)/4`, the mean number of quanta weighted by frequency.
    NormalOrdered,
}

/// The block-diagonal symplectic form `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        SymplecticForm { n_modes, matrix: linalg::symplectic_form(n_modes) }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Real symmetric `2N × 2N` covariance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

fn check_even_square(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "phase-space dimension must be even and positive, got {}",
            m.nrows()
        )));
    }
    Ok(())
}

impl CovarianceMatrix {
    /// Wraps a matrix after checking shape and symmetry; the result is symmetrized exactly.
    ///
    /// Physicality (`ν ≥ 1`) is not checked here; see [`CovarianceMatrix::validate`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_even_square(&m)?;
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("covariance has non-finite entries".into()));
        }
        let scale = linalg::max_abs(&m).max(1.0);
        let asym = linalg::asymmetry(&m);
        if asym > VALIDITY_TOL * scale {
            return Err(Error::InvalidArgument(format!("covariance is not symmetric (max |σ-σᵀ| = {asym:e})")));
        }
        let mut m = m;
        linalg::symmetrize_in_place(&mut m);
        Ok(CovarianceMatrix(m))
    }

    /// Wraps a matrix that is symmetric by construction.
    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        debug_assert!(m.is_square() && m.nrows().is_multiple_of(2));
        CovarianceMatrix(m)
    }

    /// Like [`CovarianceMatrix::new`] but also requires every `ν ≥ 1 − tol`.
    pub fn physical(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let cov = Self::new(m)?;
        cov.validate(tol)?;
        Ok(cov)
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn mode_count(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// The 2 × 2 block between modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let b = self.0.fixed_view::<2, 2>(2 * i, 2 * j);
        Matrix2::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)])
    }

    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        CovarianceMatrix(linalg::direct_sum(&self.0, &other.0))
    }

    /// Checks the uncertainty principle, returning the smallest symplectic eigenvalue.
    pub fn validate(&self, tol: f64) -> Result<f64> {
        let nu = symplectic_eigenvalues(self)?;
        let min = nu.last().copied().unwrap_or(1.0);
        if min < 1.0 - tol {
            return Err(Error::InvalidState(format!("symplectic eigenvalue {min} violates ν ≥ 1")));
        }
        Ok(min)
    }
}

/// Real `2N × 2N` matrix preserving `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix(DMatrix<f64>);

impl SymplecticMatrix {
    /// Accepts `s` when `‖SΩSᵀ − Ω‖∞ ≤ tol`.
    pub fn new(s: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_even_square(&s)?;
        let violation = check_symplectic(&s)?;
        if violation > tol {
            return Err(Error::InvalidArgument(format!("matrix is not symplectic (violation {violation:e})")));
        }
        Ok(SymplecticMatrix(s))
    }

    pub(crate) fn new_unchecked(s: DMatrix<f64>) -> Self {
        SymplecticMatrix(s)
    }

    pub fn identity(n_modes: usize) -> Self {
        SymplecticMatrix(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    pub fn mode_count(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `S σ Sᵀ`.
    pub fn act(&self, sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        if sigma.dimension() != self.0.nrows() {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: symplectic {} vs covariance {}",
                self.0.nrows(),
                sigma.dimension()
            )));
        }
        Ok(CovarianceMatrix(linalg::congruence(&self.0, &sigma.0)))
    }
}

/// A two-mode state split into its local blocks and the correlation block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeState {
    pub sigma1: Matrix2<f64>,
    pub sigma2: Matrix2<f64>,
    pub gamma12: Matrix2<f64>,
}

impl TwoModeState {
    pub fn new(sigma1: Matrix2<f64>, sigma2: Matrix2<f64>, gamma12: Matrix2<f64>) -> Self {
        TwoModeState { sigma1, sigma2, gamma12 }
    }

    pub fn from_covariance(sigma: &CovarianceMatrix) -> Result<Self> {
        if sigma.mode_count() != 2 {
            return Err(Error::InvalidArgument(format!(
                "two-mode state needs a 4x4 covariance, got {}x{}",
                sigma.dimension(),
                sigma.dimension()
            )));
        }
        Ok(TwoModeState { sigma1: sigma.block(0, 0), sigma2: sigma.block(1, 1), gamma12: sigma.block(0, 1) })
    }

    pub fn assemble(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.sigma1);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.sigma2);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.gamma12);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.gamma12.transpose());
        m
    }

    pub fn to_covariance(&self) -> CovarianceMatrix {
        let m = self.assemble();
        CovarianceMatrix(DMatrix::from_fn(4, 4, |i, j| m[(i, j)]))
    }

    pub fn is_product(&self) -> bool {
        self.gamma12 == Matrix2::zeros()
    }
}

pub fn vacuum_state(n_modes: usize) -> Result<CovarianceMatrix> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("vacuum state needs at least one mode".into()));
    }
    Ok(CovarianceMatrix(DMatrix::identity(2 * n_modes, 2 * n_modes)))
}

/// `ν = coth(ω / 2T)`, with `T = 0` giving exactly one.
pub fn thermal_nu(frequency: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let x = frequency / temperature;
    // coth(x/2) = 1 + 2/(e^x − 1)
    1.0 + 2.0 / x.exp_m1()
}

/// Gibbs state of independent oscillators at a common temperature.
pub fn thermal_state(frequencies: &[f64], temperature: f64) -> Result<CovarianceMatrix> {
    if frequencies.is_empty() {
        return Err(Error::InvalidArgument("thermal state needs at least one mode".into()));
    }
    if let Some(w) = frequencies.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidArgument(format!("frequencies must be positive, got {w}")));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be non-negative, got {temperature}")));
    }
    let n = frequencies.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, &w) in frequencies.iter().enumerate() {
        let nu = thermal_nu(w, temperature);
        m[(2 * k, 2 * k)] = nu;
        m[(2 * k + 1, 2 * k + 1)] = nu;
    }
    Ok(CovarianceMatrix(m))
}

/// Output of the Williamson decomposition `σ = S diag(ν₁,ν₁,…) Sᵀ`.
#[derive(Clone, Debug)]
pub struct WilliamsonForm {
    pub symplectic: SymplecticMatrix,
    pub normal_form: CovarianceMatrix,
    /// Symplectic eigenvalues, descending.
    pub nu: Vec<f64>,
}

struct Diagonalization {
    nu: Vec<f64>,
    /// Orthogonal `O` with `Oᵀ (TᵀΩT) O = ⊕ ν_k [[0,1],[-1,0]]`.
    o: DMatrix<f64>,
    /// Cholesky factor `σ = T Tᵀ`.
    t: DMatrix<f64>,
}

fn cholesky_factor(sigma: &CovarianceMatrix) -> Result<DMatrix<f64>> {
    Ok(sigma
        .0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DecompositionFailure("covariance is not positive definite".into()))?
        .unpack())
}

/// `i TᵀΩT`, Hermitian with spectrum `±ν_k`.
fn hermitian_generator(t: &DMatrix<f64>) -> DMatrix<Complex64> {
    let dim = t.nrows();
    let g = t.transpose() * linalg::omega_left(t);
    DMatrix::from_fn(dim, dim, |i, j| Complex64::new(0.0, 0.5 * (g[(i, j)] - g[(j, i)])))
}

/// Indices of the `+ν` half in descending order, after checking the `±` pairing.
fn paired_order(eigenvalues: &[f64]) -> Result<Vec<usize>> {
    let dim = eigenvalues.len();
    let n = dim / 2;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    for k in 0..n {
        let p = eigenvalues[order[k]];
        let m = -eigenvalues[order[dim - 1 - k]];
        if !(p > 0.0) || (p - m).abs() > PAIRING_TOL * p.max(1.0) {
            return Err(Error::DecompositionFailure(format!("symplectic spectrum does not pair: {p} vs {m}")));
        }
    }
    order.truncate(n);
    Ok(order)
}

fn diagonalize(sigma: &CovarianceMatrix) -> Result<Diagonalization> {
    let n = sigma.mode_count();
    let t = cholesky_factor(sigma)?;
    let eig = SymmetricEigen::new(hermitian_generator(&t));
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let positive = paired_order(&values)?;

    let mut o = DMatrix::zeros(2 * n, 2 * n);
    let mut nu = Vec::with_capacity(n);
    let root2 = std::f64::consts::SQRT_2;
    for (k, &idx) in positive.iter().enumerate() {
        // w = u + iv with G u = ν v, G v = −ν u
        let w = eig.eigenvectors.column(idx);
        for r in 0..2 * n {
            o[(r, 2 * k)] = root2 * w[r].im;
            o[(r, 2 * k + 1)] = root2 * w[r].re;
        }
        nu.push(eig.eigenvalues[idx]);
    }
    Ok(Diagonalization { nu, o, t })
}

/// Symplectic eigenvalues sorted descending.
pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let t = cholesky_factor(sigma)?;
    let values: Vec<f64> = hermitian_generator(&t).symmetric_eigenvalues().iter().copied().collect();
    Ok(paired_order(&values)?.into_iter().map(|i| values[i]).collect())
}

pub fn williamson_normal_form(sigma: &CovarianceMatrix) -> Result<WilliamsonForm> {
    let Diagonalization { nu, o, t } = diagonalize(sigma)?;
    let n = nu.len();
    let mut s = t * o;
    for (k, &v) in nu.iter().enumerate() {
        let scale = v.sqrt().recip();
        s.column_mut(2 * k).scale_mut(scale);
        s.column_mut(2 * k + 1).scale_mut(scale);
    }
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for (k, &v) in nu.iter().enumerate() {
        d[(2 * k, 2 * k)] = v;
        d[(2 * k + 1, 2 * k + 1)] = v;
    }
    Ok(WilliamsonForm { symplectic: SymplecticMatrix(s), normal_form: CovarianceMatrix(d), nu })
}

/// `log det σ` through a Cholesky factor; fails when σ is not positive definite.
pub fn log_det(sigma: &CovarianceMatrix) -> Result<f64> {
    let chol = sigma
        .0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidState("covariance is not positive definite".into()))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// `P = 1/√det σ`.
pub fn purity(sigma: &CovarianceMatrix) -> Result<f64> {
    Ok((-0.5 * log_det(sigma)?).exp())
}

/// Entropy of a single mode with symplectic eigenvalue `nu`, natural log.
pub fn entropy_function(nu: f64) -> f64 {
    if nu <= 1.0 {
        return 0.0;
    }
    let a = 0.5 * (nu + 1.0);
    let b = 0.5 * (nu - 1.0);
    a * a.ln() - b * b.ln()
}

pub fn entropy_from_spectrum(nu: &[f64], base: LogBase) -> Result<f64> {
    if let Some(v) = nu.iter().find(|v| **v < 1.0 - VALIDITY_TOL) {
        return Err(Error::InvalidState(format!("symplectic eigenvalue {v} below one")));
    }
    Ok(base.scale(nu.iter().map(|&v| entropy_function(v)).sum()))
}

pub fn von_neumann_entropy(sigma: &CovarianceMatrix, base: LogBase) -> Result<f64> {
    entropy_from_spectrum(&symplectic_eigenvalues(sigma)?, base)
}

/// Reduced state on the given 0-based mode indices, in the given order.
pub fn reduce(sigma: &CovarianceMatrix, modes: &[usize]) -> Result<CovarianceMatrix> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("reduce needs at least one mode".into()));
    }
    let n = sigma.mode_count();
    for (i, &m) in modes.iter().enumerate() {
        if m >= n {
            return Err(Error::InvalidArgument(format!("mode index {m} out of range for {n} modes")));
        }
        if modes[..i].contains(&m) {
            return Err(Error::InvalidArgument(format!("mode index {m} repeated")));
        }
    }
    let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    Ok(CovarianceMatrix(linalg::submatrix(&sigma.0, &idx, &idx)))
}

/// Free-Hamiltonian energy of a state with one frequency per mode.
pub fn energy(sigma: &CovarianceMatrix, frequencies: &[f64], convention: EnergyConvention) -> Result<f64> {
    if frequencies.len() != sigma.mode_count() {
        return Err(Error::InvalidArgument(format!(
            "{} frequencies for {} modes",
            frequencies.len(),
            sigma.mode_count()
        )));
    }
    let m = &sigma.0;
    Ok(frequencies
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let tr = m[(2 * k, 2 * k)] + m[(2 * k + 1, 2 * k + 1)];
            match convention {
                EnergyConvention::HalfTrace => 0.5 * w * tr,
                EnergyConvention::NormalOrdered => 0.25 * w * (tr - 2.0),
            }
        })
        .sum())
}

/// Smaller symplectic eigenvalue of the partially transposed two-mode state.
pub fn partial_transpose_min_nu(state: &TwoModeState) -> Result<f64> {
    let det_full = state.assemble().determinant();
    let delta = state.sigma1.determinant() + state.sigma2.determinant() - 2.0 * state.gamma12.determinant();
    let mut disc = delta * delta - 4.0 * det_full;
    let scale = (delta * delta).max(1.0);
    if disc < 0.0 {
        if disc < -1e-10 * scale {
            return Err(Error::InvalidState(format!("negative partial-transpose discriminant {disc:e}")));
        }
        disc = 0.0;
    }
    if det_full <= 0.0 || delta <= 0.0 {
        return Err(Error::InvalidState("two-mode covariance is not positive definite".into()));
    }
    // 2ν̃₋² = Δ̃ − √disc, written without cancellation
    let nu_sq = 2.0 * det_full / (delta + disc.sqrt());
    Ok(nu_sq.sqrt())
}

/// `E_N = max(0, −log ν̃₋)`.
pub fn log_negativity(state: &TwoModeState, base: LogBase) -> Result<f64> {
    let nu = partial_transpose_min_nu(state)?;
    Ok(base.scale((-nu.ln()).max(0.0)))
}

/// `‖SΩSᵀ − Ω‖∞` as the largest absolute entry.
pub fn check_symplectic(s: &DMatrix<f64>) -> Result<f64> {
    check_even_square(s)?;
    let omega = linalg::symplectic_form(s.nrows() / 2);
    let sos = s * linalg::omega_left(&s.transpose());
    Ok(linalg::max_abs_diff(&sos, &omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(nu_q: f64, nu_p: f64) -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::from_row_slice(2, 2, &[nu_q, 0.0, 0.0, nu_p])).unwrap()
    }

    #[test]
    fn vacuum_basics() {
        assert_eq!(vacuum_state(1).unwrap().matrix(), &DMatrix::identity(2, 2));
        assert_eq!(symplectic_eigenvalues(&vacuum_state(3).unwrap()).unwrap().len(), 3);
        for v in symplectic_eigenvalues(&vacuum_state(3).unwrap()).unwrap() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(purity(&vacuum_state(2).unwrap()).unwrap(), 1.0, epsilon = 1e-15);
        assert!(vacuum_state(0).is_err());
    }

    #[test]
    fn thermal_values() {
        let coth = |x: f64| x.cosh() / x.sinh();
        let t = thermal_state(&[1.0], 1.0).unwrap();
        assert_abs_diff_eq!(t.matrix()[(0, 0)], coth(0.5), epsilon = 1e-13);
        assert_abs_diff_eq!(t.matrix()[(0, 0)], 2.163953, epsilon = 1e-6);
        let hot = thermal_state(&[1.0], 100.0).unwrap().matrix()[(0, 0)];
        assert!((hot / 200.0 - 1.0).abs() < 0.01);
        assert_eq!(thermal_state(&[0.3, 2.0], 0.0).unwrap().matrix(), &DMatrix::identity(4, 4));
        assert!(thermal_state(&[1.0, -1.0], 1.0).is_err());
    }

    #[test]
    fn symplectic_eigenvalues_of_thermal_and_squeezed() {
        let coth = |x: f64| x.cosh() / x.sinh();
        let nu = symplectic_eigenvalues(&thermal_state(&[1.0, 2.0], 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(nu[0], coth(0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(nu[1], coth(1.0), epsilon = 1e-12);
        let r: f64 = 0.7;
        let nu = symplectic_eigenvalues(&single((2.0 * r).exp(), (-2.0 * r).exp())).unwrap();
        assert_abs_diff_eq!(nu[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CovarianceMatrix::new(DMatrix::identity(3, 3)).is_err());
        assert!(CovarianceMatrix::new(DMatrix::zeros(2, 4)).is_err());
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.5;
        assert!(CovarianceMatrix::new(m).is_err());
    }

    #[test]
    fn williamson_identity_and_thermal() {
        let w = williamson_normal_form(&vacuum_state(2).unwrap()).unwrap();
        assert!(check_symplectic(w.symplectic.matrix()).unwrap() < 1e-12);
        assert!(linalg::max_abs_diff(w.normal_form.matrix(), &DMatrix::identity(4, 4)) < 1e-12);
        let t = thermal_state(&[1.0, 3.0], 0.8).unwrap();
        let w = williamson_normal_form(&t).unwrap();
        let back = w.symplectic.act(&w.normal_form).unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), t.matrix()) < 1e-12);
    }

    #[test]
    fn purity_values() {
        assert_abs_diff_eq!(purity(&single(2.0, 2.0)).unwrap(), 0.5, epsilon = 1e-15);
        let nu = thermal_nu(1.0, 1.0);
        // one mode: det σ = ν², so P = 1/ν
        assert_abs_diff_eq!(purity(&single(nu, nu)).unwrap(), 1.0 / nu, epsilon = 1e-14);
        assert_abs_diff_eq!(1.0 / nu, 0.462117, epsilon = 1e-6);
        let bad = CovarianceMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(matches!(purity(&bad), Err(Error::InvalidState(_))));
    }

    #[test]
    fn entropy_values() {
        assert_abs_diff_eq!(von_neumann_entropy(&vacuum_state(2).unwrap(), LogBase::Natural).unwrap(), 0.0);
        let s = von_neumann_entropy(&single(3.0, 3.0), LogBase::Natural).unwrap();
        assert_abs_diff_eq!(s, 2.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(von_neumann_entropy(&single(3.0, 3.0), LogBase::Two).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn thermal_entropy_matches_partition_function() {
        // S = β⟨H⟩ + log Z for a single oscillator, H = ω(n + ½)
        for (w, t) in [(1.0f64, 1.0f64), (0.4, 2.5), (3.0, 0.7)] {
            let beta = 1.0 / t;
            let log_z = -0.5 * beta * w - (-(-beta * w).exp()).ln_1p();
            let n_bar = 1.0 / (beta * w).exp_m1();
            let gibbs = beta * w * (n_bar + 0.5) + log_z;
            let s = von_neumann_entropy(&thermal_state(&[w], t).unwrap(), LogBase::Natural).unwrap();
            assert_abs_diff_eq!(s, gibbs, epsilon = 1e-12);
        }
    }

    #[test]
    fn reduce_blocks() {
        assert_eq!(reduce(&vacuum_state(3).unwrap(), &[1]).unwrap().matrix(), &DMatrix::identity(2, 2));
        let a = single(2.0, 3.0);
        let b = single(5.0, 7.0);
        assert_eq!(reduce(&a.direct_sum(&b), &[0]).unwrap(), a);
        assert_eq!(reduce(&a.direct_sum(&b), &[1]).unwrap(), b);
        assert!(reduce(&a, &[1]).is_err());
        assert!(reduce(&a.direct_sum(&b), &[0, 0]).is_err());
    }

    #[test]
    fn energy_conventions() {
        let vac = vacuum_state(1).unwrap();
        assert_abs_diff_eq!(energy(&vac, &[1.0], EnergyConvention::HalfTrace).unwrap(), 1.0);
        assert_abs_diff_eq!(energy(&vac, &[1.0], EnergyConvention::NormalOrdered).unwrap(), 0.0);
        let t = thermal_state(&[1.0], 1.0).unwrap();
        assert_abs_diff_eq!(energy(&t, &[1.0], EnergyConvention::HalfTrace).unwrap(), 2.163953, epsilon = 1e-6);
        assert!(energy(&vac, &[1.0, 2.0], EnergyConvention::HalfTrace).is_err());
    }

    #[test]
    fn negativity_of_two_mode_squeezed() {
        let r: f64 = 0.4;
        let c = (2.0 * r).cosh();
        let s = (2.0 * r).sinh();
        let state = TwoModeState::new(Matrix2::identity() * c, Matrix2::identity() * c, Matrix2::new(s, 0.0, 0.0, -s));
        assert_abs_diff_eq!(partial_transpose_min_nu(&state).unwrap(), (-2.0 * r).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(log_negativity(&state, LogBase::Natural).unwrap(), 2.0 * r, epsilon = 1e-12);
        let prod = TwoModeState::new(Matrix2::identity(), Matrix2::identity(), Matrix2::zeros());
        assert_eq!(log_negativity(&prod, LogBase::Natural).unwrap(), 0.0);
        let nu = thermal_nu(1.0, 1.0);
        let hot = TwoModeState::new(Matrix2::identity() * nu, Matrix2::identity() * 2.0, Matrix2::zeros());
        assert_eq!(log_negativity(&hot, LogBase::Natural).unwrap(), 0.0);
    }

    #[test]
    fn symplectic_check_values() {
        assert_eq!(check_symplectic(&DMatrix::identity(4, 4)).unwrap(), 0.0);
        let (s, c) = 0.3f64.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        assert!(check_symplectic(&rot).unwrap() < 1e-14);
        let mut p = DMatrix::identity(2, 2);
        p[(0, 0)] += 1e-3;
        let v = check_symplectic(&p).unwrap();
        assert_abs_diff_eq!(v, 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn two_mode_roundtrip() {
        let state = TwoModeState::new(
            Matrix2::new(2.0, 0.1, 0.1, 1.5),
            Matrix2::new(3.0, 0.0, 0.0, 1.0),
            Matrix2::new(0.2, 0.3, -0.1, 0.4),
        );
        assert_eq!(TwoModeState::from_covariance(&state.to_covariance()).unwrap(), state);
        assert!(!state.is_product());
    }
}
