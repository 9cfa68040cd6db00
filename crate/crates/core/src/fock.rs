//! Brute-force check of the Gaussian engine in a truncated Fock space.
//!
//! Oscillators are ordered detectors first, then field modes, matching the
//! phase-space layout of [`crate::cavity`]. Each oscillator keeps levels
//! `0..cutoff`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cavity::{mode_amplitude, CavityConfig};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::linalg;

/// Largest Hilbert-space dimension accepted.
pub const MAX_DIMENSION: usize = 100_000;

/// Dimension above which evolution switches from dense diagonalization to Krylov steps.
pub const DENSE_LIMIT: usize = 2000;

/// Largest tolerated population of the top Fock level of any oscillator.
pub const LEAKAGE_TOL: f64 = 1e-6;

pub const MAX_CUTOFF: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct FockConfig {
    /// Physical parameters; at most two field modes.
    pub cavity: CavityConfig,
    /// Levels kept per oscillator.
    pub cutoff: usize,
    /// 1 keeps only the detector at `x1`.
    pub detectors: usize,
}

impl FockConfig {
    pub fn new(cavity: CavityConfig, cutoff: usize, detectors: usize) -> Result<Self> {
        let cfg = FockConfig { cavity, cutoff, detectors };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        if self.cavity.n_field_modes() > 2 {
            return Err(Error::InvalidArgument("the Fock oracle supports at most two field modes".into()));
        }
        if !(2..=MAX_CUTOFF).contains(&self.cutoff) {
            return Err(Error::InvalidArgument(format!("cutoff must lie in 2..={MAX_CUTOFF}, got {}", self.cutoff)));
        }
        if !(1..=2).contains(&self.detectors) {
            return Err(Error::InvalidArgument("one or two detectors".into()));
        }
        let dim = self.dimension_unchecked();
        if dim.is_none_or(|d| d > MAX_DIMENSION) {
            return Err(Error::TooLarge { dim: dim.unwrap_or(usize::MAX), cap: MAX_DIMENSION });
        }
        Ok(())
    }

    pub fn n_oscillators(&self) -> usize {
        self.detectors + self.cavity.n_field_modes()
    }

    fn dimension_unchecked(&self) -> Option<usize> {
        (0..self.n_oscillators()).try_fold(1usize, |acc, _| acc.checked_mul(self.cutoff))
    }

    pub fn dimension(&self) -> usize {
        self.cutoff.pow(self.n_oscillators() as u32)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let mut w = vec![self.cavity.detector_frequency; self.detectors];
        w.extend(self.cavity.modes.iter().map(|&n| self.cavity.wavenumber(n)));
        w
    }
}

/// Real symmetric Hamiltonian in compressed-row form.
#[derive(Clone, Debug)]
pub struct FockHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl FockHamiltonian {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for r in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += v[self.cols[k]] * self.vals[k];
            }
            out[r] = acc;
        }
        out
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    pub fn expectation(&self, v: &DVector<Complex64>) -> f64 {
        v.dotc(&self.apply(v)).re
    }
}

/// Mixed-radix digits of a basis index; oscillator 0 is the slowest digit.
fn levels(mut idx: usize, cutoff: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % cutoff;
        idx /= cutoff;
    }
    out
}

fn strides(cutoff: usize, n: usize) -> Vec<usize> {
    let mut s = vec![1; n];
    for i in (0..n.saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cutoff;
    }
    s
}

/// `H = Σ ω_i a_i†a_i + Σ_{d,n} λ g_dn (a_d + a_d†)(b_n + b_n†)` with
/// `g_dn = sin(k_n x_d)/√(πn)`; the zero-point constant is dropped.
pub fn build_hamiltonian(config: &FockConfig) -> Result<FockHamiltonian> {
    config.validate()?;
    let n_osc = config.n_oscillators();
    let cutoff = config.cutoff;
    let dim = config.dimension();
    let freqs = config.frequencies();
    let stride = strides(cutoff, n_osc);
    let positions = [config.cavity.x1, config.cavity.x2];
    let mut couplings = Vec::new();
    for (d, &x) in positions.iter().enumerate().take(config.detectors) {
        for (m, &n) in config.cavity.modes.iter().enumerate() {
            let g = config.cavity.coupling * mode_amplitude(&config.cavity, n, x);
            if g != 0.0 {
                couplings.push((d, config.detectors + m, g));
            }
        }
    }

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for idx in 0..dim {
        let lv = levels(idx, cutoff, n_osc);
        let diag: f64 = lv.iter().zip(&freqs).map(|(&n, &w)| n as f64 * w).sum();
        let mut row: Vec<(usize, f64)> = vec![(idx, diag)];
        for &(i, j, g) in &couplings {
            // ⟨idx| (a_i + a_i†)(a_j + a_j†) |col⟩ for col differing by ±1 in both i and j
            for di in [-1i64, 1] {
                for dj in [-1i64, 1] {
                    let ni = lv[i] as i64 + di;
                    let nj = lv[j] as i64 + dj;
                    if ni < 0 || nj < 0 || ni >= cutoff as i64 || nj >= cutoff as i64 {
                        continue;
                    }
                    let amp_i = (lv[i].max(ni as usize) as f64).sqrt();
                    let amp_j = (lv[j].max(nj as usize) as f64).sqrt();
                    let col = (idx as i64 + di * stride[i] as i64 + dj * stride[j] as i64) as usize;
                    row.push((col, g * amp_i * amp_j));
                }
            }
        }
        row.sort_by_key(|e| e.0);
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(FockHamiltonian { dim, row_ptr, cols, vals })
}

/// How to evaluate `exp(−iHt)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FockMethod {
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Debug)]
pub struct FockEvolution {
    pub covariance: CovarianceMatrix,
    pub state: DVector<Complex64>,
    /// Largest top-level population over all oscillators.
    pub leakage: f64,
    pub norm: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub method: FockMethod,
}

fn ground_state(dim: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[0] = Complex64::new(1.0, 0.0);
    v
}

fn evolve_dense(h: &FockHamiltonian, psi: &DVector<Complex64>, t: f64) -> Result<DVector<Complex64>> {
    let (e, v) = linalg::symmetric_eigen(&h.dense())?;
    let vc = linalg::to_complex(&v);
    let mut coeffs = vc.adjoint() * psi;
    for (c, &ek) in coeffs.iter_mut().zip(&e) {
        *c *= Complex64::from_polar(1.0, -ek * t);
    }
    Ok(vc * coeffs)
}

const KRYLOV_DIM: usize = 30;

/// One Lanczos step `exp(−iH dt) ψ`, with an a-posteriori error estimate.
fn krylov_step(h: &FockHamiltonian, psi: &DVector<Complex64>, dt: f64) -> Result<(DVector<Complex64>, f64)> {
    let norm = psi.norm();
    let mut basis: Vec<DVector<Complex64>> = vec![psi / Complex64::new(norm, 0.0)];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..KRYLOV_DIM {
        let mut w = h.apply(&basis[j]);
        let a = basis[j].dotc(&w).re;
        w -= &basis[j] * Complex64::new(a, 0.0);
        if j > 0 {
            w -= &basis[j - 1] * Complex64::new(beta[j - 1], 0.0);
        }
        // full reorthogonalization keeps the small basis orthonormal
        for b in &basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
        alpha.push(a);
        let bnorm = w.norm();
        beta.push(bnorm);
        if bnorm < 1e-14 || j + 1 == KRYLOV_DIM {
            break;
        }
        basis.push(w / Complex64::new(bnorm, 0.0));
    }
    let m = alpha.len();
    let tri = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let (e, v) = linalg::symmetric_eigen(&tri)?;
    // exp(−iT dt) e₁
    let mut y = DVector::<Complex64>::zeros(m);
    for k in 0..m {
        let phase = Complex64::from_polar(v[(0, k)], -e[k] * dt);
        for r in 0..m {
            y[r] += phase * v[(r, k)];
        }
    }
    let err = beta[m - 1] * y[m - 1].norm();
    let mut out = DVector::zeros(h.dimension());
    for (r, b) in basis.iter().enumerate().take(m) {
        out += b * y[r];
    }
    Ok((out * Complex64::new(norm, 0.0), err))
}

fn evolve_krylov(h: &FockHamiltonian, psi: &DVector<Complex64>, t: f64) -> Result<DVector<Complex64>> {
    let mut state = psi.clone();
    let mut elapsed = 0.0;
    let mut dt = 0.5_f64.min(t);
    while elapsed < t {
        let step = dt.min(t - elapsed);
        let (next, err) = krylov_step(h, &state, step)?;
        if err > 1e-13 && step > 1e-6 {
            dt = 0.5 * step;
            continue;
        }
        state = next;
        elapsed += step;
    }
    Ok(state)
}

/// Applies `a` or `a†` of oscillator `i`.
fn ladder(psi: &DVector<Complex64>, i: usize, raise: bool, cutoff: usize, n_osc: usize) -> DVector<Complex64> {
    let stride = strides(cutoff, n_osc)[i];
    let mut out = DVector::zeros(psi.len());
    for idx in 0..psi.len() {
        let n = (idx / stride) % cutoff;
        if raise {
            if n + 1 < cutoff {
                out[idx + stride] = psi[idx] * ((n + 1) as f64).sqrt();
            }
        } else if n >= 1 {
            out[idx - stride] = psi[idx] * (n as f64).sqrt();
        }
    }
    out
}

/// `σ_ij = 2 Re⟨x_i ψ | x_j ψ⟩` with `q = (a + a†)/√2`, `p = i(a† − a)/√2`.
pub fn covariance_of(psi: &DVector<Complex64>, cutoff: usize, n_osc: usize) -> Result<CovarianceMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut xs = Vec::with_capacity(2 * n_osc);
    for i in 0..n_osc {
        let lower = ladder(psi, i, false, cutoff, n_osc);
        let raise = ladder(psi, i, true, cutoff, n_osc);
        xs.push((&lower + &raise) * Complex64::new(r, 0.0));
        xs.push((&raise - &lower) * Complex64::new(0.0, r));
    }
    let dim = 2 * n_osc;
    let m = DMatrix::from_fn(dim, dim, |i, j| 2.0 * xs[i].dotc(&xs[j]).re);
    CovarianceMatrix::new(linalg::symmetrize(&m))
}

/// Largest marginal population of the top level over all oscillators.
pub fn top_level_population(psi: &DVector<Complex64>, cutoff: usize, n_osc: usize) -> f64 {
    let st = strides(cutoff, n_osc);
    (0..n_osc)
        .map(|i| {
            psi.iter()
                .enumerate()
                .filter(|(idx, _)| (idx / st[i]) % cutoff == cutoff - 1)
                .map(|(_, a)| a.norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Evolves the all-oscillator ground state for time `t` and returns its covariance.
pub fn evolve_and_covariance(config: &FockConfig, t: f64, method: FockMethod) -> Result<FockEvolution> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("evolution time must be non-negative, got {t}")));
    }
    let h = build_hamiltonian(config)?;
    let psi0 = ground_state(h.dimension());
    let method = match method {
        FockMethod::Auto if h.dimension() <= DENSE_LIMIT => FockMethod::Dense,
        FockMethod::Auto => FockMethod::Krylov,
        m => m,
    };
    let psi = match method {
        FockMethod::Dense => evolve_dense(&h, &psi0, t)?,
        _ => evolve_krylov(&h, &psi0, t)?,
    };
    let n_osc = config.n_oscillators();
    let leakage = top_level_population(&psi, config.cutoff, n_osc);
    if leakage > LEAKAGE_TOL {
        return Err(Error::CutoffTooSmall { leakage });
    }
    Ok(FockEvolution {
        covariance: covariance_of(&psi, config.cutoff, n_osc)?,
        norm: psi.norm(),
        energy_initial: h.expectation(&psi0),
        energy_final: h.expectation(&psi),
        state: psi,
        leakage,
        method,
    })
}

/// Lowest eigenvalue of the truncated Hamiltonian.
pub fn ground_state_energy(config: &FockConfig) -> Result<f64> {
    let h = build_hamiltonian(config)?;
    let (e, _) = linalg::symmetric_eigen(&h.dense())?;
    Ok(e[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small(coupling: f64, cutoff: usize, detectors: usize) -> FockConfig {
        FockConfig::new(CavityConfig::reference(1).with_coupling(coupling), cutoff, detectors).unwrap()
    }

    #[test]
    fn uncoupled_hamiltonian_is_number_operator() {
        let cfg = small(0.0, 4, 2);
        let h = build_hamiltonian(&cfg).unwrap().dense();
        let w = cfg.frequencies();
        for idx in 0..cfg.dimension() {
            let lv = levels(idx, 4, 3);
            let expected: f64 = lv.iter().zip(&w).map(|(&n, &w)| n as f64 * w).sum();
            assert_abs_diff_eq!(h[(idx, idx)], expected, epsilon = 1e-14);
        }
        assert_eq!(linalg::max_abs(&(&h - DMatrix::from_diagonal(&h.diagonal()))), 0.0);
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let cfg = small(0.3, 5, 2);
        let h = build_hamiltonian(&cfg).unwrap().dense();
        assert!(linalg::asymmetry(&h) < 1e-12);
    }

    #[test]
    fn ground_shift_matches_second_order() {
        let lambda = 0.01;
        let cfg = small(lambda, 6, 1);
        let e0 = ground_state_energy(&cfg).unwrap();
        let g = lambda * mode_amplitude(&cfg.cavity, 1, cfg.cavity.x1);
        let w = cfg.cavity.wavenumber(1);
        let expected = -g * g / (cfg.cavity.detector_frequency + w);
        assert!((e0 / expected - 1.0).abs() < 0.05, "{e0} vs {expected}");
    }

    #[test]
    fn zero_time_is_vacuum() {
        let ev = evolve_and_covariance(&small(0.01, 4, 2), 0.0, FockMethod::Auto).unwrap();
        assert!(linalg::max_abs_diff(ev.covariance.matrix(), &DMatrix::identity(6, 6)) < 1e-14);
    }

    #[test]
    fn too_large_rejected() {
        let cav = CavityConfig::reference(2);
        assert!(matches!(FockConfig::new(cav, 20, 2), Err(Error::TooLarge { .. })));
        assert!(FockConfig::new(CavityConfig::reference(3), 3, 2).is_err());
    }

    #[test]
    fn strong_coupling_low_cutoff_leaks() {
        let cfg = small(0.5, 2, 2);
        assert!(matches!(evolve_and_covariance(&cfg, 20.0, FockMethod::Auto), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn dense_and_krylov_agree() {
        let cfg = small(0.05, 6, 2);
        let a = evolve_and_covariance(&cfg, 5.0, FockMethod::Dense).unwrap();
        let b = evolve_and_covariance(&cfg, 5.0, FockMethod::Krylov).unwrap();
        let diff = (&a.state - &b.state).norm();
        assert!(diff < 1e-10, "{diff} {} {}", a.norm, b.norm);
    }
}
