//! Spectrum, fixed point and long-time behaviour of the affine field map
//! `σ ↦ D σ Dᵀ + C Cᵀ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cavity::{decoupled_positions, CavityConfig, DECOUPLING_THRESHOLD};
use crate::error::{Error, Result};
use crate::farming::CycleBlocks;
use crate::gaussian::{log_negativity, CovarianceMatrix, LogBase, TwoModeState};
use crate::linalg;

/// `||d₁| − 1|` at or below which neither timescale is defined.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

/// `||d_i d_j| − 1|` at or below which the fixed point is not unique.
pub const RESONANCE_TOL: f64 = 1e-10;

/// Cap on `‖Q_k‖∞` in the doubling chain.
pub const GROWTH_CAP: f64 = 1e12;

/// Coupled-mode count above which [`FixedPointMethod::Auto`] picks the Stein solver.
pub const KRONECKER_MAX_MODES: usize = 8;

/// Eigenvalues of `D` sorted by descending modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl FieldSpectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
        FieldSpectrum { eigenvalues }
    }

    pub fn max_modulus(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |z| z.norm())
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.norm()).collect()
    }

    /// Spectrum of the symmetric tensor square, `{d_i d_j : i ≤ j}`.
    pub fn symmetric_product(&self) -> Vec<Complex64> {
        let d = &self.eigenvalues;
        let mut out = Vec::with_capacity(d.len() * (d.len() + 1) / 2);
        for i in 0..d.len() {
            for j in i..d.len() {
                out.push(d[i] * d[j]);
            }
        }
        out
    }

    pub fn timescales(&self) -> Timescales {
        timescales_from_modulus(self.max_modulus())
    }
}

pub fn field_spectrum(blocks: &CycleBlocks) -> Result<FieldSpectrum> {
    Ok(FieldSpectrum::from_eigenvalues(linalg::real_eigenvalues(&blocks.d)?))
}

/// Spectrum of `D` restricted to the given phase-space indices.
pub fn restricted_spectrum(blocks: &CycleBlocks, indices: &[usize]) -> Result<FieldSpectrum> {
    let d = linalg::submatrix(&blocks.d, indices, indices);
    Ok(FieldSpectrum::from_eigenvalues(linalg::real_eigenvalues(&d)?))
}

/// Cycle counts for exponential approach to (or departure from) the fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timescales {
    /// `−1/log|d₁|`, defined when `|d₁| < 1`.
    pub convergence: Option<f64>,
    /// `1/log|d₁|`, defined when `|d₁| > 1`.
    pub instability: Option<f64>,
}

pub fn timescales_from_modulus(modulus: f64) -> Timescales {
    let excess = modulus - 1.0;
    if excess.abs() <= UNIT_MODULUS_TOL {
        return Timescales { convergence: None, instability: None };
    }
    // ln_1p keeps precision for moduli within 1e−7 of one
    let log = excess.ln_1p();
    if excess < 0.0 {
        Timescales { convergence: Some(-1.0 / log), instability: None }
    } else {
        Timescales { convergence: None, instability: Some(1.0 / log) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FixedPointMethod {
    /// Linear system on the symmetric subspace.
    Kronecker,
    /// Schur back-substitution for the Stein equation.
    Stein,
    #[default]
    Auto,
}

#[derive(Clone, Debug)]
pub struct FixedPointResult {
    pub sigma_star: CovarianceMatrix,
    /// `‖D σ* Dᵀ + C Cᵀ − σ*‖∞` on the coupled subspace.
    pub residual: f64,
    /// Phase-space indices of the coupled subspace.
    pub coupled_indices: Vec<usize>,
    /// Field-mode positions treated as free.
    pub decoupled_positions: Vec<usize>,
    pub method: FixedPointMethod,
}

impl FixedPointResult {
    pub fn coupled_dims(&self) -> usize {
        self.coupled_indices.len()
    }
}

/// Solves `Y = D Y Dᵀ + Q` for symmetric `Y` on the `n(n+1)/2` symmetric unknowns.
pub fn solve_stein_kronecker(d: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = d.nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let m = pairs.len();
    let mut system = DMatrix::<f64>::identity(m, m);
    let mut rhs = nalgebra::DVector::zeros(m);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        rhs[row] = q[(i, j)];
        for (col, &(a, b)) in pairs.iter().enumerate() {
            let coeff = if a == b { d[(i, a)] * d[(j, a)] } else { d[(i, a)] * d[(j, b)] + d[(i, b)] * d[(j, a)] };
            system[(row, col)] -= coeff;
        }
    }
    let y = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DecompositionFailure("singular Kronecker system".into()))?;
    let mut out = DMatrix::zeros(n, n);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        out[(i, j)] = y[row];
        out[(j, i)] = y[row];
    }
    Ok(out)
}

/// Solves `Y = D Y Dᵀ + Q` through the complex Schur form `D = U T Uᴴ`.
pub fn solve_stein_schur(d: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = d.nrows();
    let (u, t) = linalg::complex_schur(d)?;
    let qt = u.adjoint() * linalg::to_complex(q) * &u;
    let t_h = t.adjoint();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    let zero = Complex64::new(0.0, 0.0);
    for i in (0..n).rev() {
        // W = Σ_{k>i} T_ik Y_k,:
        let w = if i + 1 < n {
            t.view((i, i + 1), (1, n - i - 1)) * y.view((i + 1, 0), (n - i - 1, n))
        } else {
            nalgebra::DMatrix::<Complex64>::zeros(1, n)
        };
        let r = &w * &t_h;
        let tii = t[(i, i)];
        for j in (0..n).rev() {
            let mut acc = r[(0, j)] + qt[(i, j)];
            let mut inner = zero;
            for l in (j + 1)..n {
                inner += y[(i, l)] * t[(j, l)].conj();
            }
            acc += tii * inner;
            let denom = Complex64::new(1.0, 0.0) - tii * t[(j, j)].conj();
            if denom.norm() <= f64::EPSILON * 16.0 {
                return Err(Error::NoUniqueFixedPoint { product: (tii * t[(j, j)].conj()).norm() });
            }
            y[(i, j)] = acc / denom;
        }
    }
    let full = &u * y * u.adjoint();
    let mut out = full.map(|z| z.re);
    linalg::symmetrize_in_place(&mut out);
    Ok(out)
}

/// Phase-space indices of field modes not listed in `decoupled`.
pub fn coupled_indices(n_field_modes: usize, decoupled: &[usize]) -> Vec<usize> {
    (0..n_field_modes).filter(|p| !decoupled.contains(p)).flat_map(|p| [2 * p, 2 * p + 1]).collect()
}

fn stein_residual(d: &DMatrix<f64>, q: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let r = linalg::congruence(d, y) + q - y;
    linalg::max_abs(&r)
}

/// Non-resonance check: every `|d_i d_j|` must stay away from one.
fn check_resonance(spectrum: &FieldSpectrum) -> Result<()> {
    let moduli = spectrum.moduli();
    for i in 0..moduli.len() {
        for j in i..moduli.len() {
            let p = moduli[i] * moduli[j];
            if (p - 1.0).abs() <= RESONANCE_TOL {
                return Err(Error::NoUniqueFixedPoint { product: p });
            }
        }
    }
    Ok(())
}

/// Stationary field state of the cycle map.
///
/// Decoupled modes keep their blocks from `initial` with no correlations to the rest.
pub fn fixed_point(
    blocks: &CycleBlocks,
    decoupled: &[usize],
    initial: &CovarianceMatrix,
    method: FixedPointMethod,
) -> Result<FixedPointResult> {
    let dim = blocks.field_dims();
    if initial.dimension() != dim {
        return Err(Error::InvalidArgument("initial field state does not match the propagator".into()));
    }
    let n_modes = dim / 2;
    if let Some(&p) = decoupled.iter().find(|&&p| p >= n_modes) {
        return Err(Error::InvalidArgument(format!("decoupled position {p} out of range")));
    }
    let coupled = coupled_indices(n_modes, decoupled);
    if coupled.is_empty() {
        return Err(Error::InvalidArgument("every field mode is decoupled".into()));
    }
    let d = linalg::submatrix(&blocks.d, &coupled, &coupled);
    let q = linalg::submatrix(&blocks.cct(), &coupled, &coupled);
    check_resonance(&FieldSpectrum::from_eigenvalues(linalg::real_eigenvalues(&d)?))?;

    let method = match method {
        FixedPointMethod::Auto if coupled.len() / 2 > KRONECKER_MAX_MODES => FixedPointMethod::Stein,
        FixedPointMethod::Auto => FixedPointMethod::Kronecker,
        m => m,
    };
    let y = match method {
        FixedPointMethod::Kronecker => solve_stein_kronecker(&d, &q)?,
        _ => solve_stein_schur(&d, &q)?,
    };
    let residual = stein_residual(&d, &q, &y);

    let mut sigma = DMatrix::zeros(dim, dim);
    let decoupled_idx: Vec<usize> = decoupled.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect();
    for &i in &decoupled_idx {
        for &j in &decoupled_idx {
            sigma[(i, j)] = initial.matrix()[(i, j)];
        }
    }
    for (a, &i) in coupled.iter().enumerate() {
        for (b, &j) in coupled.iter().enumerate() {
            sigma[(i, j)] = y[(a, b)];
        }
    }
    Ok(FixedPointResult {
        sigma_star: CovarianceMatrix::new(sigma)?,
        residual,
        coupled_indices: coupled,
        decoupled_positions: decoupled.to_vec(),
        method,
    })
}

/// [`fixed_point`] with decoupled modes found from the cavity geometry.
pub fn fixed_point_for_config(
    config: &CavityConfig,
    blocks: &CycleBlocks,
    initial: &CovarianceMatrix,
    method: FixedPointMethod,
) -> Result<FixedPointResult> {
    fixed_point(blocks, &decoupled_positions(config, DECOUPLING_THRESHOLD), initial, method)
}

/// `k`-fold composition of the field map: `σ^(k) = D_k σ^(0) D_kᵀ + Q_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePower {
    pub k: u64,
    pub d: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl AffinePower {
    pub fn identity(dim: usize) -> Self {
        AffinePower { k: 0, d: DMatrix::identity(dim, dim), q: DMatrix::zeros(dim, dim) }
    }

    pub fn single(blocks: &CycleBlocks) -> Self {
        AffinePower { k: 1, d: blocks.d.clone(), q: blocks.cct() }
    }

    /// Applies `other` first, then `self`.
    pub fn after(&self, other: &AffinePower) -> AffinePower {
        let mut q = linalg::congruence(&self.d, &other.q);
        q += &self.q;
        AffinePower { k: self.k + other.k, d: &self.d * &other.d, q }
    }

    pub fn apply(&self, sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        if sigma.dimension() != self.d.nrows() {
            return Err(Error::InvalidArgument("dimension mismatch applying affine power".into()));
        }
        let mut out = linalg::congruence(&self.d, sigma.matrix());
        out += &self.q;
        CovarianceMatrix::new(out)
    }
}

fn over_cap(m: &DMatrix<f64>, cap: f64) -> bool {
    let norm = linalg::max_abs(m);
    !(norm <= cap)
}

/// Maps for `k = 1, 2, 4, …, 2^max_exponent`, truncated at the first one whose
/// `‖Q‖∞` exceeds `cap`. The error reports that `k` when the chain stops short.
pub fn doubling_chain(blocks: &CycleBlocks, max_exponent: u32, cap: f64) -> (Vec<AffinePower>, Option<Error>) {
    let mut chain = vec![AffinePower::single(blocks)];
    for _ in 0..max_exponent {
        let last = chain.last().unwrap();
        let next = last.after(last);
        if over_cap(&next.q, cap) || over_cap(&next.d, cap) {
            return (chain, Some(Error::GrowthOverflow { k: next.k }));
        }
        chain.push(next);
    }
    (chain, None)
}

/// `O(log k)` evaluation of the `k`-fold map by binary doubling.
pub fn power_map(blocks: &CycleBlocks, k: u64) -> Result<AffinePower> {
    power_map_capped(blocks, k, GROWTH_CAP)
}

pub fn power_map_capped(blocks: &CycleBlocks, k: u64, cap: f64) -> Result<AffinePower> {
    if k == 0 {
        return Err(Error::InvalidArgument("power_map needs k ≥ 1".into()));
    }
    let bits = 64 - k.leading_zeros();
    let (chain, overflow) = doubling_chain(blocks, bits - 1, cap);
    if chain.len() < bits as usize {
        return Err(overflow.unwrap_or(Error::GrowthOverflow { k }));
    }
    let mut acc = AffinePower::identity(blocks.field_dims());
    for (bit, step) in chain.iter().enumerate() {
        if k >> bit & 1 == 1 {
            acc = step.after(&acc);
            if over_cap(&acc.q, cap) {
                return Err(Error::GrowthOverflow { k: acc.k });
            }
        }
    }
    Ok(acc)
}

/// One sample of the long-time scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    /// Completed cycles before the sampled detector pair arrives.
    pub k: u64,
    /// Negativity harvested by that pair; `None` once the field state overflowed.
    pub log_negativity: Option<f64>,
    pub max_modulus: f64,
    /// `‖D σ Dᵀ + C Cᵀ − σ‖∞` for the field state after `k` cycles.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExtinctionScan {
    pub points: Vec<ScanPoint>,
    /// Smallest sampled `k` with zero negativity after a positive sample.
    pub extinction_k: Option<u64>,
    pub spectrum: FieldSpectrum,
}

impl ExtinctionScan {
    pub fn spectral_estimate(&self) -> Option<f64> {
        self.spectrum.timescales().instability
    }
}

/// `k = 2^0 … 2^max_exponent`.
pub fn geometric_grid(max_exponent: u32) -> Vec<u64> {
    (0..=max_exponent).map(|e| 1u64 << e).collect()
}

fn sample(
    k: u64,
    chain: &[AffinePower],
    blocks: &CycleBlocks,
    cct: &DMatrix<f64>,
    sigma0: &CovarianceMatrix,
    base: LogBase,
    max_modulus: f64,
) -> Result<ScanPoint> {
    let mut sigma = sigma0.matrix().clone();
    let needed = 64 - k.leading_zeros() as usize;
    if needed > chain.len() {
        return Ok(ScanPoint { k, log_negativity: None, max_modulus, residual: None });
    }
    for (bit, step) in chain.iter().enumerate() {
        if k >> bit & 1 == 1 {
            sigma = linalg::congruence(&step.d, &sigma) + &step.q;
            if over_cap(&sigma, GROWTH_CAP) {
                return Ok(ScanPoint { k, log_negativity: None, max_modulus, residual: None });
            }
        }
    }
    let b_sf = &blocks.b * &sigma;
    let mut sd = &blocks.a * blocks.a.transpose() + &b_sf * blocks.b.transpose();
    linalg::symmetrize_in_place(&mut sd);
    let two = TwoModeState::from_covariance(&CovarianceMatrix::new(sd)?)?;
    let e_n = log_negativity(&two, base)?;
    let residual = stein_residual(&blocks.d, cct, &sigma);
    Ok(ScanPoint { k, log_negativity: Some(e_n), max_modulus, residual: Some(residual) })
}

/// Detector negativity after `k` cycles for every `k` in the grid, from vacuum or any
/// other initial field state, using the doubling chain.
pub fn extinction_scan(
    blocks: &CycleBlocks,
    sigma0: &CovarianceMatrix,
    k_grid: &[u64],
    base: LogBase,
) -> Result<ExtinctionScan> {
    if sigma0.dimension() != blocks.field_dims() {
        return Err(Error::InvalidArgument("initial field state does not match the propagator".into()));
    }
    let mut grid: Vec<u64> = k_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let spectrum = field_spectrum(blocks)?;
    let max_modulus = spectrum.max_modulus();
    let max_k = grid.last().copied().unwrap_or(1).max(1);
    let bits = 64 - max_k.leading_zeros();
    let (chain, _) = doubling_chain(blocks, bits.saturating_sub(1), GROWTH_CAP);
    let cct = blocks.cct();

    let eval = |ks: &[u64]| -> Result<Vec<ScanPoint>> {
        ks.par_iter().map(|&k| sample(k, &chain, blocks, &cct, sigma0, base, max_modulus)).collect()
    };
    let mut points = eval(&grid)?;

    // Overflow right after a positive sample: refine between the two with
    // intermediate k so that extinction is not hidden behind the cap.
    if let Some(idx) = points.iter().position(|p| p.log_negativity.is_none()) {
        if idx > 0 && points[idx - 1].log_negativity.is_some_and(|e| e > 0.0) {
            let (lo, hi) = (points[idx - 1].k as f64, points[idx].k as f64);
            let extra: Vec<u64> = (1..16)
                .map(|i| (lo * (hi / lo).powf(i as f64 / 16.0)).round() as u64)
                .filter(|k| *k > lo as u64 && *k < hi as u64)
                .collect();
            points.extend(eval(&extra)?);
            points.sort_by_key(|p| p.k);
            points.dedup_by_key(|p| p.k);
        }
    }

    let mut seen_positive = false;
    let mut extinction_k = None;
    for p in &points {
        match p.log_negativity {
            Some(e) if e > 0.0 => seen_positive = true,
            Some(_) if seen_positive => {
                extinction_k = Some(p.k);
                break;
            }
            _ => {}
        }
    }
    Ok(ExtinctionScan { points, extinction_k, spectrum })
}
