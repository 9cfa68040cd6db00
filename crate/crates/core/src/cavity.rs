//! Dirichlet cavity with two stationary oscillator detectors.
//!
//! Phase-space ordering is `(q_d1, p_d1, q_d2, p_d2, q_1, p_1, …, q_M, p_M)`: the
//! detectors occupy indices 0–3 and the selected field modes follow in the order
//! they appear in [`CavityConfig::modes`].

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default threshold on `|sin(k_n x)|` below which a detector sits on a node.
pub const DECOUPLING_THRESHOLD: f64 = 1e-12;

/// Number of phase-space entries used by the detector pair.
pub const DETECTOR_DIMS: usize = 4;

/// Physical parameters of one farming setup (ħ = c = 1).
#[derive(Clone, Debug, PartialEq)]
pub struct CavityConfig {
    pub length: f64,
    pub detector_frequency: f64,
    /// Shared coupling strength of both detectors.
    pub coupling: f64,
    pub x1: f64,
    pub x2: f64,
    pub cycle_time: f64,
    /// Field mode numbers `n ≥ 1` kept in the truncation, strictly increasing.
    pub modes: Vec<u32>,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self::reference(128)
    }
}

impl CavityConfig {
    /// λ = 0.01, L = 8, Ω = π/8, detectors at L/3 and 2L/3, t_f = 20, modes `1..=n_modes`.
    pub fn reference(n_modes: u32) -> Self {
        let length = 8.0;
        CavityConfig {
            length,
            detector_frequency: PI / 8.0,
            coupling: 0.01,
            x1: length / 3.0,
            x2: 2.0 * length / 3.0,
            cycle_time: 20.0,
            modes: (1..=n_modes).collect(),
        }
    }

    /// Reference parameters truncated to the first five modes, the default window for
    /// fixed-point studies.
    pub fn reference_window() -> Self {
        Self::reference(5)
    }

    pub fn with_mode_count(mut self, n_modes: u32) -> Self {
        self.modes = (1..=n_modes).collect();
        self
    }

    pub fn with_modes(mut self, modes: Vec<u32>) -> Self {
        self.modes = modes;
        self
    }

    /// Keeps modes `n ≤ max_mode` with `|ω_n − Ω| < width`.
    pub fn with_resonant_window(mut self, max_mode: u32, width: f64) -> Self {
        let (length, omega) = (self.length, self.detector_frequency);
        self.modes = (1..=max_mode)
            .filter(|&n| (n as f64 * PI / length - omega).abs() < width)
            .collect();
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_cycle_time(mut self, cycle_time: f64) -> Self {
        self.cycle_time = cycle_time;
        self
    }

    pub fn n_field_modes(&self) -> usize {
        self.modes.len()
    }

    /// Total oscillator count: two detectors plus the field modes.
    pub fn n_total_modes(&self) -> usize {
        self.modes.len() + 2
    }

    /// Detector separation, the light-crossing time between them.
    pub fn separation(&self) -> f64 {
        (self.x2 - self.x1).abs()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("length", self.length)?;
        positive("detector_frequency", self.detector_frequency)?;
        positive("cycle_time", self.cycle_time)?;
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coupling must be non-negative, got {}",
                self.coupling
            )));
        }
        for (name, x) in [("x1", self.x1), ("x2", self.x2)] {
            if !(x > 0.0 && x < self.length) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {x} must lie strictly inside (0, {})",
                    self.length
                )));
            }
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidArgument("at least one field mode is required".into()));
        }
        if self.modes[0] == 0 || self.modes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "mode numbers must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Stable hash of every parameter, used to key cached propagators.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in [self.length, self.detector_frequency, self.coupling, self.x1, self.x2, self.cycle_time] {
            v.to_bits().hash(&mut h);
        }
        self.modes.hash(&mut h);
        h.finish()
    }

    pub fn wavenumber(&self, n: u32) -> f64 {
        n as f64 * PI / self.length
    }
}

/// Index bookkeeping for the phase-space vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeLayout {
    pub n_field_modes: usize,
}

impl ModeLayout {
    pub fn of(config: &CavityConfig) -> Self {
        ModeLayout { n_field_modes: config.n_field_modes() }
    }

    pub fn total_modes(&self) -> usize {
        self.n_field_modes + 2
    }

    pub fn dimension(&self) -> usize {
        2 * self.total_modes()
    }

    /// Position of `q` for the field mode at `position` (0-based in the mode list).
    pub fn field_q(&self, position: usize) -> usize {
        DETECTOR_DIMS + 2 * position
    }

    pub fn field_p(&self, position: usize) -> usize {
        DETECTOR_DIMS + 2 * position + 1
    }

    /// Position of `q` for detector 0 or 1.
    pub fn detector_q(&self, detector: usize) -> usize {
        2 * detector
    }
}

/// Symmetrized quadratic Hamiltonian matrix, `H = ½ xᵀ F_sym x`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    pub f_sym: DMatrix<f64>,
}

impl HamiltonianMatrix {
    pub fn dimension(&self) -> usize {
        self.f_sym.nrows()
    }
}

/// Field frequencies `ω_n = nπ/L` of the selected modes.
pub fn mode_frequencies(config: &CavityConfig) -> Vec<f64> {
    config.modes.iter().map(|&n| config.wavenumber(n)).collect()
}

/// Frequencies of every oscillator in layout order: `(Ω, Ω, ω_1, …)`.
pub fn oscillator_frequencies(config: &CavityConfig) -> Vec<f64> {
    let mut out = vec![config.detector_frequency; 2];
    out.extend(mode_frequencies(config));
    out
}

/// Mode-function amplitude `sin(k_n x)/√(πn)` of mode `n` at `x`.
pub fn mode_amplitude(config: &CavityConfig, n: u32, x: f64) -> f64 {
    (config.wavenumber(n) * x).sin() / (PI * n as f64).sqrt()
}

/// The 4 × 2M detector–field coupling matrix; only q–q entries are nonzero.
pub fn coupling_matrix(config: &CavityConfig) -> DMatrix<f64> {
    let m = config.n_field_modes();
    let mut x = DMatrix::zeros(DETECTOR_DIMS, 2 * m);
    for (pos, &n) in config.modes.iter().enumerate() {
        x[(0, 2 * pos)] = mode_amplitude(config, n, config.x1);
        x[(2, 2 * pos)] = mode_amplitude(config, n, config.x2);
    }
    x
}

/// `F_sym = diag(Ω, Ω, Ω, Ω, ω_1, ω_1, …) + 2λ [[0, X], [Xᵀ, 0]]`.
pub fn hamiltonian_matrix(config: &CavityConfig) -> Result<HamiltonianMatrix> {
    config.validate()?;
    let layout = ModeLayout::of(config);
    let dim = layout.dimension();
    let mut f = DMatrix::zeros(dim, dim);
    for (k, w) in oscillator_frequencies(config).into_iter().enumerate() {
        f[(2 * k, 2 * k)] = w;
        f[(2 * k + 1, 2 * k + 1)] = w;
    }
    let x = coupling_matrix(config) * (2.0 * config.coupling);
    for i in 0..DETECTOR_DIMS {
        for j in 0..x.ncols() {
            let v = x[(i, j)];
            f[(i, DETECTOR_DIMS + j)] = v;
            f[(DETECTOR_DIMS + j, i)] = v;
        }
    }
    Ok(HamiltonianMatrix { f_sym: f })
}

/// Mode numbers at which both detectors sit within `threshold` of a node.
pub fn decoupled_modes(config: &CavityConfig, threshold: f64) -> Vec<u32> {
    config
        .modes
        .iter()
        .copied()
        .filter(|&n| {
            let k = config.wavenumber(n);
            (k * config.x1).sin().abs() < threshold && (k * config.x2).sin().abs() < threshold
        })
        .collect()
}

/// Positions (0-based, in mode-list order) of the decoupled modes.
pub fn decoupled_positions(config: &CavityConfig, threshold: f64) -> Vec<usize> {
    let dec = decoupled_modes(config, threshold);
    config
        .modes
        .iter()
        .enumerate()
        .filter(|(_, n)| dec.contains(n))
        .map(|(p, _)| p)
        .collect()
}
