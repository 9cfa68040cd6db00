//! The farming protocol: inject ground-state detectors, evolve for one cycle, discard
//! the detectors, repeat.

use nalgebra::{DMatrix, Matrix4};

use crate::cavity::{mode_frequencies, CavityConfig, DETECTOR_DIMS};
use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::gaussian::{
    log_det, log_negativity, thermal_state, vacuum_state, CovarianceMatrix, EnergyConvention, LogBase, TwoModeState,
};
use crate::linalg;
use crate::thermo::{thermality_estimator, RelativeEntropyReference};

/// Blocks of a cycle propagator `S = [[A, B], [C, D]]`, detectors first.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleBlocks {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl CycleBlocks {
    pub fn detector_dims(&self) -> usize {
        self.a.nrows()
    }

    pub fn field_dims(&self) -> usize {
        self.d.nrows()
    }

    pub fn reassemble(&self) -> DMatrix<f64> {
        let (p, q) = (self.detector_dims(), self.field_dims());
        let mut s = DMatrix::zeros(p + q, p + q);
        s.view_mut((0, 0), (p, p)).copy_from(&self.a);
        s.view_mut((0, p), (p, q)).copy_from(&self.b);
        s.view_mut((p, 0), (q, p)).copy_from(&self.c);
        s.view_mut((p, p), (q, q)).copy_from(&self.d);
        s
    }

    /// The inhomogeneous term `C Cᵀ` of the field map.
    pub fn cct(&self) -> DMatrix<f64> {
        let mut q = &self.c * self.c.transpose();
        linalg::symmetrize_in_place(&mut q);
        q
    }

    pub fn for_config(config: &CavityConfig) -> Result<Self> {
        block_decompose(Propagator::for_config(config)?.matrix(), DETECTOR_DIMS)
    }
}

pub fn block_decompose(s: &DMatrix<f64>, detector_dims: usize) -> Result<CycleBlocks> {
    if !s.is_square() || s.nrows() < detector_dims + 2 || detector_dims == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot split {}x{} propagator with {} detector dimensions",
            s.nrows(),
            s.ncols(),
            detector_dims
        )));
    }
    let p = detector_dims;
    let q = s.nrows() - p;
    Ok(CycleBlocks {
        a: s.view((0, 0), (p, p)).clone_owned(),
        b: s.view((0, p), (p, q)).clone_owned(),
        c: s.view((p, 0), (q, p)).clone_owned(),
        d: s.view((p, p), (q, q)).clone_owned(),
    })
}

fn check_field(sigma_f: &CovarianceMatrix, blocks: &CycleBlocks) -> Result<()> {
    if sigma_f.dimension() != blocks.field_dims() {
        return Err(Error::InvalidArgument(format!(
            "field covariance is {}-dimensional, propagator field block is {}",
            sigma_f.dimension(),
            blocks.field_dims()
        )));
    }
    Ok(())
}

/// `σ_f ↦ D σ_f Dᵀ + C Cᵀ`: one cycle with ground-state detectors.
pub fn superoperator_step(sigma_f: &CovarianceMatrix, blocks: &CycleBlocks) -> Result<CovarianceMatrix> {
    check_field(sigma_f, blocks)?;
    Ok(step_with(sigma_f.matrix(), &blocks.d, &blocks.cct()))
}

fn step_with(sigma: &DMatrix<f64>, d: &DMatrix<f64>, cct: &DMatrix<f64>) -> CovarianceMatrix {
    let mut out = linalg::congruence(d, sigma);
    out += cct;
    CovarianceMatrix::from_symmetric(out)
}

/// Blocks of the joint state at the end of a cycle.
#[derive(Clone, Debug)]
pub struct CycleOutput {
    pub sigma_d: CovarianceMatrix,
    pub gamma_df: DMatrix<f64>,
    pub sigma_f: CovarianceMatrix,
}

/// `S (σ_d ⊕ σ_f) Sᵀ`, split into detector, correlation and field blocks.
pub fn full_cycle(
    sigma_f: &CovarianceMatrix,
    sigma_d0: &CovarianceMatrix,
    blocks: &CycleBlocks,
) -> Result<CycleOutput> {
    check_field(sigma_f, blocks)?;
    if sigma_d0.dimension() != blocks.detector_dims() {
        return Err(Error::InvalidArgument(format!(
            "detector covariance is {}-dimensional, expected {}",
            sigma_d0.dimension(),
            blocks.detector_dims()
        )));
    }
    let (sd, sf) = (sigma_d0.matrix(), sigma_f.matrix());
    let a_sd = &blocks.a * sd;
    let b_sf = &blocks.b * sf;
    let c_sd = &blocks.c * sd;
    let d_sf = &blocks.d * sf;
    let mut out_d = &a_sd * blocks.a.transpose() + &b_sf * blocks.b.transpose();
    let gamma = &a_sd * blocks.c.transpose() + &b_sf * blocks.d.transpose();
    let mut out_f = &c_sd * blocks.c.transpose() + &d_sf * blocks.d.transpose();
    linalg::symmetrize_in_place(&mut out_d);
    linalg::symmetrize_in_place(&mut out_f);
    Ok(CycleOutput {
        sigma_d: CovarianceMatrix::from_symmetric(out_d),
        gamma_df: gamma,
        sigma_f: CovarianceMatrix::from_symmetric(out_f),
    })
}

/// Initial preparation of the cavity field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialField {
    Vacuum,
    Thermal { temperature: f64 },
}

impl InitialField {
    pub fn covariance(&self, config: &CavityConfig) -> Result<CovarianceMatrix> {
        match *self {
            InitialField::Vacuum => vacuum_state(config.n_field_modes()),
            InitialField::Thermal { temperature } => thermal_state(&mode_frequencies(config), temperature),
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialField::Vacuum => "vacuum".into(),
            InitialField::Thermal { temperature } => format!("thermal T={temperature}"),
        }
    }
}

/// Which cycles keep a copy of the field covariance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SnapshotStride {
    /// Cycles 1, 2, 4, 8, … and the last cycle.
    #[default]
    Geometric,
    Every(usize),
    Never,
}

impl SnapshotStride {
    pub fn keeps(&self, cycle: usize, last: usize) -> bool {
        match *self {
            SnapshotStride::Geometric => cycle.is_power_of_two() || cycle == last,
            SnapshotStride::Every(n) => n > 0 && (cycle.is_multiple_of(n) || cycle == last),
            SnapshotStride::Never => false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub snapshots: SnapshotStride,
    pub thermality: bool,
    /// Relative entropy of each field state to this reference.
    pub reference: Option<CovarianceMatrix>,
    pub log_base: LogBase,
    pub energy_convention: EnergyConvention,
    pub keep_correlations: bool,
}

/// Diagnostics after cycle `k`, which starts from σ_f^(k−1) and leaves σ_f^(k).
#[derive(Clone, Debug)]
pub struct CycleRecord {
    pub cycle: usize,
    pub sigma_d: Matrix4<f64>,
    pub log_negativity: f64,
    /// Free energy at the end of the cycle minus free energy at its start.
    pub energy_input: f64,
    pub field_purity: f64,
    pub thermality: Option<f64>,
    pub relative_entropy: Option<f64>,
    pub snapshot: Option<CovarianceMatrix>,
    pub gamma_df: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub fingerprint: u64,
    pub initial: String,
    pub records: Vec<CycleRecord>,
    pub final_field: CovarianceMatrix,
}

impl Trajectory {
    pub fn negativities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.log_negativity).collect()
    }
}

fn block_energy(m: &DMatrix<f64>, freqs: &[f64], convention: EnergyConvention) -> f64 {
    freqs
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let tr = m[(2 * k, 2 * k)] + m[(2 * k + 1, 2 * k + 1)];
            match convention {
                EnergyConvention::HalfTrace => 0.5 * w * tr,
                EnergyConvention::NormalOrdered => 0.25 * w * (tr - 2.0),
            }
        })
        .sum()
}

/// Runs the protocol for `n_cycles` cycles with detectors prepared in `sigma_d0`.
pub fn run_cycles(
    config: &CavityConfig,
    blocks: &CycleBlocks,
    sigma_f0: &CovarianceMatrix,
    sigma_d0: &CovarianceMatrix,
    n_cycles: usize,
    options: &RunOptions,
) -> Result<Trajectory> {
    if n_cycles == 0 {
        return Err(Error::InvalidArgument("n_cycles must be at least 1".into()));
    }
    if blocks.field_dims() != 2 * config.n_field_modes() {
        return Err(Error::InvalidArgument("propagator blocks do not match the configuration".into()));
    }
    check_field(sigma_f0, blocks)?;
    let field_freqs = mode_frequencies(config);
    let det_freqs = [config.detector_frequency; 2];
    let reference = options.reference.as_ref().map(RelativeEntropyReference::new).transpose()?;
    let ground = sigma_d0.matrix() == &DMatrix::identity(DETECTOR_DIMS, DETECTOR_DIMS);
    let cct = blocks.cct();
    let e_d0 = block_energy(sigma_d0.matrix(), &det_freqs, options.energy_convention);

    let mut field = sigma_f0.clone();
    let mut e_f = block_energy(field.matrix(), &field_freqs, options.energy_convention);
    let mut records = Vec::with_capacity(n_cycles);
    for k in 1..=n_cycles {
        let record = (|| -> Result<(CycleRecord, CovarianceMatrix)> {
            let (sigma_d, gamma_df, next) = if ground {
                // σ_d' = A Aᵀ + B σ_f Bᵀ, σ_f' = D σ_f Dᵀ + C Cᵀ
                let b_sf = &blocks.b * field.matrix();
                let mut sd = &blocks.a * blocks.a.transpose() + &b_sf * blocks.b.transpose();
                linalg::symmetrize_in_place(&mut sd);
                let gamma = options
                    .keep_correlations
                    .then(|| blocks.a.clone() * blocks.c.transpose() + &b_sf * blocks.d.transpose());
                (CovarianceMatrix::from_symmetric(sd), gamma, step_with(field.matrix(), &blocks.d, &cct))
            } else {
                let out = full_cycle(&field, sigma_d0, blocks)?;
                (out.sigma_d, options.keep_correlations.then_some(out.gamma_df), out.sigma_f)
            };
            let two = TwoModeState::from_covariance(&sigma_d)?;
            let e_n = log_negativity(&two, options.log_base)?;
            let e_f_next = block_energy(next.matrix(), &field_freqs, options.energy_convention);
            let e_d_next = block_energy(sigma_d.matrix(), &det_freqs, options.energy_convention);
            let energy_input = (e_d_next + e_f_next) - (e_d0 + e_f);
            let field_purity = (-0.5 * log_det(&next)?).exp();
            let thermality = if options.thermality {
                match thermality_estimator(&next, &field_freqs) {
                    Ok(v) => Some(v),
                    Err(Error::UndefinedEstimator) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let relative_entropy =
                reference.as_ref().map(|r| r.relative_entropy(&next, options.log_base)).transpose()?;
            let m = sigma_d.matrix();
            let record = CycleRecord {
                cycle: k,
                sigma_d: Matrix4::from_fn(|i, j| m[(i, j)]),
                log_negativity: e_n,
                energy_input,
                field_purity,
                thermality,
                relative_entropy,
                snapshot: options.snapshots.keeps(k, n_cycles).then(|| next.clone()),
                gamma_df,
            };
            Ok((record, next))
        })()
        .map_err(|e| e.at_cycle(k))?;
        let (record, next) = record;
        e_f = block_energy(next.matrix(), &field_freqs, options.energy_convention);
        field = next;
        records.push(record);
    }
    Ok(Trajectory { fingerprint: config.fingerprint(), initial: String::new(), records, final_field: field })
}

/// Convenience wrapper: ground-state detectors and a named initial field.
pub fn run_protocol(
    config: &CavityConfig,
    initial: InitialField,
    n_cycles: usize,
    options: &RunOptions,
) -> Result<Trajectory> {
    let blocks = CycleBlocks::for_config(config)?;
    let sigma_f0 = initial.covariance(config)?;
    let mut t = run_cycles(config, &blocks, &sigma_f0, &vacuum_state(2)?, n_cycles, options)?;
    t.initial = initial.label();
    Ok(t)
}

/// `n` applications of the ground-state field map.
pub fn iterate_superoperator(sigma_f: &CovarianceMatrix, blocks: &CycleBlocks, n: usize) -> Result<CovarianceMatrix> {
    check_field(sigma_f, blocks)?;
    let cct = blocks.cct();
    let mut field = sigma_f.clone();
    for _ in 0..n {
        field = step_with(field.matrix(), &blocks.d, &cct);
    }
    Ok(field)
}
