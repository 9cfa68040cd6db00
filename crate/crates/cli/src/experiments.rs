//! Command implementations. Each returns typed results plus the CSV table written
//! by the binary, so tests can inspect either.

use rayon::prelude::*;

use farming_core::cavity::CavityConfig;
use farming_core::farming::{run_cycles, run_protocol, CycleBlocks, InitialField, RunOptions, Trajectory};
use farming_core::gaussian::{vacuum_state, CovarianceMatrix};
use farming_core::spectral::{
    extinction_scan, field_spectrum, fixed_point_for_config, geometric_grid, ExtinctionScan, FieldSpectrum,
    FixedPointMethod, FixedPointResult,
};
use farming_core::thermo::RelativeEntropyReference;

use crate::config::{ExperimentConfig, ModeDefault, SweepParameter, DEFAULT_MODE_COUNT, DEFAULT_WINDOW};
use crate::error::CliError;
use crate::output::{matrix_table, num, opt, Table};

/// Log-10 critical cycle counts are reported up to this value.
pub const LOG10_CYCLES_CAP: f64 = 12.0;

pub const DYNAMICS_MODES: ModeDefault = ModeDefault::Count(DEFAULT_MODE_COUNT);
pub const FIXED_POINT_MODES: ModeDefault = ModeDefault::Window(DEFAULT_WINDOW);

pub fn run_options(cfg: &ExperimentConfig) -> RunOptions {
    RunOptions {
        snapshots: cfg.run.snapshot_stride.into(),
        thermality: cfg.run.thermality,
        reference: None,
        log_base: cfg.log_base(),
        energy_convention: cfg.run.energy_convention.into(),
        keep_correlations: false,
    }
}

/// Stationary state usable as a relative-entropy reference, if one exists.
fn fixed_point_reference(
    cavity: &CavityConfig,
    blocks: &CycleBlocks,
    initial: &CovarianceMatrix,
) -> Option<CovarianceMatrix> {
    let fp = fixed_point_for_config(cavity, blocks, initial, FixedPointMethod::Auto).ok()?;
    RelativeEntropyReference::new(&fp.sigma_star).ok()?;
    Some(fp.sigma_star)
}

pub struct RunReport {
    pub cavity: CavityConfig,
    pub trajectory: Trajectory,
    pub has_fixed_point: bool,
}

impl RunReport {
    pub fn table(&self) -> Table {
        trajectory_table(&self.trajectory)
    }

    /// Snapshot tables keyed by cycle.
    pub fn snapshots(&self) -> Vec<(usize, Table)> {
        self.trajectory
            .records
            .iter()
            .filter_map(|r| r.snapshot.as_ref().map(|s| (r.cycle, matrix_table(s.matrix()))))
            .collect()
    }
}

pub fn trajectory_table(t: &Trajectory) -> Table {
    let mut table = Table::new(&[
        "cycle",
        "log_negativity",
        "energy_input",
        "field_purity",
        "thermality",
        "relative_entropy_to_fixed_point",
    ]);
    for r in &t.records {
        table.push(vec![
            r.cycle.to_string(),
            num(r.log_negativity),
            num(r.energy_input),
            num(r.field_purity),
            opt(r.thermality),
            opt(r.relative_entropy),
        ]);
    }
    table
}

pub fn run_cycles_cmd(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let cavity = cfg.cavity(DYNAMICS_MODES)?;
    let blocks = CycleBlocks::for_config(&cavity)?;
    let initial = cfg.initial.field();
    let sigma_f0 = initial.covariance(&cavity)?;
    let mut options = run_options(cfg);
    options.reference = fixed_point_reference(&cavity, &blocks, &sigma_f0);
    let has_fixed_point = options.reference.is_some();
    let mut trajectory = run_cycles(&cavity, &blocks, &sigma_f0, &vacuum_state(2)?, cfg.run.n_cycles, &options)?;
    trajectory.initial = initial.label();
    Ok(RunReport { cavity, trajectory, has_fixed_point })
}

pub struct FixedPointReport {
    pub cavity: CavityConfig,
    pub result: FixedPointResult,
    pub spectrum: FieldSpectrum,
    /// Negativity harvested by a fresh pair from the stationary field.
    pub log_negativity: f64,
    pub energy_input: f64,
}

impl FixedPointReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "method",
            "field_modes",
            "coupled_dims",
            "residual",
            "max_modulus",
            "log_negativity",
            "energy_input",
        ]);
        t.push(vec![
            format!("{:?}", self.result.method).to_lowercase(),
            self.cavity.n_field_modes().to_string(),
            self.result.coupled_dims().to_string(),
            num(self.result.residual),
            num(self.spectrum.max_modulus()),
            num(self.log_negativity),
            num(self.energy_input),
        ]);
        t
    }

    pub fn covariance_table(&self) -> Table {
        matrix_table(self.result.sigma_star.matrix())
    }
}

pub fn fixed_point_cmd(cfg: &ExperimentConfig, method: FixedPointMethod) -> Result<FixedPointReport, CliError> {
    let cavity = cfg.cavity(FIXED_POINT_MODES)?;
    let blocks = CycleBlocks::for_config(&cavity)?;
    let initial = cfg.initial.field().covariance(&cavity)?;
    let result = fixed_point_for_config(&cavity, &blocks, &initial, method)?;
    let spectrum = field_spectrum(&blocks)?;
    let options = RunOptions { thermality: false, ..run_options(cfg) };
    let one = run_cycles(&cavity, &blocks, &result.sigma_star, &vacuum_state(2)?, 1, &options)?;
    let r = &one.records[0];
    Ok(FixedPointReport {
        log_negativity: r.log_negativity,
        energy_input: r.energy_input,
        cavity,
        result,
        spectrum,
    })
}

pub fn spectrum_cmd(cfg: &ExperimentConfig) -> Result<(FieldSpectrum, Table), CliError> {
    let cavity = cfg.cavity(DYNAMICS_MODES)?;
    let spectrum = field_spectrum(&CycleBlocks::for_config(&cavity)?)?;
    let mut t = Table::new(&["index", "re", "im", "modulus"]);
    for (i, z) in spectrum.eigenvalues.iter().enumerate() {
        t.push(vec![i.to_string(), num(z.re), num(z.im), num(z.norm())]);
    }
    Ok((spectrum, t))
}

/// `log10` of the instability timescale `1/log|d₁|`, capped; stable and marginal
/// spectra report the cap.
pub fn log10_critical_cycles(max_modulus: f64) -> f64 {
    farming_core::spectral::timescales_from_modulus(max_modulus)
        .instability
        .map_or(LOG10_CYCLES_CAP, |n| n.log10().min(LOG10_CYCLES_CAP))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub parameter: f64,
    pub max_modulus: Option<f64>,
    pub log10_critical_cycles: Option<f64>,
    /// First cycle with positive negativity; temperature sweeps only.
    pub onset_cycle: Option<usize>,
    pub failure: Option<String>,
}

pub struct SweepReport {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn table(&self) -> Table {
        let temperature = self.parameter == SweepParameter::Temperature;
        let mut header = vec!["parameter", "max_modulus", "log10_critical_cycles"];
        if temperature {
            header.push("onset_cycle");
        }
        header.push("failure");
        let mut t = Table::new(&header);
        for r in &self.rows {
            let mut row = vec![num(r.parameter), opt(r.max_modulus), opt(r.log10_critical_cycles)];
            if temperature {
                row.push(r.onset_cycle.map(|c| c.to_string()).unwrap_or_default());
            }
            row.push(r.failure.clone().unwrap_or_default());
            t.push(row);
        }
        t
    }
}

fn sweep_point(base: &CavityConfig, cfg: &ExperimentConfig, parameter: SweepParameter, value: f64) -> SweepRow {
    let mut row = SweepRow { parameter: value, max_modulus: None, log10_critical_cycles: None, onset_cycle: None, failure: None };
    let mut cavity = base.clone();
    match parameter {
        SweepParameter::Lambda => cavity.coupling = value,
        SweepParameter::CycleTime => cavity.cycle_time = value,
        SweepParameter::Temperature => {}
    }
    let outcome = (|| -> farming_core::Result<()> {
        cavity.validate()?;
        let blocks = CycleBlocks::for_config(&cavity)?;
        let m = field_spectrum(&blocks)?.max_modulus();
        row.max_modulus = Some(m);
        row.log10_critical_cycles = Some(log10_critical_cycles(m));
        if parameter == SweepParameter::Temperature {
            let initial = if value == 0.0 { InitialField::Vacuum } else { InitialField::Thermal { temperature: value } };
            let sigma0 = initial.covariance(&cavity)?;
            let options = RunOptions { log_base: cfg.log_base(), ..RunOptions::default() };
            let t = run_cycles(&cavity, &blocks, &sigma0, &vacuum_state(2)?, cfg.run.n_cycles, &options)?;
            row.onset_cycle = t.records.iter().find(|r| r.log_negativity > 0.0).map(|r| r.cycle);
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.failure = Some(e.to_string());
    }
    row
}

/// Grid points run in parallel; rows come back in grid order.
pub fn sweep_cmd(cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
    let base = cfg.cavity(DYNAMICS_MODES)?;
    let grid = cfg.sweep.grid()?;
    let rows = grid.par_iter().map(|&v| sweep_point(&base, cfg, cfg.sweep.parameter, v)).collect();
    Ok(SweepReport { parameter: cfg.sweep.parameter, rows })
}

pub struct ShortCycleCurve {
    pub multiple: f64,
    pub cycle_time: f64,
    pub negativities: Vec<f64>,
}

pub struct ShortCycleReport {
    pub curves: Vec<ShortCycleCurve>,
    pub warnings: Vec<String>,
}

impl ShortCycleReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["multiple", "cycle_time", "cycle", "log_negativity"]);
        for c in &self.curves {
            for (k, e) in c.negativities.iter().enumerate() {
                t.push(vec![num(c.multiple), num(c.cycle_time), (k + 1).to_string(), num(*e)]);
            }
        }
        t
    }
}

/// Runs at `t_f = m · |x₂ − x₁|` for every configured multiple `m`.
pub fn short_cycle_cmd(cfg: &ExperimentConfig) -> Result<ShortCycleReport, CliError> {
    let base = cfg.cavity(DYNAMICS_MODES)?;
    let mut warnings = Vec::new();
    if base.n_field_modes() < cfg.short_cycle.min_modes as usize {
        warnings.push(format!(
            "{} field modes is below the short-cycle floor of {}; results may be truncation-limited",
            base.n_field_modes(),
            cfg.short_cycle.min_modes
        ));
    }
    let options = RunOptions { log_base: cfg.log_base(), ..RunOptions::default() };
    let curves = cfg
        .short_cycle
        .multiples
        .par_iter()
        .map(|&m| {
            let cavity = base.clone().with_cycle_time(m * base.separation());
            let t = run_protocol(&cavity, cfg.initial.field(), cfg.run.n_cycles, &options)?;
            Ok(ShortCycleCurve { multiple: m, cycle_time: cavity.cycle_time, negativities: t.negativities() })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ShortCycleReport { curves, warnings })
}

/// Geometric scan `k = 2^0 … 2^max_exponent` from the configured initial field.
pub fn ultralong_scan(cfg: &ExperimentConfig, max_exponent: u32) -> Result<ExtinctionScan, CliError> {
    let cavity = cfg.cavity(DYNAMICS_MODES)?;
    let blocks = CycleBlocks::for_config(&cavity)?;
    let sigma0 = cfg.initial.field().covariance(&cavity)?;
    Ok(extinction_scan(&blocks, &sigma0, &geometric_grid(max_exponent), cfg.log_base())?)
}

pub fn scan_table(scan: &ExtinctionScan) -> Table {
    let mut t = Table::new(&["k", "log_negativity", "residual"]);
    for p in &scan.points {
        t.push(vec![p.k.to_string(), opt(p.log_negativity), opt(p.residual)]);
    }
    t
}
