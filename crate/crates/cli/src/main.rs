use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use farming_cli::config::{Base, ExperimentConfig, GridScale, SweepParameter};
use farming_cli::experiments::{fixed_point_cmd, run_cycles_cmd, short_cycle_cmd, spectrum_cmd, sweep_cmd};
use farming_cli::figures::reproduce;
use farming_cli::output::{ensure_dir, Table};
use farming_cli::verify::run_checks;
use farming_cli::CliError;
use farming_core::spectral::FixedPointMethod;

/// Entanglement farming experiments. Config values may also be set through
/// FARM_<SECTION>_<KEY> environment variables, e.g. FARM_CAVITY_COUPLING=0.02.
#[derive(Parser)]
#[command(name = "farm", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel grid points.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    log_base: Option<Base>,
    /// Keep field modes 1..=M.
    #[arg(long, global = true)]
    modes: Option<u32>,
    /// Keep only modes with |ω_n − Ω| < W.
    #[arg(long, global = true)]
    window: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Kronecker,
    Stein,
}

#[derive(Subcommand)]
enum Command {
    /// Per-cycle negativity, energy, purity and thermality.
    RunCycles {
        #[arg(long)]
        cycles: Option<usize>,
        /// Initial field temperature; 0 is the vacuum.
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Stationary field state and the negativity it gives each pair.
    FixedPoint {
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
    },
    /// Eigenvalues of the one-cycle field map.
    Spectrum,
    /// Critical cycle counts over a parameter grid.
    Sweep {
        #[arg(long, value_enum)]
        parameter: Option<SweepParameter>,
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, value_enum)]
        scale: Option<GridScale>,
    },
    /// Runs with the cycle time a multiple of the detector separation.
    ShortCycle {
        #[arg(long, value_delimiter = ',')]
        multiples: Option<Vec<f64>>,
        #[arg(long)]
        cycles: Option<usize>,
    },
    /// Data and gnuplot script for one figure.
    ReproduceFig { name: String },
    /// Checks against the truncated-Fock oracle.
    Verify,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(b) = cli.log_base {
        cfg.run.log_base = b;
    }
    if let Some(m) = cli.modes {
        cfg.modes.count = Some(m);
    }
    if let Some(w) = cli.window {
        cfg.modes.window = Some(w);
    }
    match &cli.command {
        Command::RunCycles { cycles, temperature } => {
            cfg.run.n_cycles = cycles.unwrap_or(cfg.run.n_cycles);
            cfg.initial.temperature = temperature.unwrap_or(cfg.initial.temperature);
        }
        Command::Sweep { parameter, min, max, points, scale } => {
            let s = &mut cfg.sweep;
            s.parameter = parameter.unwrap_or(s.parameter);
            s.min = min.unwrap_or(s.min);
            s.max = max.unwrap_or(s.max);
            s.points = points.unwrap_or(s.points);
            s.scale = scale.unwrap_or(s.scale);
        }
        Command::ShortCycle { multiples, cycles } => {
            if let Some(m) = multiples {
                cfg.short_cycle.multiples = m.clone();
            }
            cfg.run.n_cycles = cycles.unwrap_or(cfg.run.n_cycles);
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &std::path::Path, file: &str, table: &Table) -> Result<(), CliError> {
    let path = dir.join(file);
    table.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load(&cli)?;
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let dir = ensure_dir(&cfg.output.dir)?;
    match &cli.command {
        Command::RunCycles { .. } => {
            let report = run_cycles_cmd(&cfg)?;
            write(&dir, "trajectory.csv", &report.table())?;
            let snaps = report.snapshots();
            if !snaps.is_empty() {
                let sd = ensure_dir(&dir.join("snapshots"))?;
                for (k, t) in snaps {
                    t.write(&sd.join(format!("cycle_{k}.csv")))?;
                }
            }
            if !report.has_fixed_point {
                eprintln!("warning: no physical fixed point; relative_entropy_to_fixed_point left empty");
            }
        }
        Command::FixedPoint { method } => {
            let method = match method {
                Method::Auto => FixedPointMethod::Auto,
                Method::Kronecker => FixedPointMethod::Kronecker,
                Method::Stein => FixedPointMethod::Stein,
            };
            let report = fixed_point_cmd(&cfg, method)?;
            write(&dir, "fixed_point.csv", &report.table())?;
            write(&dir, "fixed_point_covariance.csv", &report.covariance_table())?;
            println!("log_negativity at fixed point: {}", report.log_negativity);
        }
        Command::Spectrum => {
            let (spectrum, table) = spectrum_cmd(&cfg)?;
            write(&dir, "spectrum.csv", &table)?;
            let ts = spectrum.timescales();
            println!("max modulus {}", spectrum.max_modulus());
            if let Some(n) = ts.instability {
                println!("instability after ~{n:.4e} cycles");
            }
            if let Some(n) = ts.convergence {
                println!("convergence within ~{n:.4e} cycles");
            }
        }
        Command::Sweep { .. } => {
            let report = sweep_cmd(&cfg)?;
            for r in report.rows.iter().filter(|r| r.failure.is_some()) {
                eprintln!("warning: {} = {} failed: {}", report.parameter, r.parameter, r.failure.as_deref().unwrap_or(""));
            }
            write(&dir, "sweep.csv", &report.table())?;
        }
        Command::ShortCycle { .. } => {
            let report = short_cycle_cmd(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            write(&dir, "short_cycle.csv", &report.table())?;
        }
        Command::ReproduceFig { name } => {
            let fig = reproduce(name, &cfg)?;
            write(&dir, &format!("{}.csv", fig.name), &fig.data)?;
            let gp = dir.join(format!("{}.gp", fig.name));
            std::fs::write(&gp, &fig.script).map_err(CliError::io(format!("cannot write {}", gp.display())))?;
            println!("wrote {}", gp.display());
        }
        Command::Verify => {
            let checks = run_checks();
            let mut t = Table::new(&["check", "passed", "detail"]);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                t.push(vec![c.name.into(), c.passed.to_string(), c.detail.clone()]);
            }
            write(&dir, "verify.csv", &t)?;
            if let Some(c) = checks.iter().find(|c| !c.passed) {
                return Err(farming_core::Error::InvalidState(format!("oracle check {} failed", c.name)).into());
            }
        }
    }
    Ok(())
}

/// Some OpenBLAS builds select broken kernels on recent CPUs; restart once with a
/// known-good core type if the backend fails its self-check.
#[cfg(unix)]
fn ensure_lapack_backend() {
    use std::os::unix::process::CommandExt;
    const VAR: &str = "OPENBLAS_CORETYPE";
    if std::env::var_os(VAR).is_some() || farming_core::linalg::lapack_self_check().is_ok() {
        return;
    }
    if let Ok(exe) = std::env::current_exe() {
        let err = std::process::Command::new(exe).args(std::env::args_os().skip(1)).env(VAR, "Haswell").exec();
        eprintln!("warning: could not restart with {VAR}=Haswell: {err}");
    }
}

#[cfg(not(unix))]
fn ensure_lapack_backend() {}

fn main() -> ExitCode {
    ensure_lapack_backend();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
