//! Data and gnuplot scripts for each figure of the farming study.

use rayon::prelude::*;

use farming_core::farming::{run_cycles, CycleBlocks, CycleRecord, InitialField};
use farming_core::gaussian::vacuum_state;

use crate::config::{ExperimentConfig, GridScale, ModeDefault, SweepParameter, SweepSpec};
use crate::error::CliError;
use crate::experiments::{
    run_options, scan_table, short_cycle_cmd, sweep_cmd, ultralong_scan, DYNAMICS_MODES,
};
use crate::output::{num, opt, Table};

pub const FIGURES: [&str; 8] =
    ["lognegplot", "energyfig", "thermPure", "thermality", "ultralong", "eigcoupling", "eigtime", "extinction"];

/// Largest power of two sampled by the ultralong scan.
pub const ULTRALONG_MAX_EXPONENT: u32 = 30;

pub struct Figure {
    pub name: String,
    pub data: Table,
    pub script: String,
}

const STARTS: [(&str, f64); 3] = [("vacuum", 0.0), ("T=0.5", 0.5), ("T=1", 1.0)];

fn initial(t: f64) -> InitialField {
    if t == 0.0 {
        InitialField::Vacuum
    } else {
        InitialField::Thermal { temperature: t }
    }
}

/// Per-cycle records for the vacuum, T = 0.5 and T = 1 starts.
fn three_starts(cfg: &ExperimentConfig, modes: ModeDefault, thermality: bool) -> Result<Vec<Vec<CycleRecord>>, CliError> {
    let cavity = cfg.cavity(modes)?;
    let blocks = CycleBlocks::for_config(&cavity)?;
    let options = farming_core::farming::RunOptions { thermality, ..run_options(cfg) };
    STARTS
        .par_iter()
        .map(|&(_, t)| {
            let sigma0 = initial(t).covariance(&cavity)?;
            Ok(run_cycles(&cavity, &blocks, &sigma0, &vacuum_state(2)?, cfg.run.n_cycles, &options)?.records)
        })
        .collect()
}

fn wide_table(curves: &[Vec<CycleRecord>], value: impl Fn(&CycleRecord) -> Option<f64>) -> Table {
    let mut header = vec!["cycle"];
    header.extend(STARTS.iter().map(|s| s.0));
    let mut t = Table::new(&header);
    for k in 0..curves[0].len() {
        let mut row = vec![curves[0][k].cycle.to_string()];
        row.extend(curves.iter().map(|c| opt(value(&c[k]))));
        t.push(row);
    }
    t
}

fn script(name: &str, xlabel: &str, ylabel: &str, columns: &[(usize, &str)], extra: &str) -> String {
    let mut s = format!(
        "set datafile separator ','\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset key top right\n{extra}plot "
    );
    let series: Vec<String> = columns
        .iter()
        .enumerate()
        .map(|(i, (col, title))| {
            let file = if i == 0 { format!("'{name}.csv'") } else { "''".into() };
            format!("{file} using 1:{col} with lines title '{title}'")
        })
        .collect();
    s.push_str(&series.join(", \\\n     "));
    s.push('\n');
    s
}

fn three_curve_script(name: &str, ylabel: &str, extra: &str) -> String {
    script(name, "cycle", ylabel, &[(2, "vacuum"), (3, "T = 0.5"), (4, "T = 1")], extra)
}

pub fn reproduce(name: &str, cfg: &ExperimentConfig) -> Result<Figure, CliError> {
    let (data, script) = match name {
        "lognegplot" => {
            let c = three_starts(cfg, DYNAMICS_MODES, false)?;
            (wide_table(&c, |r| Some(r.log_negativity)), three_curve_script(name, "log negativity", ""))
        }
        "energyfig" => {
            let c = three_starts(cfg, DYNAMICS_MODES, false)?;
            (wide_table(&c, |r| Some(r.energy_input)), three_curve_script(name, "energy input per cycle", ""))
        }
        "thermPure" => {
            let c = three_starts(cfg, DYNAMICS_MODES, false)?;
            (wide_table(&c, |r| Some(r.field_purity)), three_curve_script(name, "field purity", ""))
        }
        "thermality" => {
            let c = three_starts(cfg, DYNAMICS_MODES, true)?;
            (wide_table(&c, |r| r.thermality), three_curve_script(name, "D(rho)", ""))
        }
        "ultralong" => {
            let scan = ultralong_scan(cfg, ULTRALONG_MAX_EXPONENT)?;
            let extra = format!(
                "set logscale x\nset format x '10^{{%L}}'\n# extinction at k = {}, spectral estimate {}\n",
                scan.extinction_k.map(|k| k.to_string()).unwrap_or_else(|| "none".into()),
                opt(scan.spectral_estimate())
            );
            (scan_table(&scan), script(name, "cycles", "log negativity", &[(2, "E_N")], &extra))
        }
        "eigcoupling" | "eigtime" => {
            let mut c = cfg.clone();
            c.sweep = if name == "eigcoupling" {
                c.cavity.cycle_time = 21.0;
                SweepSpec { parameter: SweepParameter::Lambda, min: 0.005, max: 0.04, points: 36, scale: GridScale::Linear }
            } else {
                SweepSpec { parameter: SweepParameter::CycleTime, min: 1.0, max: 33.0, points: 129, scale: GridScale::Linear }
            };
            let xlabel = if name == "eigcoupling" { "lambda" } else { "t_f" };
            let report = sweep_cmd(&c)?;
            (report.table(), script(name, xlabel, "log10 critical cycles", &[(3, "log10 n")], ""))
        }
        "extinction" => {
            let report = short_cycle_cmd(cfg)?;
            let mut header = vec!["cycle".to_string()];
            header.extend(report.curves.iter().map(|c| format!("t_f={}r", num(c.multiple))));
            let mut t = Table::new(&header);
            for k in 0..cfg.run.n_cycles {
                let mut row = vec![(k + 1).to_string()];
                row.extend(report.curves.iter().map(|c| num(c.negativities[k])));
                t.push(row);
            }
            let titles: Vec<String> = report.curves.iter().map(|c| format!("t_f = {}r", num(c.multiple))).collect();
            let cols: Vec<(usize, &str)> = titles.iter().enumerate().map(|(i, s)| (i + 2, s.as_str())).collect();
            let s = script(name, "cycle", "log negativity", &cols, "");
            (t, s)
        }
        other => {
            return Err(CliError::Config(format!("unknown figure {other:?}; valid names: {}", FIGURES.join(", "))))
        }
    };
    Ok(Figure { name: name.to_string(), data, script })
}
