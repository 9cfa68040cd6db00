//! Experiment configuration: TOML sections with documented defaults and
//! `FARM_`-prefixed environment overrides.
//!
//! ```toml
//! [cavity]
//! length = 8.0
//! detector_frequency = 0.39269908169872414   # π/8
//! coupling = 0.01
//! # x1 = L/3 and x2 = 2L/3 when omitted
//! cycle_time = 20.0
//!
//! [modes]
//! # count = 128        # modes 1..=count; command default when omitted
//! # window = 1.767     # keep |ω_n − Ω| < window among 1..=count
//!
//! [initial]
//! temperature = 0.0    # 0 is the vacuum
//!
//! [run]
//! n_cycles = 500
//! snapshot_stride = "never"   # "never", "geometric" or a cycle count
//! log_base = "e"              # "e" or "2"
//! energy_convention = "half_trace" # "half_trace" or "normal_ordered"
//! thermality = true
//!
//! [sweep]
//! parameter = "lambda"  # "lambda", "t_f" or "temperature"
//! min = 0.005
//! max = 0.04
//! points = 15
//! scale = "linear"      # "linear" or "log"
//!
//! [short_cycle]
//! multiples = [1.44, 1.48, 1.52]
//! min_modes = 128
//!
//! [output]
//! dir = "out"
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use farming_core::cavity::CavityConfig;
use farming_core::farming::{InitialField, SnapshotStride};
use farming_core::gaussian::{EnergyConvention, LogBase};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "FARM_";

/// Mode count used by dynamics commands when `[modes]` is empty.
pub const DEFAULT_MODE_COUNT: u32 = 128;

/// Window width that keeps modes 1–5 around the resonant fundamental.
pub const DEFAULT_WINDOW: f64 = 4.5 * PI / 8.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cavity: CavitySection,
    pub modes: ModeSection,
    pub initial: InitialSection,
    pub run: RunSection,
    pub sweep: SweepSpec,
    pub short_cycle: ShortCycleSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub length: f64,
    pub detector_frequency: f64,
    pub coupling: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x2: Option<f64>,
    pub cycle_time: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        CavitySection { length: 8.0, detector_frequency: PI / 8.0, coupling: 0.01, x1: None, x2: None, cycle_time: 20.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

/// What a command uses when `[modes]` leaves the choice open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeDefault {
    Count(u32),
    Window(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub temperature: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection { temperature: 0.0 }
    }
}

impl InitialSection {
    pub fn field(&self) -> InitialField {
        if self.temperature == 0.0 {
            InitialField::Vacuum
        } else {
            InitialField::Thermal { temperature: self.temperature }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    #[serde(alias = "paper")]
    HalfTrace,
    NormalOrdered,
}

impl From<Convention> for EnergyConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::HalfTrace => EnergyConvention::HalfTrace,
            Convention::NormalOrdered => EnergyConvention::NormalOrdered,
        }
    }
}

/// Written `"e"` or `"2"`; a bare integer `2` is accepted too.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(try_from = "toml::Value", into = "toml::Value")]
pub enum Base {
    #[default]
    #[value(name = "e")]
    E,
    #[value(name = "2")]
    Two,
}

impl TryFrom<toml::Value> for Base {
    type Error = String;

    fn try_from(v: toml::Value) -> Result<Self, String> {
        match v {
            toml::Value::Integer(2) => Ok(Base::Two),
            toml::Value::String(s) if s == "2" => Ok(Base::Two),
            toml::Value::String(s) if s == "e" => Ok(Base::E),
            other => Err(format!("log_base must be \"e\" or \"2\", got {other}")),
        }
    }
}

impl From<Base> for toml::Value {
    fn from(b: Base) -> Self {
        toml::Value::String(if b == Base::Two { "2" } else { "e" }.into())
    }
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::E => LogBase::Natural,
            Base::Two => LogBase::Two,
        }
    }
}

/// `"never"`, `"geometric"` or a positive cycle count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "toml::Value", into = "toml::Value")]
pub enum Stride {
    #[default]
    Never,
    Geometric,
    Every(u32),
}

impl TryFrom<toml::Value> for Stride {
    type Error = String;

    fn try_from(v: toml::Value) -> Result<Self, String> {
        match v {
            toml::Value::Integer(n) if n > 0 && n <= u32::MAX as i64 => Ok(Stride::Every(n as u32)),
            toml::Value::String(s) => s.parse(),
            other => Err(format!("snapshot_stride must be \"never\", \"geometric\" or a positive integer, got {other}")),
        }
    }
}

impl From<Stride> for toml::Value {
    fn from(s: Stride) -> Self {
        match s {
            Stride::Never => toml::Value::String("never".into()),
            Stride::Geometric => toml::Value::String("geometric".into()),
            Stride::Every(n) => toml::Value::Integer(n as i64),
        }
    }
}

impl FromStr for Stride {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "never" => Ok(Stride::Never),
            "geometric" => Ok(Stride::Geometric),
            n => n
                .parse::<u32>()
                .ok()
                .filter(|&n| n > 0)
                .map(Stride::Every)
                .ok_or_else(|| format!("snapshot_stride must be \"never\", \"geometric\" or a positive integer, got {n:?}")),
        }
    }
}

impl From<Stride> for SnapshotStride {
    fn from(s: Stride) -> Self {
        match s {
            Stride::Never => SnapshotStride::Never,
            Stride::Geometric => SnapshotStride::Geometric,
            Stride::Every(n) => SnapshotStride::Every(n as usize),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub n_cycles: usize,
    pub snapshot_stride: Stride,
    pub log_base: Base,
    pub energy_convention: Convention,
    pub thermality: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            n_cycles: 500,
            snapshot_stride: Stride::Never,
            log_base: Base::E,
            energy_convention: Convention::HalfTrace,
            thermality: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Lambda,
    #[serde(rename = "t_f")]
    #[value(name = "t_f")]
    CycleTime,
    Temperature,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::CycleTime => "t_f",
            SweepParameter::Temperature => "temperature",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: GridScale,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { parameter: SweepParameter::Lambda, min: 0.005, max: 0.04, points: 15, scale: GridScale::Linear }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.points == 0 {
            return Err(CliError::Config("sweep.points must be at least 1".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(CliError::Config(format!("sweep grid [{}, {}] is not increasing", self.min, self.max)));
        }
        if self.points > 1 && self.max == self.min {
            return Err(CliError::Config("sweep grid with several points needs max > min".into()));
        }
        if self.scale == GridScale::Log && self.min <= 0.0 {
            return Err(CliError::Config("log-scaled sweep needs min > 0".into()));
        }
        Ok(())
    }

    /// Grid values in increasing order.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        self.validate()?;
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        let n = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let f = i as f64 / n;
                match self.scale {
                    GridScale::Linear => self.min + f * (self.max - self.min),
                    GridScale::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShortCycleSection {
    /// Cycle times in units of the detector separation.
    pub multiples: Vec<f64>,
    /// Fewer modes than this triggers a warning.
    pub min_modes: u32,
}

impl Default for ShortCycleSection {
    fn default() -> Self {
        ShortCycleSection { multiples: vec![1.44, 1.48, 1.52], min_modes: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

/// Applies `FARM_<SECTION>_<KEY>=value` overrides to a parsed table.
///
/// Values are read as TOML literals and fall back to strings, so
/// `FARM_CAVITY_COUPLING=0.02` and `FARM_RUN_LOG_BASE=2` both work.
pub fn apply_env<I>(table: &mut toml::Table, vars: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    const SECTIONS: [&str; 7] = ["short_cycle", "cavity", "modes", "initial", "run", "sweep", "output"];
    for (name, value) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
        let rest = rest.to_ascii_lowercase();
        let Some((section, key)) = SECTIONS
            .iter()
            .find_map(|s| rest.strip_prefix(s).and_then(|k| k.strip_prefix('_')).map(|k| (*s, k)))
        else {
            return Err(CliError::Config(format!("environment variable {name} does not name a config field")));
        };
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.clone()));
        let entry = table.entry(section).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match entry {
            toml::Value::Table(t) => {
                t.insert(key.to_string(), parsed);
            }
            _ => return Err(CliError::Config(format!("[{section}] is not a table"))),
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::parse_with_env(text, std::iter::empty())
    }

    pub fn parse_with_env<I>(text: &str, vars: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        // parsing the text directly keeps line numbers in diagnostics
        let from_file: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let before = table.clone();
        apply_env(&mut table, vars)?;
        let cfg = if table == before {
            from_file
        } else {
            ExperimentConfig::deserialize(table)
                .map_err(|e| CliError::Config(format!("after {ENV_PREFIX}* overrides: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or defaults when `None`) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let vars = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX));
        Self::parse_with_env(&text, vars).map_err(|e| match (e, path) {
            (CliError::Config(msg), Some(p)) => CliError::Config(format!("{}: {msg}", p.display())),
            (e, _) => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        // mode resolution and cavity checks cover both the count and window branches
        self.cavity(ModeDefault::Count(DEFAULT_MODE_COUNT))?;
        if self.modes.window.is_some_and(|w| !(w.is_finite() && w > 0.0)) {
            return Err(CliError::Config("modes.window must be positive".into()));
        }
        if !(self.initial.temperature.is_finite() && self.initial.temperature >= 0.0) {
            return Err(CliError::Config("initial.temperature must be non-negative".into()));
        }
        if self.run.n_cycles == 0 {
            return Err(CliError::Config("run.n_cycles must be at least 1".into()));
        }
        self.sweep.validate()?;
        if self.short_cycle.multiples.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(CliError::Config("short_cycle.multiples must be positive".into()));
        }
        Ok(())
    }

    /// Mode numbers for a command whose preferred truncation is `default`.
    pub fn mode_numbers(&self, default: ModeDefault) -> Vec<u32> {
        let omega = self.cavity.detector_frequency;
        let length = self.cavity.length;
        let window = |max: u32, w: f64| -> Vec<u32> {
            (1..=max).filter(|&n| (n as f64 * PI / length - omega).abs() < w).collect()
        };
        match (self.modes.count, self.modes.window) {
            (count, Some(w)) => window(count.unwrap_or(DEFAULT_MODE_COUNT), w),
            (Some(n), None) => (1..=n).collect(),
            (None, None) => match default {
                ModeDefault::Count(n) => (1..=n).collect(),
                ModeDefault::Window(w) => window(DEFAULT_MODE_COUNT, w),
            },
        }
    }

    pub fn cavity(&self, default: ModeDefault) -> Result<CavityConfig, CliError> {
        let c = &self.cavity;
        let cfg = CavityConfig {
            length: c.length,
            detector_frequency: c.detector_frequency,
            coupling: c.coupling,
            x1: c.x1.unwrap_or(c.length / 3.0),
            x2: c.x2.unwrap_or(2.0 * c.length / 3.0),
            cycle_time: c.cycle_time,
            modes: self.mode_numbers(default),
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn log_base(&self) -> LogBase {
        self.run.log_base.into()
    }
}
