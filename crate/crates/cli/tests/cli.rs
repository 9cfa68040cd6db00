use std::path::Path;
use std::process::{Command, Output};

use farming_cli::ExperimentConfig;

fn farm(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_farm"));
    cmd.args(args).arg("--out").arg(dir);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("farm runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = ExperimentConfig::default();
    cfg.cavity.coupling = 0.02;
    cfg.modes.count = Some(16);
    cfg.run.n_cycles = 12;
    cfg.short_cycle.multiples = vec![1.5];
    let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn run_cycles_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--modes", "8", "run-cycles", "--cycles", "40", "--temperature", "0.5"];
    assert!(farm(a.path(), &args, &[]).status.success());
    assert!(farm(b.path(), &args, &[]).status.success());
    let read = |d: &Path| std::fs::read(d.join("trajectory.csv")).unwrap();
    let text = read(a.path());
    assert_eq!(text, read(b.path()));
    let s = String::from_utf8(text).unwrap();
    assert!(s.starts_with("cycle,log_negativity,energy_input,field_purity,thermality"));
    assert_eq!(s.lines().count(), 41);
    assert!(s.ends_with('\n'));
}

#[test]
fn config_file_and_environment_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("farm.toml");
    std::fs::write(&path, "[modes]\ncount = 4\n\n[run]\nn_cycles = 9\nthermality = false\n").unwrap();
    let out = farm(dir.path(), &["--config", path.to_str().unwrap(), "run-cycles"], &[("FARM_RUN_N_CYCLES", "5")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[cavity]\ncoupling = 0.01\nspeed = 3\n").unwrap();
    let out = farm(dir.path(), &["--config", path.to_str().unwrap(), "spectrum"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error:") && err.contains("speed") && err.contains("line 3"), "{err}");
}

#[test]
fn invalid_value_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = farm(dir.path(), &["spectrum"], &[("FARM_CAVITY_LENGTH", "-1")]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn uncoupled_fixed_point_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = farm(dir.path(), &["fixed-point"], &[("FARM_CAVITY_COUPLING", "0")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn unknown_figure_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = farm(dir.path(), &["reproduce-fig", "nope"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lognegplot"));
}

#[test]
fn window_fixed_point_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = farm(dir.path(), &["fixed-point", "--method", "stein"], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let t = std::fs::read_to_string(dir.path().join("fixed_point.csv")).unwrap();
    assert!(t.starts_with("method,field_modes,coupled_dims,residual"));
    assert!(t.lines().nth(1).unwrap().starts_with("stein,5,8,"));
    assert!(dir.path().join("fixed_point_covariance.csv").exists());
}

#[test]
fn short_cycle_warns_below_mode_floor() {
    let dir = tempfile::tempdir().unwrap();
    let out = farm(dir.path(), &["--modes", "16", "short-cycle", "--multiples", "1.5", "--cycles", "10"], &[]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("warning:"));
    let t = std::fs::read_to_string(dir.path().join("short_cycle.csv")).unwrap();
    assert_eq!(t.lines().count(), 11);
}

#[test]
fn verify_reports_passing_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = farm(dir.path(), &["verify"], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 5, "{stdout}");
}

#[test]
fn energy_convention_accepts_both_spellings() {
    use farming_cli::config::Convention;
    for v in ["half_trace", "paper"] {
        let cfg = ExperimentConfig::parse(&format!("[run]\nenergy_convention = \"{v}\"\n")).unwrap();
        assert_eq!(cfg.run.energy_convention, Convention::HalfTrace);
    }
}
