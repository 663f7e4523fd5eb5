use std::fs;
use std::path::PathBuf;

use rrl_cli::{cmd_run, cmd_sweep, cmd_validate, CliError, ExperimentConfig, SolverChoice, SweepSpec, SweepWeight};

fn instance_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn canonical_config() -> ExperimentConfig {
    ExperimentConfig {
        instance_path: instance_path("canonical.toml"),
        params_path: Some(instance_path("params_default.toml")),
        ..ExperimentConfig::default()
    }
}

#[test]
fn validate_reports_canonical_summary() {
    let report = cmd_validate(&canonical_config()).unwrap();
    assert!(report.starts_with("OK, 6 sources, 7 links"), "{report}");
    assert!(report.contains("sources {n1, n3, n4, n5, n6}"), "{report}");
    assert!(report.contains("feasibility probe: satisfied"), "{report}");
}

#[test]
fn validate_rejects_negative_capacity_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(instance_path("canonical.toml"))
        .unwrap()
        .replace("capacity_mbps = 4.0", "capacity_mbps = -4.0");
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, text).unwrap();
    let config = ExperimentConfig {
        instance_path: bad,
        ..ExperimentConfig::default()
    };
    let err = cmd_validate(&config).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let msg = err.to_string();
    assert!(msg.contains("capacity_mbps"), "{msg}");
}

#[test]
fn validate_rejects_route_gap() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(instance_path("canonical.toml"))
        .unwrap()
        .replace(r#"n1 = ["a", "c", "e"]"#, r#"n1 = ["a", "d", "e"]"#);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, text).unwrap();
    let config = ExperimentConfig {
        instance_path: bad,
        ..ExperimentConfig::default()
    };
    let err = cmd_validate(&config).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("does not chain"), "{err}");
}

#[test]
fn missing_instance_is_an_io_error() {
    let config = ExperimentConfig {
        instance_path: PathBuf::from("/nonexistent/instance.toml"),
        ..ExperimentConfig::default()
    };
    let err = cmd_validate(&config).unwrap_err();
    assert!(matches!(err, CliError::Io(_)));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn bad_override_is_a_validation_error() {
    let mut config = canonical_config();
    config.overrides = vec![("gamma".into(), 1.5)];
    let err = cmd_validate(&config).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn run_writes_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = canonical_config();
    config.out_dir = dir.path().to_path_buf();
    config.max_iters = Some(800);
    let artifacts = cmd_run(&config).unwrap();
    assert!(artifacts.summary_path.exists());
    assert!(artifacts.trace_path.as_ref().unwrap().exists());
    assert!(artifacts.plot_path.as_ref().unwrap().exists());
    assert!(artifacts.converged);
    let summary = &artifacts.summary;
    assert!(summary["sdd"]["average"]["total_utility"].as_f64().unwrap() > 0.0);
    assert!(summary["sdd"]["average"]["network_lifetime_s"].as_f64().unwrap() > 0.0);
    let trace = fs::read_to_string(artifacts.trace_path.unwrap()).unwrap();
    assert!(trace.lines().next().unwrap().starts_with("t,x_n1"));
    assert_eq!(trace.lines().count(), 801);
}

#[test]
fn oracle_only_run_skips_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = canonical_config();
    config.out_dir = dir.path().to_path_buf();
    config.solver = SolverChoice::Oracle;
    let artifacts = cmd_run(&config).unwrap();
    assert!(artifacts.trace_path.is_none());
    assert!(artifacts.plot_path.is_none());
    assert!(artifacts.summary["oracle"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn reruns_are_byte_identical_and_cache_friendly() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut config_a = canonical_config();
    config_a.out_dir = dir_a.path().to_path_buf();
    config_a.max_iters = Some(300);
    let mut config_b = config_a.clone();
    config_b.out_dir = dir_b.path().to_path_buf();
    let a = cmd_run(&config_a).unwrap();
    let b = cmd_run(&config_b).unwrap();
    // same config hash => same filenames
    assert_eq!(
        a.trace_path.as_ref().unwrap().file_name(),
        b.trace_path.as_ref().unwrap().file_name()
    );
    let ta = fs::read(a.trace_path.unwrap()).unwrap();
    let tb = fs::read(b.trace_path.unwrap()).unwrap();
    assert_eq!(ta, tb);
    let sa = fs::read(a.summary_path).unwrap();
    let sb = fs::read(b.summary_path).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn degenerate_sweep_emits_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = canonical_config();
    config.out_dir = dir.path().to_path_buf();
    config.max_iters = Some(400);
    config.sweep = Some(SweepSpec {
        weight: SweepWeight::Phi,
        from: 0.8,
        to: 0.8,
        step: 0.1,
    });
    let artifacts = cmd_sweep(&config).unwrap();
    assert_eq!(artifacts.rows.len(), 1);
    let table = fs::read_to_string(artifacts.table_path).unwrap();
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn sweep_rejects_out_of_range_bounds() {
    let mut config = canonical_config();
    config.sweep = Some(SweepSpec {
        weight: SweepWeight::Gamma,
        from: 0.0,
        to: 1.2,
        step: 0.1,
    });
    let err = cmd_sweep(&config).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn schedule_overrides_change_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = canonical_config();
    base.out_dir = dir.path().to_path_buf();
    base.max_iters = Some(800);
    let a = cmd_run(&base).unwrap();
    let mut tweaked = base.clone();
    tweaked.overrides = vec![("sched.mu_scale".into(), 5.0)];
    let b = cmd_run(&tweaked).unwrap();
    let ta = fs::read(a.trace_path.unwrap()).unwrap();
    let tb = fs::read(b.trace_path.unwrap()).unwrap();
    assert_ne!(ta, tb, "override had no effect");

    let mut bad = base.clone();
    bad.overrides = vec![("sched.rho".into(), 1.0)];
    assert_eq!(cmd_run(&bad).unwrap_err().exit_code(), 1);
}
