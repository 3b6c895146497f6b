use std::fs;
use std::path::Path;
use std::process::Command as Proc;

use conewatch::cli::{self, resolve_config, Command, CommonArgs, RunConfig};

fn bin() -> Proc {
    let mut c = Proc::new(env!("CARGO_BIN_EXE_conewatch"));
    c.env_remove("CONEWATCH_JOBS");
    c
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sweep_limit_cycle_assertion_holds() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--model", "limit_cycle_3d", "--n", "100", "--seed", "7", "--assert-theorem-A", "0.99", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("sweep_limit_cycle_3d_seed7.json"));
    assert!(summary["fraction_Q_union_S"].as_f64().unwrap() >= 0.99);
    assert!(dir.path().join("sweep_limit_cycle_3d_seed7.csv").exists());
    assert!(dir.path().join("conewatch.log").exists());
    assert!(dir.path().join("run_config.json").exists());
}

#[test]
fn failed_assertion_exits_four() {
    // Horizontal rotation with a cone around the vertical axis: chord differences are never in the cone.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let text = r#"{"command": "sweep",
        "model": {"name": "flat_rotation", "kind": "polynomial", "coefficients": [
            [{"coefficient": -1, "exponents": [0, 1, 0]}],
            [{"coefficient": 1, "exponents": [1, 0, 0]}],
            []]},
        "cone": {"eigenvalues": [1, 1, -1]},
        "box": {"lower": [-1, -1, -1], "upper": [1, 1, 1]},
        "sweep": {"n_points": 10, "horizon": 60}}"#;
    fs::write(&cfg, text).unwrap();
    let status = bin()
        .args(["sweep", "--assert-theorem-A", "0.99", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(cli::EXIT_ASSERTION));
    let summary = read_json(&dir.path().join("sweep_flat_rotation_seed0.json"));
    assert_eq!(summary["fraction_Q_union_S"], 0.0);
}

#[test]
fn check_coop_rotation_reports_failure_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["check-coop", "--model", "rotation_counterexample", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary = read_json(&dir.path().join("check_coop_rotation_counterexample.json"));
    assert_eq!(summary["pass"], false);
    assert_eq!(summary["lmi"]["pass"], false);
    assert_eq!(summary["invariance"]["pass"], false);
    assert!(summary["monotonicity"]["violations"].as_u64().unwrap() > 0);
}

#[test]
fn config_without_box_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"command": "sweep", "model": "linear_diag"}"#).unwrap();
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(cli::EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`box`"));
}

#[test]
fn unknown_model_and_bad_flags_are_validation_errors() {
    let status = bin().args(["cone-info", "--model", "no_such_model"]).status().unwrap();
    assert_eq!(status.code(), Some(cli::EXIT_VALIDATION));
    let status = bin().args(["sweep", "--model", "linear_diag", "--n", "many"]).status().unwrap();
    assert_eq!(status.code(), Some(cli::EXIT_VALIDATION));
    let status = bin().args(["sweep", "--model", "linear_diag", "--n", "0", "--out", "/tmp/conewatch-empty"]).status().unwrap();
    assert_eq!(status.code(), Some(cli::EXIT_VALIDATION));
}

#[test]
fn unknown_config_field_rejected() {
    let text = r#"{"command": "sweep", "model": "linear_diag", "box": {"lower": [-1,-1,-1], "upper": [1,1,1]}, "colour": 3}"#;
    let err = RunConfig::from_json(text).unwrap_err();
    assert!(err.to_string().contains("colour"));
}

#[test]
fn emitted_run_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["classify", "--model", "limit_cycle_3d", "--x0=0.5,-0.2,0.1", "--seed", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("run_config.json")).unwrap();
    let cfg = RunConfig::from_json(&text).unwrap();
    assert_eq!(cfg.command, Command::Classify);
    assert_eq!(cfg.master_seed, 3);
    assert_eq!(cfg.classify.x0, Some(vec![0.5, -0.2, 0.1]));
    let again = serde_json::to_string_pretty(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<RunConfig>(&again).unwrap(), cfg);

    let rerun = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["classify", "--config"])
        .arg(dir.path().join("run_config.json"))
        .arg("--out")
        .arg(rerun.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let a = read_json(&dir.path().join("classify_limit_cycle_3d.json"));
    let b = read_json(&rerun.path().join("classify_limit_cycle_3d.json"));
    assert_eq!(a, b);
    assert_eq!(a["record"]["omega_class"]["kind"], "periodic_orbit");
}

#[test]
fn flags_override_config_and_env_overrides_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let text = r#"{"command": "sweep", "model": "linear_diag", "master_seed": 1, "jobs": 2,
                   "box": {"lower": [-1,-1,-1], "upper": [1,1,1]}, "sweep": {"n_points": 50}}"#;
    fs::write(&path, text).unwrap();
    let args = CommonArgs { config: Some(path.clone()), seed: Some(9), jobs: Some(3), ..Default::default() };
    let cfg = resolve_config(Command::Sweep, &args, None).unwrap();
    assert_eq!(cfg.master_seed, 9);
    assert_eq!(cfg.jobs, Some(3));
    assert_eq!(cfg.sweep.n_points, 50);
    let cfg = resolve_config(Command::Sweep, &args, Some("5")).unwrap();
    assert_eq!(cfg.jobs, Some(5));
    let err = resolve_config(Command::Sweep, &args, Some("lots")).unwrap_err();
    assert_eq!(err.code, cli::EXIT_VALIDATION);
    let err = resolve_config(Command::Classify, &args, None).unwrap_err();
    assert_eq!(err.code, cli::EXIT_VALIDATION);
}

#[test]
fn polynomial_model_requires_cone() {
    let text = r#"{"command": "cone-info",
        "model": {"name": "decay", "kind": "polynomial",
                  "coefficients": [[{"coefficient": -1, "exponents": [1, 0]}], [{"coefficient": -2, "exponents": [0, 1]}]]},
        "box": {"lower": [-1, -1], "upper": [1, 1]}}"#;
    let mut cfg = RunConfig::from_json(text).unwrap();
    cfg.output_dir = tempfile::tempdir().unwrap().keep();
    let err = cli::execute(cfg.clone(), 1).unwrap_err();
    assert_eq!(err.code, cli::EXIT_VALIDATION);
    assert!(err.message.contains("cone"));
    cfg.cone = Some(serde_json::from_str(r#"{"eigenvalues": [-1, 1]}"#).unwrap());
    let out = cli::execute(cfg, 1).unwrap();
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.summary["rank"], 1);
}

#[test]
fn lyapunov_and_probe_write_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::for_zoo(Command::Lyapunov, "limit_cycle_3d").unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.lyapunov.horizon = 60.0;
    let out = cli::execute(cfg, 2).unwrap();
    let ex = out.summary["spectrum"]["exponents"].as_array().unwrap();
    let expected = [0.0, -2.0, -25.0];
    for (e, x) in ex.iter().zip(expected) {
        assert!((e.as_f64().unwrap() - x).abs() < 5e-2, "{ex:?}");
    }
    assert_eq!(out.summary["separation_check"]["E_in_interior"], true);

    let mut cfg = RunConfig::for_zoo(Command::Probe, "linear_diag").unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.probe.m = 10;
    let out = cli::execute(cfg, 2).unwrap();
    assert_eq!(out.summary["fraction_in_Q"], 1.0);
    assert!(dir.path().join("probe_linear_diag.csv").exists());
}

#[test]
fn schema_lists_run_config_fields() {
    let schema: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/schema.json")).unwrap())
            .unwrap();
    let cfg = RunConfig::for_zoo(Command::Sweep, "linear_diag").unwrap();
    let mut value = serde_json::to_value(&cfg).unwrap();
    value["cone"] = serde_json::json!({"eigenvalues": [-1, -1, 1]});
    value["jobs"] = serde_json::json!(1);
    let mut fields: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
    let mut props: Vec<_> = schema["properties"].as_object().unwrap().keys().cloned().collect();
    fields.sort();
    props.sort();
    assert_eq!(fields, props);
    let required: Vec<_> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(required, ["command", "model", "box"]);
    for section in ["check_coop", "classify", "sweep", "lyapunov", "probe"] {
        let mut keys: Vec<_> = value[section].as_object().unwrap().keys().cloned().collect();
        let mut listed: Vec<_> = schema["properties"][section]["properties"].as_object().unwrap().keys().cloned().collect();
        keys.sort();
        listed.sort();
        assert_eq!(keys, listed, "section {section}");
    }
}

#[test]
fn identical_config_gives_identical_csv() {
    let run = |jobs: &str| {
        let dir = tempfile::tempdir().unwrap();
        let status = bin()
            .args(["sweep", "--model", "may_leonard", "--n", "24", "--seed", "5", "--horizon", "120", "--jobs", jobs, "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        fs::read(dir.path().join("sweep_may_leonard_seed5.csv")).unwrap()
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("4"));
}
