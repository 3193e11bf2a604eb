use std::fs;
use std::process::{Command, Output};

use lortomo::config::ExperimentConfig;

fn lortomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lortomo"))
        .args(args)
        .output()
        .expect("cli runs")
}

#[test]
fn config_subcommand_round_trips() {
    let out = lortomo(&["config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        ExperimentConfig::parse(&text, "stdout").unwrap(),
        ExperimentConfig::default()
    );
}

#[test]
fn invalid_config_reports_its_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = ExperimentConfig::smoke()
        .to_toml()
        .replacen("rho = 1.5", "rho = -1.5", 1);
    fs::write(&path, text).unwrap();
    let out = lortomo(&[
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "tau",
        "table",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.toml:"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_config_is_an_error() {
    let out = lortomo(&["--config", "/nonexistent/x.toml", "tau", "table"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("/nonexistent/x.toml"));
}

#[test]
fn tau_table_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.toml");
    fs::write(&cfg, ExperimentConfig::smoke().to_toml()).unwrap();
    let out_dir = dir.path().join("out");
    let out = lortomo(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "tau",
        "table",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("criterion  1"), "{stdout}");
    for f in [
        "report.json",
        "timing.json",
        "config.toml",
        "MANIFEST",
        "plot_data.csv",
    ] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    assert_eq!(
        fs::read_to_string(out_dir.join("plot_data.csv")).unwrap(),
        "experiment,parameter,column,value\n"
    );
    assert_eq!(
        fs::read_to_string(out_dir.join("plot_cone.csv")).unwrap(),
        "mu,ratio\n"
    );
    let manifest = fs::read_to_string(out_dir.join("MANIFEST")).unwrap();
    assert!(
        manifest.contains(" report.json\n") && !manifest.contains("timing.json"),
        "{manifest}"
    );
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["criteria"].as_array().unwrap().len(), 13);
    assert_eq!(report["criteria"][0]["status"], "pass");
    assert_eq!(report["criteria"][1]["status"], "not_run");
}

#[test]
fn seed_flag_changes_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.toml");
    fs::write(&cfg, ExperimentConfig::smoke().to_toml()).unwrap();
    let hash = |seed: &str, out: &str| {
        let o = dir.path().join(out);
        let r = lortomo(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
            "--seed",
            seed,
            "metric",
            "dump",
        ]);
        assert!(r.status.success());
        let report: serde_json::Value =
            serde_json::from_slice(&fs::read(o.join("report.json")).unwrap()).unwrap();
        report["config_hash"].as_str().unwrap().to_string()
    };
    assert_ne!(hash("1", "a"), hash("2", "b"));
}
