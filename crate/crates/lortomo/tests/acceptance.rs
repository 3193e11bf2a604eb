//! Runs the acceptance configuration end to end and prints one verdict line
//! per criterion. Wall-clock limits are checked against the per-criterion
//! timings, which the report itself never contains.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use lortomo::config::{Experiment, ExperimentConfig};
use lortomo::report::{Status, CRITERIA};
use lortomo::run_in_pool;

/// Seconds allowed per criterion, single worker.
const RUNTIME_LIMITS: [(u32, f64); 4] = [(1, 10.0), (2, 30.0), (3, 120.0), (9, 300.0)];

/// `lortomo full` with one worker; returns the bytes of `report.json`.
fn cli_full(config: &Path, out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_lortomo"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--workers", "1", "full"])
        .output()
        .expect("cli runs");
    assert!(status.status.code().is_some(), "cli terminated by a signal");
    fs::read(out.join("report.json")).expect("report written")
}

fn cli_determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::smoke();
    cfg.experiment = Experiment::Full;
    let path = dir.path().join("smoke.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    let a = cli_full(&path, &dir.path().join("a"));
    let b = cli_full(&path, &dir.path().join("b"));
    (
        a == b,
        format!(
            "two single-worker cli runs: {} and {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

#[test]
fn acceptance() {
    let cfg = ExperimentConfig {
        experiment: Experiment::Full,
        ..ExperimentConfig::default()
    };
    let run = run_in_pool(&cfg, 1).expect("pool builds");
    let mut failed = Vec::new();
    let mut out = std::io::stdout();
    for (id, name) in CRITERIA {
        let c = run.report.criterion(id);
        let mut ok = c.status == Status::Pass;
        let mut detail = c.detail.clone();
        if let Some(&(_, limit)) = RUNTIME_LIMITS.iter().find(|l| l.0 == id) {
            let secs = run
                .timing
                .get(&format!("criterion_{id:02}"))
                .copied()
                .unwrap_or(f64::INFINITY);
            ok &= secs <= limit;
            detail.push_str(&format!("; {secs:.1} s (limit {limit} s)"));
        }
        if id == 13 {
            let (same, note) = cli_determinism();
            ok &= same;
            detail.push_str(&format!("; {note}"));
        }
        // Written to the stdout handle so the verdicts show without
        // `--nocapture`.
        writeln!(
            out,
            "criterion {id:>2} {name:<30} {}  {detail}",
            if ok { "PASS" } else { "FAIL" }
        )
        .unwrap();
        if !ok {
            failed.push(id);
        }
    }
    for e in &run.report.errors {
        writeln!(out, "stage error: {e}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
