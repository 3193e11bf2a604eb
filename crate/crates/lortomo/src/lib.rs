//! Experiment harness for `lortomo-core`: configuration, orchestration and
//! reproducible artifacts.

pub mod config;
pub mod experiments;
pub mod io;
pub mod report;

use std::path::Path;

use anyhow::{Context, Result};

pub use config::{ConfigError, ExperimentConfig};
pub use experiments::{execute, Artifact, Run};
pub use report::{combine_reports, RunReport};

/// Runs `cfg` on a pool of `workers` threads.
pub fn run_in_pool(cfg: &ExperimentConfig, workers: usize) -> Result<Run> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;
    Ok(pool.install(|| execute(cfg)))
}

/// Runs the selected experiment and writes `report.json`, `timing.json`,
/// `config.toml`, the CSV/JSON artifacts, plot data and `MANIFEST` to `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<RunReport> {
    let run = run_in_pool(cfg, workers)?;
    write_run(cfg, &run, out)?;
    Ok(run.report)
}

pub fn write_run(cfg: &ExperimentConfig, run: &Run, out: &Path) -> Result<()> {
    let mut dir = io::OutputDir::create(out)?;
    dir.write("config.toml", cfg.to_toml().as_bytes())?;
    dir.write("report.json", run.report.to_json().as_bytes())?;
    for a in &run.artifacts {
        match a {
            Artifact::Csv { name, header, rows } => {
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                dir.numeric_csv(name, &header, rows)?;
            }
            Artifact::Jsonl { name, rows } => dir.jsonl(name, rows)?,
            Artifact::Json { name, value } => dir.json(name, value)?,
        }
    }
    io::emit_plot_data(&run.report, &mut dir)?;
    dir.json("timing.json", &run.timing)?;
    dir.manifest(&run.report.config_hash, &["timing.json"])
}
