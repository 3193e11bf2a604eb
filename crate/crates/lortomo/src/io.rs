//! Artifact writers: JSON, JSONL, CSV and the MANIFEST.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::report::{RunReport, SUMMATION_MODE};

/// Collects the files written to one output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    pub fn jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut s = String::new();
        for r in rows {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write(name, &bytes)
    }

    pub fn numeric_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| r.iter().map(|v| fmt_f64(*v)).collect())
            .collect();
        self.csv(name, header, &rows)
    }

    /// `MANIFEST`: config hash, versions, summation mode and the SHA-256 of
    /// every deterministic artifact written so far.
    pub fn manifest(&mut self, config_hash: &str, skip: &[&str]) -> Result<()> {
        let mut names: Vec<String> = self
            .written
            .iter()
            .filter(|n| !skip.contains(&n.as_str()))
            .cloned()
            .collect();
        names.sort();
        let mut s = format!(
            "config_hash {config_hash}\nlortomo {}\nlortomo-core {}\nschema_version {}\nsummation {SUMMATION_MODE}\n",
            env!("CARGO_PKG_VERSION"),
            lortomo_core::VERSION,
            crate::config::SCHEMA_VERSION,
        );
        for n in names {
            let bytes = fs::read(self.path(&n))?;
            s.push_str(&format!("sha256 {} {n}\n", hex(&Sha256::digest(&bytes))));
        }
        self.write("MANIFEST", s.as_bytes())
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Long-format plot data (`experiment, parameter, column, value`) plus one
/// wide file per series. Series without rows give header-only files.
pub fn emit_plot_data(report: &RunReport, out: &mut OutputDir) -> Result<()> {
    let mut long = Vec::new();
    for p in &report.plots {
        let mut header = vec![p.parameter.as_str()];
        header.extend(p.columns.iter().map(String::as_str));
        let rows: Vec<Vec<f64>> = p
            .rows
            .iter()
            .map(|(x, ys)| std::iter::once(*x).chain(ys.iter().copied()).collect())
            .collect();
        out.numeric_csv(&format!("plot_{}.csv", p.experiment), &header, &rows)?;
        for (x, ys) in &p.rows {
            for (c, y) in p.columns.iter().zip(ys) {
                long.push(vec![
                    p.experiment.clone(),
                    fmt_f64(*x),
                    c.clone(),
                    fmt_f64(*y),
                ]);
            }
        }
    }
    out.csv(
        "plot_data.csv",
        &["experiment", "parameter", "column", "value"],
        &long,
    )
}
