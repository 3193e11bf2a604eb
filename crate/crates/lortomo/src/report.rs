//! Run reports: per-stage metrics and one verdict per acceptance
//! criterion. Nothing here depends on wall-clock time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SCHEMA_VERSION;

/// Identifiers and short titles of the acceptance criteria.
pub const CRITERIA: [(u32, &str); 13] = [
    (1, "minkowski closed form"),
    (2, "hamiltonian conservation"),
    (3, "diffeomorphism invariance"),
    (4, "scattering from pullback pair"),
    (5, "eikonal property"),
    (6, "straightening"),
    (7, "integral identity"),
    (8, "b-block asymptotics"),
    (9, "projection-slice oracle"),
    (10, "fio norm bound"),
    (11, "cone estimate"),
    (12, "end-to-end pipeline"),
    (13, "determinism"),
];

pub const SUMMATION_MODE: &str = "pairwise";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotRun,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotRun => "NOT RUN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub status: Status,
    /// Measured quantities with their thresholds.
    pub measured: BTreeMap<String, f64>,
    pub detail: String,
}

impl Criterion {
    pub fn new(id: u32) -> Self {
        let name = CRITERIA
            .iter()
            .find(|c| c.0 == id)
            .expect("known criterion")
            .1;
        Criterion {
            id,
            name: name.to_string(),
            status: Status::NotRun,
            measured: BTreeMap::new(),
            detail: String::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    pub fn verdict(mut self, ok: bool, detail: impl Into<String>) -> Self {
        self.status = Status::from_bool(ok);
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<30} {}  {}",
            self.id,
            self.name,
            self.status.label(),
            self.detail
        )
    }
}

/// A table for plotting: `x` against one or more named columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub experiment: String,
    pub parameter: String,
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

/// The plot series every report carries, present even when empty.
pub const PLOT_SERIES: [(&str, &str, &[&str]); 4] = [
    ("cone", "mu", &["ratio"]),
    ("eps_ladder", "epsilon", &["max_b", "residual"]),
    ("fio_norm", "grid", &["norm", "bound", "ratio"]),
    (
        "contraction",
        "epsilon",
        &["gradient_norm", "cone_ratio", "combined"],
    ),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub experiment: String,
    pub seed: u64,
    pub summation: String,
    pub stages: BTreeMap<String, BTreeMap<String, f64>>,
    pub criteria: Vec<Criterion>,
    pub plots: Vec<PlotSeries>,
    /// Non-fatal stage errors, with context.
    pub errors: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CombineError {
    #[error("no reports to combine")]
    Empty,
    #[error("config hash {found} differs from {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("criterion {id} has conflicting verdicts")]
    Conflict { id: u32 },
}

impl RunReport {
    pub fn new(config_hash: &str, experiment: &str, seed: u64) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash.to_string(),
            experiment: experiment.to_string(),
            seed,
            summation: SUMMATION_MODE.to_string(),
            stages: BTreeMap::new(),
            criteria: CRITERIA.iter().map(|c| Criterion::new(c.0)).collect(),
            plots: PLOT_SERIES
                .iter()
                .map(|(e, p, cols)| PlotSeries {
                    experiment: e.to_string(),
                    parameter: p.to_string(),
                    columns: cols.iter().map(|c| c.to_string()).collect(),
                    rows: Vec::new(),
                })
                .collect(),
            errors: Vec::new(),
        }
    }

    pub fn stage(&mut self, name: &str) -> &mut BTreeMap<String, f64> {
        self.stages.entry(name.to_string()).or_default()
    }

    pub fn record(&mut self, c: Criterion) {
        let slot = self
            .criteria
            .iter_mut()
            .find(|x| x.id == c.id)
            .expect("known criterion");
        *slot = c;
    }

    pub fn criterion(&self, id: u32) -> &Criterion {
        self.criteria
            .iter()
            .find(|c| c.id == id)
            .expect("known criterion")
    }

    pub fn plot(&mut self, experiment: &str) -> &mut PlotSeries {
        self.plots
            .iter_mut()
            .find(|p| p.experiment == experiment)
            .expect("known plot series")
    }

    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.status == Status::Pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Merges reports of the same configuration: a criterion evaluated in one
/// report fills a `NotRun` slot in the others.
pub fn combine_reports(reports: &[RunReport]) -> Result<RunReport, CombineError> {
    let first = reports.first().ok_or(CombineError::Empty)?;
    let mut out = first.clone();
    for r in &reports[1..] {
        if r.config_hash != first.config_hash {
            return Err(CombineError::HashMismatch {
                expected: first.config_hash.clone(),
                found: r.config_hash.clone(),
            });
        }
        for c in &r.criteria {
            if c.status == Status::NotRun {
                continue;
            }
            let cur = out.criterion(c.id);
            if cur.status == Status::NotRun {
                out.record(c.clone());
            } else if cur.status != c.status {
                return Err(CombineError::Conflict { id: c.id });
            }
        }
        for (k, v) in &r.stages {
            out.stages.entry(k.clone()).or_insert_with(|| v.clone());
        }
        for p in &r.plots {
            let slot = out.plot(&p.experiment);
            if slot.rows.is_empty() {
                slot.rows = p.rows.clone();
            }
        }
        out.errors.extend(r.errors.iter().cloned());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_criterion_appears_once() {
        let r = RunReport::new("h", "full", 1);
        let mut ids: Vec<u32> = r.criteria.iter().map(|c| c.id).collect();
        ids.sort();
        assert_eq!(ids, (1..=13).collect::<Vec<_>>());
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["criteria"].as_array().unwrap().len(), 13);
        assert_eq!(json["summation"], "pairwise");
    }

    #[test]
    fn record_replaces_the_slot() {
        let mut r = RunReport::new("h", "tau", 1);
        r.record(Criterion::new(1).with("max_error", 0.0).verdict(true, "ok"));
        r.record(
            Criterion::new(1)
                .with("max_error", 1.0)
                .verdict(false, "bad"),
        );
        assert_eq!(r.criteria.len(), 13);
        assert_eq!(r.criterion(1).status, Status::Fail);
    }

    #[test]
    fn combine_fills_and_refuses() {
        let mut a = RunReport::new("h", "tau", 1);
        a.record(Criterion::new(1).verdict(true, ""));
        let mut b = RunReport::new("h", "fourier", 1);
        b.record(Criterion::new(9).verdict(true, ""));
        let c = combine_reports(&[a.clone(), b]).unwrap();
        assert_eq!(c.criterion(1).status, Status::Pass);
        assert_eq!(c.criterion(9).status, Status::Pass);
        assert_eq!(c.criterion(2).status, Status::NotRun);

        let other = RunReport::new("g", "tau", 1);
        assert!(matches!(
            combine_reports(&[a.clone(), other]),
            Err(CombineError::HashMismatch { .. })
        ));
        let mut bad = RunReport::new("h", "tau", 1);
        bad.record(Criterion::new(1).verdict(false, ""));
        assert_eq!(
            combine_reports(&[a, bad]),
            Err(CombineError::Conflict { id: 1 })
        );
        assert_eq!(combine_reports(&[]), Err(CombineError::Empty));
    }
}
