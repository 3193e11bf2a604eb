//! Experiment configuration: a TOML tree with every field required.
//!
//! Value checks run inside deserialization (through `try_from` newtypes),
//! so every rejection carries the line and column of the offending value.

use std::fmt;
use std::path::{Path, PathBuf};

use lortomo_core::metric::SpatialDomain;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Invalid {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

/// A strictly positive float.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Positive(f64);

impl Positive {
    pub fn new(v: f64) -> Result<Self, String> {
        if v.is_finite() && v > 0.0 {
            Ok(Positive(v))
        } else {
            Err(format!("expected a positive finite number, found {v}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Positive {
    type Error = String;
    fn try_from(v: f64) -> Result<Self, String> {
        Positive::new(v)
    }
}

impl From<Positive> for f64 {
    fn from(p: Positive) -> f64 {
        p.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SchemaVersion(u32);

impl TryFrom<u32> for SchemaVersion {
    type Error = String;
    fn try_from(v: u32) -> Result<Self, String> {
        if v == SCHEMA_VERSION {
            Ok(SchemaVersion(v))
        } else {
            Err(format!(
                "unsupported schema_version {v}; this build reads version {SCHEMA_VERSION}"
            ))
        }
    }
}

impl From<SchemaVersion> for u32 {
    fn from(v: SchemaVersion) -> u32 {
        v.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Metric,
    Flow,
    Tau,
    Scatter,
    Straighten,
    Identity,
    Fourier,
    Riemannian,
    Full,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Metric => "metric",
            Experiment::Flow => "flow",
            Experiment::Tau => "tau",
            Experiment::Scatter => "scatter",
            Experiment::Straighten => "straighten",
            Experiment::Identity => "identity",
            Experiment::Fourier => "fourier",
            Experiment::Riemannian => "riemannian",
            Experiment::Full => "full",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierExperiment {
    SliceOracle,
    FioNorm,
    Cone,
    Contraction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Minkowski,
    SpecialForm,
    General,
    PullbackPair,
    UnequalPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawDomain", into = "RawDomain")]
pub struct DomainConfig {
    pub n: usize,
    pub r_omega: f64,
    pub rho: f64,
    pub h_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    n: usize,
    r_omega: Positive,
    rho: Positive,
    h_offset: f64,
}

impl TryFrom<RawDomain> for DomainConfig {
    type Error = String;
    fn try_from(r: RawDomain) -> Result<Self, String> {
        SpatialDomain::new(r.n, r.r_omega.get(), r.rho.get(), r.h_offset)
            .map_err(|e| e.to_string())?;
        Ok(DomainConfig {
            n: r.n,
            r_omega: r.r_omega.get(),
            rho: r.rho.get(),
            h_offset: r.h_offset,
        })
    }
}

impl From<DomainConfig> for RawDomain {
    fn from(d: DomainConfig) -> RawDomain {
        RawDomain {
            n: d.n,
            r_omega: Positive(d.r_omega),
            rho: Positive(d.rho),
            h_offset: d.h_offset,
        }
    }
}

impl DomainConfig {
    pub fn domain(&self) -> SpatialDomain {
        SpatialDomain::new(self.n, self.r_omega, self.rho, self.h_offset)
            .expect("validated on load")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: Family,
    pub epsilon: Positive,
    /// Decreasing `ε` values for the linear-scaling check.
    pub ladder: Vec<Positive>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    /// Boundary points per side of the closed-form `τ` grid.
    pub tau_grid: usize,
    /// Boundary points per side of the near-light invariance grid.
    pub invariance_grid: usize,
    pub hamiltonian_rays: usize,
    pub scatter_rays: usize,
    pub recovery_rays: usize,
    pub eikonal_configs: usize,
    pub identity_rays: usize,
    pub identity_nodes: usize,
    /// RK4 steps of the coarsest run in the step-halving check.
    pub halving_steps: usize,
    pub b_rays: usize,
    pub b_nodes: usize,
    /// Points per axis of the straightening check lattice.
    pub psi_lattice: usize,
    /// Points per axis of the fold-check grid.
    pub fold_check: usize,
    pub oracle_lattice: usize,
    pub oracle_modes: usize,
    pub fio_grids: Vec<usize>,
    pub cone_fields: usize,
    /// Points per axis of the tensor-difference lattice.
    pub pipeline_lattice: usize,
    /// Rays per sampled metric in `flow trace` and `scatter`.
    pub trace_rays: usize,
    /// Points per axis in `metric dump`.
    pub dump_grid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub closed_form: Positive,
    pub hamiltonian_drift: Positive,
    pub invariance: Positive,
    pub exit_agreement: Positive,
    pub interior_separation: Positive,
    pub recovery: Positive,
    pub eikonal: Positive,
    pub special_form: Positive,
    pub round_trip: Positive,
    pub identity: Positive,
    pub halving_order: Positive,
    pub negative_control: Positive,
    pub b_ratio_low: Positive,
    pub b_ratio_high: Positive,
    pub slice_oracle: Positive,
    pub fio_stability: Positive,
    pub cone_target: Positive,
    pub m_sup: Positive,
    pub corollary: Positive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    pub rho1: f64,
    pub rho2: f64,
    /// The `μ` schedule of the cone experiment.
    pub mus: Vec<Positive>,
    pub oracle_mu: Positive,
    pub cone_k: Positive,
    pub experiments: Vec<FourierExperiment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: SchemaVersion,
    pub experiment: Experiment,
    pub seed: u64,
    pub domain: DomainConfig,
    pub family: FamilyConfig,
    pub counts: Counts,
    pub tolerances: Tolerances,
    pub fourier: FourierConfig,
}

fn pos(v: f64) -> Positive {
    Positive::new(v).expect("literal is positive")
}

impl Default for ExperimentConfig {
    /// The acceptance configuration.
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SchemaVersion(SCHEMA_VERSION),
            experiment: Experiment::Full,
            seed: 20_240_611,
            domain: DomainConfig {
                n: 2,
                r_omega: 1.0,
                rho: 1.5,
                h_offset: -1.2,
            },
            family: FamilyConfig {
                kind: Family::PullbackPair,
                epsilon: pos(1e-2),
                ladder: vec![pos(1e-2), pos(5e-3), pos(2.5e-3)],
            },
            counts: Counts {
                tau_grid: 32,
                invariance_grid: 16,
                hamiltonian_rays: 100,
                scatter_rays: 50,
                recovery_rays: 6,
                eikonal_configs: 20,
                identity_rays: 10,
                identity_nodes: 400,
                halving_steps: 400,
                b_rays: 6,
                b_nodes: 40,
                psi_lattice: 33,
                fold_check: 9,
                oracle_lattice: 64,
                oracle_modes: 6,
                fio_grids: vec![16, 24, 32],
                cone_fields: 6,
                pipeline_lattice: 64,
                trace_rays: 8,
                dump_grid: 17,
            },
            tolerances: Tolerances {
                closed_form: pos(1e-10),
                hamiltonian_drift: pos(1e-9),
                invariance: pos(1e-6),
                exit_agreement: pos(1e-6),
                interior_separation: pos(1e-3),
                recovery: pos(1e-4),
                eikonal: pos(5e-3),
                special_form: pos(1e-6),
                round_trip: pos(1e-9),
                identity: pos(1e-6),
                halving_order: pos(3.5),
                negative_control: pos(1e-3),
                b_ratio_low: pos(1.8),
                b_ratio_high: pos(2.2),
                slice_oracle: pos(1e-2),
                fio_stability: pos(0.2),
                cone_target: pos(1.0 / 3.0),
                m_sup: pos(1e-4),
                corollary: pos(1e-6),
            },
            fourier: FourierConfig {
                rho1: lortomo_core::fourier::DEFAULT_RHO1,
                rho2: lortomo_core::fourier::DEFAULT_RHO2,
                mus: [0.4, 0.2, 0.1, 0.05, 0.02, 0.01]
                    .into_iter()
                    .map(pos)
                    .collect(),
                oracle_mu: pos(0.1),
                cone_k: pos(5.0),
                experiments: vec![
                    FourierExperiment::SliceOracle,
                    FourierExperiment::FioNorm,
                    FourierExperiment::Cone,
                    FourierExperiment::Contraction,
                ],
            },
        }
    }
}

impl ExperimentConfig {
    /// A reduced configuration that exercises every stage in seconds.
    pub fn smoke() -> Self {
        ExperimentConfig {
            counts: Counts {
                tau_grid: 6,
                invariance_grid: 3,
                hamiltonian_rays: 4,
                scatter_rays: 4,
                recovery_rays: 1,
                eikonal_configs: 2,
                identity_rays: 1,
                identity_nodes: 40,
                halving_steps: 100,
                b_rays: 1,
                b_nodes: 8,
                psi_lattice: 5,
                fold_check: 5,
                oracle_lattice: 8,
                oracle_modes: 2,
                fio_grids: vec![6, 8],
                cone_fields: 2,
                pipeline_lattice: 8,
                trace_rays: 2,
                dump_grid: 5,
            },
            ..ExperimentConfig::default()
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Invalid {
                path: origin.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form (field order fixed by the types).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&canonical))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
