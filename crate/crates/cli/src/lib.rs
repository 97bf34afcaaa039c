//! Batch front-end for the contract engine.
//!
//! A suite file is one JSON document declaring schemas, contracts (with
//! predicates drawn from a closed declarative vocabulary), a generator
//! config, and run parameters. The [`runner`] loads a suite, estimates
//! success per contract, and writes report and trace files; `explain` prints
//! one contract's obligations. Library users who need arbitrary predicate
//! code should build [`surety::Contract`]s directly instead.

pub mod assemble;
pub mod predicates;
pub mod runner;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use surety::generator::GeneratorConfig;
use surety::remediation::RetryPolicy;
use surety::schema::TypeSchema;

pub use predicates::{ComparisonOp, PredicateSpec, TargetSpec};
pub use runner::{explain, run_suite, RunOptions, RunSummary};

/// A complete suite file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteFile {
    #[serde(default)]
    pub name: String,
    pub schemas: Vec<TypeSchema>,
    pub contracts: Vec<ContractSpec>,
    /// Primary generator.
    pub generator: GeneratorConfig,
    /// Optional additional backends, keyed by backend name
    /// (`scripted` | `bernoulli` | `http`), selectable with `--backend`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alternates: BTreeMap<String, GeneratorConfig>,
    #[serde(default)]
    pub agent: AgentSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub id: String,
    /// Schema names, resolved against `schemas`.
    pub input_schema: String,
    pub output_schema: String,
    #[serde(default)]
    pub prompt: String,
    /// Input corpus for estimation runs, cycled round-robin. JSON objects
    /// matching the input schema.
    pub inputs: Vec<serde_json::Value>,
    #[serde(default)]
    pub preconditions: Vec<PredicateSpec>,
    #[serde(default)]
    pub postconditions: Vec<PredicateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub act: Option<ActSpec>,
    /// Falls back to the agent's defaults when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_retry: Option<RetryPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_retry: Option<RetryPolicy>,
    #[serde(default)]
    pub fallback: FallbackSpec,
    /// Per-contract success threshold; falls back to `run.threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackSpec {
    #[default]
    Strict,
    GracefulRaw,
    /// Value of the type-compliant default, matching the output schema.
    GracefulDefault(serde_json::Value),
}

/// Declarative act stage: a named transform applied to the input instance,
/// re-validated against `schema`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActSpec {
    pub schema: String,
    pub op: ActOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActOp {
    Identity,
    LowercaseField { field: String },
    UppercaseField { field: String },
    SetField { field: String, value: serde_json::Value },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentSpec {
    pub instructions: Vec<String>,
    pub temperature: f64,
    pub seed: Option<u64>,
    /// Hard cap on generator calls per execution; defaults to the largest
    /// contract worst case.
    pub cost_cap: Option<u32>,
    pub max_tokens: u32,
    pub default_pre_retry: RetryPolicy,
    pub default_post_retry: RetryPolicy,
}

impl Default for AgentSpec {
    fn default() -> Self {
        Self {
            instructions: Vec::new(),
            temperature: 0.0,
            seed: None,
            cost_cap: None,
            max_tokens: 1024,
            default_pre_retry: RetryPolicy::disabled(),
            default_post_retry: RetryPolicy::disabled(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub runs: u32,
    pub seed: u64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read suite {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed suite {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid suite configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl SuiteError {
    pub fn config(message: impl Into<String>) -> Self {
        SuiteError::Config(vec![message.into()])
    }
}

impl SuiteFile {
    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let suite: SuiteFile =
            serde_json::from_str(&text).map_err(|source| SuiteError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        Ok(suite)
    }

    /// Re-emits the suite as JSON. Loader round-trip: the emitted text
    /// parses back to an equal in-memory model.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite models serialize")
    }
}
