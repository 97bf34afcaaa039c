//! The generator boundary.
//!
//! Everything that produces text sits behind the [`Generator`] trait: an
//! OpenAI-compatible HTTP backend for real use, plus two mocks that make
//! every contract behavior verifiable at desk scale — a scripted
//! deterministic mock and a seeded Bernoulli mock. Generators are shared by
//! reference across concurrent executions; transport failures are typed and
//! consumed as attempts by the remediation loops, never retried here.

mod bernoulli;
mod http;
mod scripted;

pub use bernoulli::{BernoulliGenerator, DependenceMode, FamilyEmission};
pub use http::HttpGenerator;
pub use scripted::{replay_script, ScriptEntry, ScriptError, ScriptedGenerator};

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One generation request.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRequest {
    pub prompt: String,
    pub temperature: f64,
    /// Deterministic seed for backends that support one; the mocks honor it,
    /// the HTTP backend forwards it.
    pub seed: Option<u64>,
    pub max_tokens: u32,
}

/// One generation result with its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorResponse {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub latency: Duration,
}

impl GeneratorResponse {
    /// Mock response with estimated token counts and zero latency, so
    /// mock-backed runs stay byte-deterministic.
    pub(crate) fn mock(prompt: &str, text: String) -> Self {
        Self {
            tokens_in: (prompt.chars().count() as u64).div_ceil(4),
            tokens_out: (text.chars().count() as u64).div_ceil(4),
            text,
            latency: Duration::ZERO,
        }
    }
}

/// A transport-level failure: the attempt produced no usable text. Callers
/// treat these as consumed attempts.
#[derive(Debug, Clone, Error)]
pub enum TransportError {
    #[error("http error: {0}")]
    Http(String),
    #[error("timeout: {0}")]
    Timeout(String),
    #[error("unexpected status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed upstream body: {0}")]
    MalformedResponse(String),
    #[error("script exhausted: no response left for this call")]
    ScriptExhausted,
    #[error("script entry {index} expects a prompt containing {expected:?}")]
    ScriptMismatch { index: usize, expected: String },
}

/// Uniform generator interface. Implementations must be safely shareable
/// across threads; any internal cursor or counter is synchronized.
pub trait Generator: Send + Sync {
    fn generate(&self, request: &GeneratorRequest) -> Result<GeneratorResponse, TransportError>;
}

/// Declarative generator configuration, as it appears in suite files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorConfig {
    /// Serves scripted responses in order; see [`ScriptedGenerator`].
    ScriptedMock {
        #[serde(default)]
        script: Vec<ScriptEntry>,
        /// Load the script from a JSON file instead of inlining it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        script_path: Option<String>,
        /// Restart from the top once the script is exhausted.
        #[serde(default)]
        cycle: bool,
    },
    /// Emits valid or per-family-corrupted instances from seeded draws; see
    /// [`BernoulliGenerator`].
    BernoulliMock {
        seed: u64,
        families: Vec<FamilyEmission>,
        #[serde(default)]
        mode: DependenceMode,
        /// Fixed fields appended after the family fields.
        #[serde(default)]
        extra_fields: Vec<ExtraField>,
    },
    /// OpenAI-compatible chat-completions endpoint.
    Http {
        endpoint: String,
        model: String,
        /// Overrides the per-request temperature when set.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<f64>,
        timeout_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_concurrent: Option<u32>,
    },
}

/// A fixed field the Bernoulli mock always emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraField {
    pub field: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Error)]
pub enum GeneratorBuildError {
    #[error("invalid generator config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Script(#[from] ScriptError),
}

impl GeneratorConfig {
    /// Short backend label (`scripted`, `bernoulli`, `http`).
    pub fn backend_name(&self) -> &'static str {
        match self {
            GeneratorConfig::ScriptedMock { .. } => "scripted",
            GeneratorConfig::BernoulliMock { .. } => "bernoulli",
            GeneratorConfig::Http { .. } => "http",
        }
    }

    /// Validates the config and builds the backend. `base_dir` anchors
    /// relative script paths (usually the suite file's directory).
    pub fn build(&self, base_dir: Option<&Path>) -> Result<Box<dyn Generator>, GeneratorBuildError> {
        match self {
            GeneratorConfig::ScriptedMock {
                script,
                script_path,
                cycle,
            } => {
                let entries = match script_path {
                    Some(path) => {
                        if !script.is_empty() {
                            return Err(GeneratorBuildError::Invalid(
                                "scripted-mock: use either an inline script or script_path, not both"
                                    .to_string(),
                            ));
                        }
                        let resolved = match base_dir {
                            Some(dir) => dir.join(path),
                            None => Path::new(path).to_path_buf(),
                        };
                        replay_script(&resolved)?
                    }
                    None => script.clone(),
                };
                Ok(Box::new(ScriptedGenerator::new(entries, *cycle)))
            }
            GeneratorConfig::BernoulliMock {
                seed,
                families,
                mode,
                extra_fields,
            } => Ok(Box::new(
                BernoulliGenerator::new(*seed, families.clone(), *mode, extra_fields.clone())
                    .map_err(GeneratorBuildError::Invalid)?,
            )),
            GeneratorConfig::Http {
                endpoint,
                model,
                temperature,
                timeout_ms,
                max_concurrent,
            } => {
                if *timeout_ms == 0 {
                    return Err(GeneratorBuildError::Invalid(
                        "http: timeout_ms must be positive".to_string(),
                    ));
                }
                if endpoint.is_empty() {
                    return Err(GeneratorBuildError::Invalid(
                        "http: endpoint must not be empty".to_string(),
                    ));
                }
                Ok(Box::new(
                    HttpGenerator::new(
                        endpoint.clone(),
                        model.clone(),
                        *temperature,
                        Duration::from_millis(*timeout_ms),
                        max_concurrent.unwrap_or(8),
                    )
                    .map_err(GeneratorBuildError::Invalid)?,
                ))
            }
        }
    }
}
