//! The scripted deterministic mock.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Generator, GeneratorRequest, GeneratorResponse, TransportError};

/// One scripted response, optionally guarded by a prompt-substring match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// When set, the call's prompt must contain this substring; otherwise
    /// the call receives a mismatch error instead of the response.
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub match_substring: Option<String>,
    pub response: String,
}

impl ScriptEntry {
    pub fn response(text: impl Into<String>) -> Self {
        Self {
            match_substring: None,
            response: text.into(),
        }
    }

    pub fn when_contains(needle: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            match_substring: Some(needle.into()),
            response: text.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read script {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed script {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

/// Loads a script file: a JSON list of `{match?, response}` entries.
pub fn replay_script(path: &Path) -> Result<Vec<ScriptEntry>, ScriptError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ScriptError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Serves scripted responses in order, one per call. The cursor is
/// synchronized, so concurrent callers observe one global order. Identical
/// script plus identical call sequence yields identical responses.
pub struct ScriptedGenerator {
    entries: Vec<ScriptEntry>,
    cycle: bool,
    state: Mutex<State>,
}

#[derive(Default)]
struct State {
    cursor: usize,
    prompts: Vec<String>,
}

impl ScriptedGenerator {
    pub fn new(entries: Vec<ScriptEntry>, cycle: bool) -> Self {
        Self {
            entries,
            cycle,
            state: Mutex::new(State::default()),
        }
    }

    /// Every prompt received so far, in call order. Test hook.
    pub fn recorded_prompts(&self) -> Vec<String> {
        self.state.lock().expect("scripted mock poisoned").prompts.clone()
    }

    pub fn calls(&self) -> usize {
        self.state.lock().expect("scripted mock poisoned").prompts.len()
    }
}

impl Generator for ScriptedGenerator {
    fn generate(&self, request: &GeneratorRequest) -> Result<GeneratorResponse, TransportError> {
        let mut state = self.state.lock().expect("scripted mock poisoned");
        state.prompts.push(request.prompt.clone());
        if state.cursor >= self.entries.len() {
            if self.cycle && !self.entries.is_empty() {
                state.cursor = 0;
            } else {
                return Err(TransportError::ScriptExhausted);
            }
        }
        let index = state.cursor;
        state.cursor += 1;
        let entry = &self.entries[index];
        if let Some(needle) = &entry.match_substring {
            if !request.prompt.contains(needle.as_str()) {
                return Err(TransportError::ScriptMismatch {
                    index,
                    expected: needle.clone(),
                });
            }
        }
        Ok(GeneratorResponse::mock(&request.prompt, entry.response.clone()))
    }
}
