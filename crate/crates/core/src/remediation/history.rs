//! The error history accumulated across retry attempts.
//!
//! One [`ErrorRecord`] per failed attempt. When one attempt produces several
//! violations they are collapsed into a single record whose message joins
//! the individual messages verbatim, so history length always equals the
//! number of failed attempts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::contract::Phase;
use crate::schema::{Violation, ViolationKind};

/// Cap on the stored excerpt of offending generator text.
pub const RAW_EXCERPT_MAX_CHARS: usize = 512;

/// Where a failure was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorSource {
    TypeValidation,
    Precondition,
    Postcondition,
    Parse,
}

impl fmt::Display for ErrorSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            ErrorSource::TypeValidation => "type-validation",
            ErrorSource::Precondition => "precondition",
            ErrorSource::Postcondition => "postcondition",
            ErrorSource::Parse => "parse",
        };
        f.write_str(label)
    }
}

/// One failed attempt: when, where, what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// 1-based index of the failed attempt within the execution. Strictly
    /// increasing within a history.
    pub attempt: u32,
    pub phase: Phase,
    pub source: ErrorSource,
    /// Failing predicate name(s) or field path(s), comma-joined when an
    /// attempt fails several at once.
    pub predicate_or_path: String,
    /// The validator/evaluator message(s), verbatim; multiple failures are
    /// joined with `"; "`.
    pub message: String,
    /// First [`RAW_EXCERPT_MAX_CHARS`] characters of the offending generator
    /// text; empty for input-phase errors.
    pub raw_excerpt: String,
}

impl ErrorRecord {
    pub fn new(
        attempt: u32,
        phase: Phase,
        source: ErrorSource,
        predicate_or_path: impl Into<String>,
        message: impl Into<String>,
        raw_excerpt: impl Into<String>,
    ) -> Self {
        let mut message = message.into();
        if message.is_empty() {
            message = "failure with no message".to_string();
        }
        Self {
            attempt,
            phase,
            source,
            predicate_or_path: predicate_or_path.into(),
            message,
            raw_excerpt: raw_excerpt.into(),
        }
    }

    /// Collapses one attempt's violations into a single record.
    pub fn from_violations(
        attempt: u32,
        phase: Phase,
        violations: &[Violation],
        raw_text: &str,
    ) -> Self {
        debug_assert!(!violations.is_empty());
        let source = if violations.iter().all(|v| v.kind == ViolationKind::Parse) {
            ErrorSource::Parse
        } else {
            ErrorSource::TypeValidation
        };
        let (paths, message) = if violations.len() == 1 {
            (violations[0].path.clone(), violations[0].message.clone())
        } else {
            let paths: Vec<&str> = violations.iter().map(|v| v.path.as_str()).collect();
            let messages: Vec<String> = violations
                .iter()
                .map(|v| format!("{}: {}", v.path, v.message))
                .collect();
            (paths.join(", "), messages.join("; "))
        };
        Self::new(attempt, phase, source, paths, message, excerpt(raw_text))
    }
}

/// Append-only sequence of [`ErrorRecord`]s for one execution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ErrorHistory {
    records: Vec<ErrorRecord>,
}

impl ErrorHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// The attempt index the next failure should carry.
    pub fn next_attempt(&self) -> u32 {
        self.records.last().map_or(1, |r| r.attempt + 1)
    }

    pub fn push(&mut self, record: ErrorRecord) {
        debug_assert!(
            self.records.last().is_none_or(|r| record.attempt > r.attempt),
            "attempt indices must be strictly increasing"
        );
        self.records.push(record);
    }

    pub fn records(&self) -> &[ErrorRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// First [`RAW_EXCERPT_MAX_CHARS`] characters of `text`.
pub fn excerpt(text: &str) -> String {
    match text.char_indices().nth(RAW_EXCERPT_MAX_CHARS) {
        Some((byte, _)) => text[..byte].to_string(),
        None => text.to_string(),
    }
}
