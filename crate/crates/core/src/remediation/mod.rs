//! Bounded retry with corrective prompts.
//!
//! Remediation turns validation failures into another chance: failure
//! messages accumulate in an [`ErrorHistory`], each retry gets a corrective
//! prompt carrying the full history, and a [`RetryPolicy`] bounds attempts
//! and spaces them with deterministic exponential backoff (no jitter, so
//! seeded runs reproduce byte-for-byte).

mod fix;
mod history;
mod prompt;

pub use fix::{fix_instance, FixAttempt, FixCandidate, FixOutcome, FixResult, GenerationSettings};
pub(crate) use fix::fix_instance_at;
pub use history::{excerpt, ErrorHistory, ErrorRecord, ErrorSource, RAW_EXCERPT_MAX_CHARS};
pub use prompt::{
    build_corrective_prompt, fix_candidate_base, CORRECTIVE_HEADER, CORRECTIVE_INSTRUCTION,
    FIX_CANDIDATE_HEADER,
};

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Bounds and paces a remediation loop.
///
/// `max_attempts` counts total tries including the first: a policy with
/// `max_attempts = 3` allows the original try plus two remediation attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_delay_ms: u64,
    pub backoff_factor: f64,
    pub max_delay_ms: u64,
    pub remediation_enabled: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_delay_ms: 100,
            backoff_factor: 2.0,
            max_delay_ms: 10_000,
            remediation_enabled: true,
        }
    }
}

impl RetryPolicy {
    /// A policy with `attempts` total tries and no delays. The usual choice
    /// in tests and mock-backed suites.
    pub fn immediate(attempts: u32) -> Self {
        Self {
            max_attempts: attempts,
            initial_delay_ms: 0,
            backoff_factor: 1.0,
            max_delay_ms: 0,
            remediation_enabled: true,
        }
    }

    /// Single attempt, no remediation.
    pub fn disabled() -> Self {
        Self {
            max_attempts: 1,
            initial_delay_ms: 0,
            backoff_factor: 1.0,
            max_delay_ms: 0,
            remediation_enabled: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts < 1 {
            return Err("max_attempts must be at least 1".to_string());
        }
        if !self.backoff_factor.is_finite() || self.backoff_factor < 1.0 {
            return Err("backoff_factor must be at least 1".to_string());
        }
        if self.initial_delay_ms > self.max_delay_ms {
            return Err("initial_delay must not exceed max_delay".to_string());
        }
        Ok(())
    }

    pub fn initial_delay(&self) -> Duration {
        Duration::from_millis(self.initial_delay_ms)
    }

    pub fn max_delay(&self) -> Duration {
        Duration::from_millis(self.max_delay_ms)
    }
}

/// Delay before attempt `attempt` (2-based; the first try never waits):
/// `min(initial_delay × backoff_factor^(attempt − 2), max_delay)`.
/// Deterministic — no jitter.
pub fn next_delay(policy: &RetryPolicy, attempt: u32) -> Duration {
    debug_assert!(attempt >= 2, "the first attempt has no delay");
    let exponent = attempt.saturating_sub(2);
    let ms = policy.initial_delay_ms as f64 * policy.backoff_factor.powi(exponent as i32);
    let capped = ms.min(policy.max_delay_ms as f64);
    Duration::from_secs_f64(capped / 1000.0)
}
