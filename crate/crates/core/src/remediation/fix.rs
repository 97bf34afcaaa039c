//! The fix loop: whole-object remediation of a value that failed validation.

use std::sync::Arc;

use super::history::{ErrorHistory, ErrorRecord, ErrorSource};
use super::prompt::{build_corrective_prompt, fix_candidate_base};
use super::{next_delay, RetryPolicy};
use crate::contract::Phase;
use crate::generator::{Generator, GeneratorRequest, GeneratorResponse};
use crate::schema::{render_schema_prompt, parse_output, Instance, TypeSchema, Value};
use crate::seed::mix;

/// The value being fixed: either an in-memory value tree (input fixing) or
/// raw generator text.
#[derive(Debug, Clone)]
pub enum FixCandidate {
    Value(Value),
    Text(String),
}

/// Per-request settings the fix loop needs to issue generator calls.
/// `seed` is the execution's base seed; each call derives its own.
#[derive(Debug, Clone, Copy)]
pub struct GenerationSettings {
    pub temperature: f64,
    pub seed: Option<u64>,
    pub max_tokens: u32,
}

impl GenerationSettings {
    pub(crate) fn request(&self, prompt: String, call_ordinal: u64) -> GeneratorRequest {
        GeneratorRequest {
            prompt,
            temperature: self.temperature,
            seed: self.seed.map(|s| mix(s, call_ordinal)),
            max_tokens: self.max_tokens.max(1),
        }
    }
}

#[derive(Debug, Clone)]
pub enum FixOutcome {
    /// A corrected, well-typed instance whose field constraints all pass.
    Fixed(Instance),
    /// Attempts exhausted; the full failure history is in the caller's
    /// [`ErrorHistory`].
    Exhausted,
}

/// What one fix attempt did, for trace accounting.
#[derive(Debug, Clone)]
pub struct FixAttempt {
    /// Global attempt index (matches the appended record on failure).
    pub attempt: u32,
    pub response: Option<GeneratorResponse>,
    pub fixed: bool,
    pub failure: Option<String>,
}

#[derive(Debug)]
pub struct FixResult {
    pub outcome: FixOutcome,
    pub attempts: Vec<FixAttempt>,
}

/// Drives a bounded fix loop: each attempt issues one corrective prompt
/// built from the candidate, the target schema, and the full error history,
/// then parses and validates the reply. Returns on the first well-typed
/// instance; each failed attempt (including transport errors, which consume
/// attempts) appends exactly one record to `history`.
///
/// Requires `policy.remediation_enabled`; issues at most
/// `policy.max_attempts` generator calls.
pub fn fix_instance(
    target_schema: &Arc<TypeSchema>,
    candidate: &FixCandidate,
    history: &mut ErrorHistory,
    generator: &dyn Generator,
    policy: &RetryPolicy,
    settings: &GenerationSettings,
) -> FixResult {
    fix_instance_at(
        target_schema,
        candidate,
        history,
        generator,
        policy,
        settings,
        0,
        Phase::FixIn,
        &mut 0,
    )
}

/// Extended entry point used by the execution engine. `attempt_offset` is
/// how many of the policy's attempts the original try already consumed
/// (1 inside `execute`, 0 standalone); `call_ordinal` numbers generator
/// calls across the whole execution for seed derivation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fix_instance_at(
    target_schema: &Arc<TypeSchema>,
    candidate: &FixCandidate,
    history: &mut ErrorHistory,
    generator: &dyn Generator,
    policy: &RetryPolicy,
    settings: &GenerationSettings,
    attempt_offset: u32,
    phase: Phase,
    call_ordinal: &mut u64,
) -> FixResult {
    debug_assert!(policy.remediation_enabled, "fixing requires remediation");
    let mut attempts = Vec::new();
    let base_prompt = fix_candidate_base(candidate);
    let schema_prompt = render_schema_prompt(target_schema);
    let budget = policy.max_attempts.saturating_sub(attempt_offset);

    for call in 1..=budget {
        let policy_attempt = attempt_offset + call;
        if policy_attempt >= 2 {
            let delay = next_delay(policy, policy_attempt);
            if !delay.is_zero() {
                std::thread::sleep(delay);
            }
        }
        let attempt = history.next_attempt();
        let prompt = build_corrective_prompt(&base_prompt, &schema_prompt, history);
        let request = settings.request(prompt, *call_ordinal);
        *call_ordinal += 1;
        match generator.generate(&request) {
            Err(transport) => {
                let message = format!("transport error: {transport}");
                history.push(ErrorRecord::new(
                    attempt,
                    phase,
                    ErrorSource::Parse,
                    "$",
                    &message,
                    "",
                ));
                attempts.push(FixAttempt {
                    attempt,
                    response: None,
                    fixed: false,
                    failure: Some(message),
                });
            }
            Ok(response) => match parse_output(&response.text, target_schema) {
                Ok(instance) => {
                    attempts.push(FixAttempt {
                        attempt,
                        response: Some(response),
                        fixed: true,
                        failure: None,
                    });
                    return FixResult {
                        outcome: FixOutcome::Fixed(instance),
                        attempts,
                    };
                }
                Err(violations) => {
                    let record =
                        ErrorRecord::from_violations(attempt, phase, &violations, &response.text);
                    let failure = record.message.clone();
                    history.push(record);
                    attempts.push(FixAttempt {
                        attempt,
                        response: Some(response),
                        fixed: false,
                        failure: Some(failure),
                    });
                }
            },
        }
    }
    FixResult {
        outcome: FixOutcome::Exhausted,
        attempts,
    }
}
