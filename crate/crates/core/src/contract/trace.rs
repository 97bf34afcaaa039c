//! Execution traces: the per-run record of phases, attempts, failures, and
//! costs, with a self-check for the phase-order invariant and a JSON-lines
//! export.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::remediation::{ErrorHistory, RetryPolicy};

/// Phases of contract execution, in canonical order. `fix-in` repeats while
/// input remediation runs; `fix-out → type-out → post` repeats while output
/// remediation runs; `finalize` always closes the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    TypeIn,
    Pre,
    FixIn,
    Act,
    Generate,
    TypeOut,
    Post,
    FixOut,
    Finalize,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            Phase::TypeIn => "type-in",
            Phase::Pre => "pre",
            Phase::FixIn => "fix-in",
            Phase::Act => "act",
            Phase::Generate => "generate",
            Phase::TypeOut => "type-out",
            Phase::Post => "post",
            Phase::FixOut => "fix-out",
            Phase::Finalize => "finalize",
        };
        f.write_str(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseOutcome {
    Pass,
    Fail,
}

/// One phase-log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub phase: Phase,
    pub attempt: u32,
    pub outcome: PhaseOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Label of the final [`crate::contract::ContractOutcome`], for traces and
/// reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    Validated,
    DegradedRaw,
    DegradedDefault,
    Failed,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            OutcomeKind::Validated => "validated",
            OutcomeKind::DegradedRaw => "degraded-raw",
            OutcomeKind::DegradedDefault => "degraded-default",
            OutcomeKind::Failed => "failed",
        };
        f.write_str(label)
    }
}

/// Result of one postcondition evaluation, kept from the final output
/// attempt so success can be attributed to predicate families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostconditionResult {
    pub predicate: String,
    pub family: String,
    pub passed: bool,
}

/// Complete record of one contract execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub contract_id: String,
    pub phases: Vec<PhaseEntry>,
    pub error_history: ErrorHistory,
    pub generator_calls: u32,
    /// Sum of generator-reported latencies; zero for the mocks, so seeded
    /// mock runs serialize identically.
    pub latency_ms: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub transport_errors: u32,
    pub outcome: OutcomeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_detail: Option<String>,
    /// Per-predicate results of the final post evaluation; empty when the
    /// execution never reached the post phase.
    pub final_postconditions: Vec<PostconditionResult>,
}

impl ExecutionTrace {
    /// Verifies the phase-order invariant: the log is a path through
    ///
    /// ```text
    /// type-in pre? fix-in* act? generate? (type-out post?)?
    ///     (fix-out (type-out post?)?)* finalize
    /// ```
    ///
    /// with finalize appearing exactly once, last.
    pub fn check_phase_order(&self) -> Result<(), String> {
        let labels: Vec<Phase> = self.phases.iter().map(|e| e.phase).collect();
        let finalize_count = labels.iter().filter(|p| **p == Phase::Finalize).count();
        if finalize_count != 1 {
            return Err(format!("expected exactly one finalize, found {finalize_count}"));
        }
        if labels.last() != Some(&Phase::Finalize) {
            return Err("finalize must be the last phase".to_string());
        }

        let mut i = 0;
        let eat = |phase: Phase, i: &mut usize| -> bool {
            if labels.get(*i) == Some(&phase) {
                *i += 1;
                true
            } else {
                false
            }
        };
        if !eat(Phase::TypeIn, &mut i) {
            return Err("log must start with type-in".to_string());
        }
        eat(Phase::Pre, &mut i);
        while eat(Phase::FixIn, &mut i) {}
        eat(Phase::Act, &mut i);
        if eat(Phase::Generate, &mut i) && eat(Phase::TypeOut, &mut i) {
            eat(Phase::Post, &mut i);
        }
        while eat(Phase::FixOut, &mut i) {
            if eat(Phase::TypeOut, &mut i) {
                eat(Phase::Post, &mut i);
            }
        }
        if !eat(Phase::Finalize, &mut i) || i != labels.len() {
            return Err(format!(
                "phase log is not a valid path: {:?}",
                labels.iter().map(|p| p.to_string()).collect::<Vec<_>>()
            ));
        }
        Ok(())
    }

    /// Verifies the termination bound: calls never exceed the policies'
    /// worst case nor the agent's cost cap.
    pub fn check_call_bound(
        &self,
        pre_retry: &RetryPolicy,
        post_retry: &RetryPolicy,
        cost_cap: u32,
    ) -> Result<(), String> {
        let bound = super::worst_case_generator_calls(pre_retry, post_retry);
        if self.generator_calls > bound {
            return Err(format!(
                "generator_calls {} exceeds the policy bound {bound}",
                self.generator_calls
            ));
        }
        if self.generator_calls > cost_cap {
            return Err(format!(
                "generator_calls {} exceeds the cost cap {cost_cap}",
                self.generator_calls
            ));
        }
        Ok(())
    }

    /// JSON-lines export: one phase entry per line, then a summary record.
    /// `run` tags every line when the trace belongs to an estimator run.
    pub fn to_json_lines(&self, run: Option<u32>) -> String {
        let mut out = String::new();
        for entry in &self.phases {
            let mut line = serde_json::json!({
                "contract": self.contract_id,
                "phase": entry.phase,
                "attempt": entry.attempt,
                "outcome": entry.outcome,
            });
            if let Some(detail) = &entry.detail {
                line["detail"] = serde_json::json!(detail);
            }
            if let Some(run) = run {
                line["run"] = serde_json::json!(run);
            }
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let mut summary = serde_json::json!({
            "contract": self.contract_id,
            "summary": true,
            "outcome": self.outcome,
            "generator_calls": self.generator_calls,
            "latency_ms": self.latency_ms,
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
        });
        if let Some(run) = run {
            summary["run"] = serde_json::json!(run);
        }
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}
