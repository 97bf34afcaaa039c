//! The contract execution engine.
//!
//! One call to [`execute`] drives the full phase machine: input type
//! validation, precondition checks, optional input fixing, the act
//! transform, generation, output parsing and validation, postcondition
//! checks with bounded corrective regeneration, and an unconditional
//! finalize. Whatever happens in between, finalize runs exactly once and is
//! the last phase in the trace.

use crate::generator::Generator;
use crate::remediation::{
    build_corrective_prompt, next_delay, ErrorHistory, ErrorRecord, ErrorSource, FixCandidate,
    FixOutcome, GenerationSettings,
};
use crate::schema::{
    parse_output, render_schema_prompt, validate_instance, Instance, Value,
};

use super::trace::{ExecutionTrace, Phase, PhaseEntry, PhaseOutcome, PostconditionResult};
use super::{Agent, Contract, ContractOutcome, FallbackMode, FinalizeInfo, Predicate, PredicateFailure};

/// Evaluates every precondition in declaration order, never short-circuiting.
/// Empty result means pass; failure messages are preserved verbatim.
pub fn check_preconditions(contract: &Contract, input: &Instance) -> Vec<PredicateFailure> {
    collect_failures(&contract.preconditions, input, None)
}

/// Evaluates every postcondition in declaration order over the
/// (input, output) pair, never short-circuiting.
pub fn check_postconditions(
    contract: &Contract,
    input: &Instance,
    output: &Instance,
) -> Vec<PredicateFailure> {
    collect_failures(&contract.postconditions, input, Some(output))
}

fn collect_failures(
    predicates: &[Predicate],
    input: &Instance,
    output: Option<&Instance>,
) -> Vec<PredicateFailure> {
    predicates
        .iter()
        .filter_map(|predicate| {
            predicate
                .evaluate(input, output)
                .err()
                .map(|message| PredicateFailure {
                    predicate: predicate.name.clone(),
                    family: predicate.family.clone(),
                    message,
                })
        })
        .collect()
}

/// Applies the contract's act transform: identity when absent, otherwise the
/// transform result re-validated against the act's declared schema. Act
/// failures are not remediated — the transform is deterministic user code —
/// so an error here routes the execution to finalize.
pub fn apply_act(contract: &Contract, input: &Instance) -> Result<Instance, String> {
    let Some(act) = &contract.act else {
        return Ok(input.clone());
    };
    let value = act
        .transform(input)
        .map_err(|message| format!("act transform failed: {message}"))?;
    Instance::new(act.schema.clone(), value).map_err(|violations| {
        let joined: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        format!("act output failed validation: {}", joined.join("; "))
    })
}

/// Partial results carried into [`finalize`].
#[derive(Debug, Clone, Default)]
pub struct FinalizeState {
    pub validated: Option<Instance>,
    /// Last raw generator text, if generation ran at all.
    pub last_raw_text: Option<String>,
    pub error_summary: Option<String>,
}

#[derive(Debug)]
pub struct FinalizeResult {
    pub outcome: ContractOutcome,
    /// Error returned by the finalize hook, if any; the outcome is produced
    /// regardless.
    pub hook_error: Option<String>,
}

/// Maps the terminal state to an outcome under `mode` and invokes the
/// contract's finalize hook exactly once. Callable from every phase,
/// including after internal errors: a missing raw text degrades to the empty
/// string, a missing summary to a generic message, and a failing hook is
/// caught and reported alongside the outcome.
pub fn finalize(contract: &Contract, state: FinalizeState, mode: &FallbackMode) -> FinalizeResult {
    let error_summary = state
        .error_summary
        .unwrap_or_else(|| "contract failed".to_string());
    let outcome = match state.validated {
        Some(instance) => ContractOutcome::Validated(instance),
        None => match mode {
            FallbackMode::Strict => ContractOutcome::Failed(error_summary.clone()),
            FallbackMode::GracefulRaw => {
                ContractOutcome::DegradedRaw(state.last_raw_text.unwrap_or_default())
            }
            FallbackMode::GracefulDefault(default) => {
                ContractOutcome::DegradedDefault(default.clone())
            }
        },
    };
    let hook_error = contract.on_finalize.as_ref().and_then(|hook| {
        let info = FinalizeInfo {
            validated: outcome.validated(),
            error_summary: match &outcome {
                ContractOutcome::Validated(_) => None,
                _ => Some(error_summary.as_str()),
            },
        };
        hook(&info).err()
    });
    FinalizeResult { outcome, hook_error }
}

/// Executes one contract against one input value.
///
/// Phases run in the canonical order; any unremediated failure jumps to
/// finalize, which always runs exactly once and closes the trace. In strict
/// mode an unsatisfied contract surfaces as [`ContractOutcome::Failed`]
/// (after finalize); the graceful modes always return a usable outcome.
/// Generator calls are bounded by the retry policies and, as a hard
/// backstop, by the agent's cost cap.
pub fn execute(
    contract: &Contract,
    agent: &Agent,
    generator: &dyn Generator,
    input: &Value,
) -> (ContractOutcome, ExecutionTrace) {
    let settings = GenerationSettings {
        temperature: agent.hyperparameters.temperature,
        seed: agent.hyperparameters.seed,
        max_tokens: agent.hyperparameters.max_tokens,
    };
    let mut engine = Engine {
        contract,
        agent,
        generator,
        settings,
        phases: Vec::new(),
        history: ErrorHistory::new(),
        generator_calls: 0,
        latency_ms: 0,
        tokens_in: 0,
        tokens_out: 0,
        transport_errors: 0,
        call_ordinal: 0,
        last_attempt: 1,
        last_raw: None,
        error_summary: None,
        final_postconditions: Vec::new(),
    };

    let validated = engine.pipeline(input);

    let state = FinalizeState {
        validated,
        last_raw_text: engine.last_raw.clone(),
        error_summary: engine.error_summary.clone(),
    };
    let result = finalize(contract, state, &contract.fallback);
    let finalize_detail = result
        .hook_error
        .as_ref()
        .map(|e| format!("finalize hook error: {e}"));
    engine.log(Phase::Finalize, engine.last_attempt, PhaseOutcome::Pass, finalize_detail);

    let outcome_detail = match &result.outcome {
        ContractOutcome::Validated(_) => None,
        _ => engine.error_summary.clone(),
    };
    let trace = ExecutionTrace {
        contract_id: contract.id.clone(),
        phases: engine.phases,
        error_history: engine.history,
        generator_calls: engine.generator_calls,
        latency_ms: engine.latency_ms,
        tokens_in: engine.tokens_in,
        tokens_out: engine.tokens_out,
        transport_errors: engine.transport_errors,
        outcome: result.outcome.kind(),
        outcome_detail,
        final_postconditions: engine.final_postconditions,
    };
    (result.outcome, trace)
}

struct Engine<'a> {
    contract: &'a Contract,
    agent: &'a Agent,
    generator: &'a dyn Generator,
    settings: GenerationSettings,
    phases: Vec<PhaseEntry>,
    history: ErrorHistory,
    generator_calls: u32,
    latency_ms: u64,
    tokens_in: u64,
    tokens_out: u64,
    transport_errors: u32,
    call_ordinal: u64,
    /// Attempt index of the most recently started try; finalize logs it.
    last_attempt: u32,
    last_raw: Option<String>,
    error_summary: Option<String>,
    final_postconditions: Vec<PostconditionResult>,
}

impl Engine<'_> {
    fn log(&mut self, phase: Phase, attempt: u32, outcome: PhaseOutcome, detail: Option<String>) {
        self.phases.push(PhaseEntry {
            phase,
            attempt,
            outcome,
            detail,
        });
    }

    fn budget_left(&self) -> u32 {
        self.agent
            .hyperparameters
            .cost_cap
            .saturating_sub(self.generator_calls)
    }

    fn account(&mut self, response: &crate::generator::GeneratorResponse) {
        self.tokens_in += response.tokens_in;
        self.tokens_out += response.tokens_out;
        self.latency_ms += response.latency.as_millis() as u64;
    }

    /// Runs every phase before finalize. Returns the validated output, or
    /// `None` with `error_summary` set.
    fn pipeline(&mut self, input: &Value) -> Option<Instance> {
        let input_instance = self.input_phases(input)?;
        let context = self.act_phase(&input_instance)?;
        self.output_phases(&input_instance, &context)
    }

    /// type-in, pre, and the fix-in loop. Preconditions run once, on inputs
    /// that type-check directly; a fixed input is guaranteed type-valid with
    /// all field constraints satisfied and proceeds without a re-check.
    fn input_phases(&mut self, input: &Value) -> Option<Instance> {
        let violations = validate_instance(&self.contract.input_schema, input);
        if violations.is_empty() {
            self.log(Phase::TypeIn, 1, PhaseOutcome::Pass, None);
            let instance = Instance::new(self.contract.input_schema.clone(), input.clone())
                .expect("value just validated");
            let failures = check_preconditions(self.contract, &instance);
            if failures.is_empty() {
                self.log(Phase::Pre, 1, PhaseOutcome::Pass, None);
                return Some(instance);
            }
            let record = record_from_predicates(1, Phase::Pre, ErrorSource::Precondition, &failures);
            self.log(Phase::Pre, 1, PhaseOutcome::Fail, Some(record.message.clone()));
            self.error_summary = Some(format!("preconditions failed: {}", record.message));
            self.history.push(record);
        } else {
            let record = ErrorRecord::from_violations(1, Phase::TypeIn, &violations, "");
            self.log(Phase::TypeIn, 1, PhaseOutcome::Fail, Some(record.message.clone()));
            self.error_summary = Some(format!("input validation failed: {}", record.message));
            self.history.push(record);
        }
        self.fix_input(input)
    }

    fn fix_input(&mut self, input: &Value) -> Option<Instance> {
        let policy = &self.contract.pre_retry;
        if !policy.remediation_enabled || policy.max_attempts <= 1 || self.budget_left() == 0 {
            return None;
        }
        // The original try consumed attempt 1 of the policy; the loop may
        // not exceed the remaining call budget either.
        let mut effective = policy.clone();
        effective.max_attempts = effective.max_attempts.min(self.budget_left() + 1);
        let candidate = FixCandidate::Value(input.clone());
        let result = crate::remediation::fix_instance_at(
            &self.contract.input_schema,
            &candidate,
            &mut self.history,
            self.generator,
            &effective,
            &self.settings,
            1,
            Phase::FixIn,
            &mut self.call_ordinal,
        );
        for attempt in &result.attempts {
            self.generator_calls += 1;
            self.last_attempt = attempt.attempt;
            match &attempt.response {
                Some(response) => self.account(response),
                None => self.transport_errors += 1,
            }
            let outcome = if attempt.fixed {
                PhaseOutcome::Pass
            } else {
                PhaseOutcome::Fail
            };
            self.log(Phase::FixIn, attempt.attempt, outcome, attempt.failure.clone());
        }
        match result.outcome {
            FixOutcome::Fixed(instance) => Some(instance),
            FixOutcome::Exhausted => {
                self.error_summary = Some(format!(
                    "input remediation exhausted after {} attempts",
                    self.history.len()
                ));
                None
            }
        }
    }

    fn act_phase(&mut self, input: &Instance) -> Option<Instance> {
        if self.contract.act.is_none() {
            return Some(input.clone());
        }
        let attempt = self.history.next_attempt();
        self.last_attempt = attempt;
        match apply_act(self.contract, input) {
            Ok(context) => {
                self.log(Phase::Act, attempt, PhaseOutcome::Pass, None);
                Some(context)
            }
            Err(message) => {
                self.log(Phase::Act, attempt, PhaseOutcome::Fail, Some(message.clone()));
                self.error_summary = Some(message);
                None
            }
        }
    }

    /// generate, type-out, post, and the fix-out loop. Each output attempt
    /// is one generator call; after every fix, type validation and all
    /// postconditions re-run in full.
    fn output_phases(&mut self, input: &Instance, context: &Instance) -> Option<Instance> {
        let base_prompt = generation_base_prompt(self.agent, self.contract, context);
        let schema_prompt = render_schema_prompt(&self.contract.output_schema);
        let policy = &self.contract.post_retry;
        let max_tries = if policy.remediation_enabled {
            policy.max_attempts
        } else {
            1
        };

        for try_index in 1..=max_tries {
            if self.budget_left() == 0 {
                self.error_summary = Some(format!(
                    "generator call cap ({}) reached",
                    self.agent.hyperparameters.cost_cap
                ));
                return None;
            }
            if try_index >= 2 {
                let delay = next_delay(policy, try_index);
                if !delay.is_zero() {
                    std::thread::sleep(delay);
                }
            }
            let attempt = self.history.next_attempt();
            self.last_attempt = attempt;
            let phase = if try_index == 1 {
                Phase::Generate
            } else {
                Phase::FixOut
            };
            let prompt = if try_index == 1 {
                format!("{base_prompt}\n\n{schema_prompt}")
            } else {
                build_corrective_prompt(&base_prompt, &schema_prompt, &self.history)
            };
            let request = self.settings.request(prompt, self.call_ordinal);
            self.call_ordinal += 1;
            self.generator_calls += 1;

            let response = match self.generator.generate(&request) {
                Err(transport) => {
                    self.transport_errors += 1;
                    let message = format!("transport error: {transport}");
                    self.log(phase, attempt, PhaseOutcome::Fail, Some(message.clone()));
                    self.error_summary = Some(message.clone());
                    self.history.push(ErrorRecord::new(
                        attempt,
                        phase,
                        ErrorSource::Parse,
                        "$",
                        &message,
                        "",
                    ));
                    continue;
                }
                Ok(response) => {
                    self.log(phase, attempt, PhaseOutcome::Pass, None);
                    self.account(&response);
                    self.last_raw = Some(response.text.clone());
                    response
                }
            };

            let output = match parse_output(&response.text, &self.contract.output_schema) {
                Err(violations) => {
                    let record =
                        ErrorRecord::from_violations(attempt, Phase::TypeOut, &violations, &response.text);
                    self.log(Phase::TypeOut, attempt, PhaseOutcome::Fail, Some(record.message.clone()));
                    self.error_summary =
                        Some(format!("output validation failed: {}", record.message));
                    self.history.push(record);
                    continue;
                }
                Ok(output) => {
                    self.log(Phase::TypeOut, attempt, PhaseOutcome::Pass, None);
                    output
                }
            };

            let mut failures = Vec::new();
            self.final_postconditions.clear();
            for predicate in &self.contract.postconditions {
                let result = predicate.evaluate(input, Some(&output));
                self.final_postconditions.push(PostconditionResult {
                    predicate: predicate.name.clone(),
                    family: predicate.family.clone(),
                    passed: result.is_ok(),
                });
                if let Err(message) = result {
                    failures.push(PredicateFailure {
                        predicate: predicate.name.clone(),
                        family: predicate.family.clone(),
                        message,
                    });
                }
            }
            if failures.is_empty() {
                self.log(Phase::Post, attempt, PhaseOutcome::Pass, None);
                return Some(output);
            }
            let mut record =
                record_from_predicates(attempt, Phase::Post, ErrorSource::Postcondition, &failures);
            record.raw_excerpt = crate::remediation::excerpt(&response.text);
            self.log(Phase::Post, attempt, PhaseOutcome::Fail, Some(record.message.clone()));
            self.error_summary = Some(format!("postconditions failed: {}", record.message));
            self.history.push(record);
        }
        if self.error_summary.is_none() {
            self.error_summary = Some("output remediation exhausted".to_string());
        }
        None
    }
}

/// Instructions, contract prompt, and serialized input context — everything
/// before the output-schema rendering.
fn generation_base_prompt(agent: &Agent, contract: &Contract, context: &Instance) -> String {
    let mut parts: Vec<String> = Vec::new();
    if !agent.instructions.is_empty() {
        parts.push(agent.instructions.join("\n"));
    }
    if !contract.prompt.is_empty() {
        parts.push(contract.prompt.clone());
    }
    parts.push(format!("Input:\n{}", context.canonical_json()));
    parts.join("\n\n")
}

/// Collapses one attempt's predicate failures into a single record.
fn record_from_predicates(
    attempt: u32,
    phase: Phase,
    source: ErrorSource,
    failures: &[PredicateFailure],
) -> ErrorRecord {
    debug_assert!(!failures.is_empty());
    let (names, message) = if failures.len() == 1 {
        (failures[0].predicate.clone(), failures[0].message.clone())
    } else {
        let names: Vec<&str> = failures.iter().map(|f| f.predicate.as_str()).collect();
        let messages: Vec<String> = failures
            .iter()
            .map(|f| format!("{}: {}", f.predicate, f.message))
            .collect();
        (names.join(", "), messages.join("; "))
    };
    ErrorRecord::new(attempt, phase, source, names, message, "")
}
