//! Contracts, agents, and the execution phase machine.
//!
//! A [`Contract`] packages the schemas, prompt fragment, pre/post
//! [`Predicate`]s, optional act transform, retry policies, and fallback mode
//! for one generative operation. An [`Agent`] binds generator configs,
//! instructions, hyperparameters, schemas, and contracts into the unit that
//! [`execute`] runs and [`crate::metrics`] measures.

mod execute;
mod trace;

pub use execute::{
    apply_act, check_postconditions, check_preconditions, execute, finalize, FinalizeResult,
    FinalizeState,
};
pub use trace::{
    ExecutionTrace, OutcomeKind, Phase, PhaseEntry, PhaseOutcome, PostconditionResult,
};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::remediation::RetryPolicy;
use crate::schema::{check_schema, validate_instance, Instance, TypeSchema, Value};

/// What a predicate sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateTarget {
    /// The well-typed input instance (preconditions).
    Input,
    /// The well-typed output instance (postconditions).
    Output,
    /// Both, for cross-checking output against input (postconditions).
    InputOutput,
}

impl fmt::Display for PredicateTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredicateTarget::Input => "input",
            PredicateTarget::Output => "output",
            PredicateTarget::InputOutput => "input+output",
        })
    }
}

/// Evaluator signature: preconditions receive `(input, None)`, postconditions
/// `(input, Some(output))`. Return `Err` with a descriptive message to signal
/// a violation — the message travels verbatim into error histories and
/// corrective prompts.
pub type PredicateFn =
    Arc<dyn Fn(&Instance, Option<&Instance>) -> Result<(), String> + Send + Sync>;

/// A named semantic check over well-typed instances, tagged with a family
/// for success-probability factorization.
#[derive(Clone)]
pub struct Predicate {
    pub name: String,
    pub family: String,
    pub target: PredicateTarget,
    evaluator: PredicateFn,
}

impl Predicate {
    pub fn new(
        name: impl Into<String>,
        family: impl Into<String>,
        target: PredicateTarget,
        evaluator: impl Fn(&Instance, Option<&Instance>) -> Result<(), String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            family: family.into(),
            target,
            evaluator: Arc::new(evaluator),
        }
    }

    /// Runs the evaluator; an empty failure message is replaced so the
    /// non-empty-message invariant holds for every failure.
    pub fn evaluate(&self, input: &Instance, output: Option<&Instance>) -> Result<(), String> {
        (self.evaluator)(input, output).map_err(|message| {
            if message.is_empty() {
                format!("predicate {} failed", self.name)
            } else {
                message
            }
        })
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predicate")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

/// A named precondition/postcondition failure.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateFailure {
    pub predicate: String,
    pub family: String,
    pub message: String,
}

/// What the caller gets when the contract cannot be satisfied.
#[derive(Debug, Clone, PartialEq)]
pub enum FallbackMode {
    /// Surface a `failed` outcome.
    Strict,
    /// Return the last raw generator text as-is (empty when generation never
    /// ran).
    GracefulRaw,
    /// Return a safe, type-compliant default.
    GracefulDefault(Instance),
}

impl FallbackMode {
    fn label(&self) -> &'static str {
        match self {
            FallbackMode::Strict => "strict",
            FallbackMode::GracefulRaw => "graceful-raw",
            FallbackMode::GracefulDefault(_) => "graceful-default",
        }
    }
}

impl fmt::Display for FallbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Act transform signature: the result is re-validated against the act's
/// declared schema.
pub type ActFn = Arc<dyn Fn(&Instance) -> Result<Value, String> + Send + Sync>;

/// Optional intermediate transform between precondition checking and
/// generation. Its result is re-validated against `schema` and becomes the
/// generation context.
#[derive(Clone)]
pub struct Act {
    pub schema: Arc<TypeSchema>,
    transform: ActFn,
}

impl Act {
    pub fn new(
        schema: Arc<TypeSchema>,
        transform: impl Fn(&Instance) -> Result<Value, String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            schema,
            transform: Arc::new(transform),
        }
    }

    pub fn transform(&self, input: &Instance) -> Result<Value, String> {
        (self.transform)(input)
    }
}

impl fmt::Debug for Act {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Act").field("schema", &self.schema.name).finish_non_exhaustive()
    }
}

/// Hook invoked exactly once during finalize, with either the validated
/// output or the error summary. Failures of the hook itself are caught and
/// recorded in the trace.
pub type FinalizeHook = Arc<dyn Fn(&FinalizeInfo<'_>) -> Result<(), String> + Send + Sync>;

/// What the finalize hook sees.
#[derive(Debug)]
pub struct FinalizeInfo<'a> {
    pub validated: Option<&'a Instance>,
    pub error_summary: Option<&'a str>,
}

/// One generative operation's obligations: schemas, prompt fragment,
/// predicates, optional act, retry policies, and fallback mode.
#[derive(Clone)]
pub struct Contract {
    pub id: String,
    pub input_schema: Arc<TypeSchema>,
    pub output_schema: Arc<TypeSchema>,
    /// This contract's contribution to the generation prompt.
    pub prompt: String,
    pub preconditions: Vec<Predicate>,
    pub postconditions: Vec<Predicate>,
    pub act: Option<Act>,
    pub pre_retry: RetryPolicy,
    pub post_retry: RetryPolicy,
    pub fallback: FallbackMode,
    pub on_finalize: Option<FinalizeHook>,
}

impl fmt::Debug for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Contract")
            .field("id", &self.id)
            .field("input_schema", &self.input_schema.name)
            .field("output_schema", &self.output_schema.name)
            .field("preconditions", &self.preconditions.len())
            .field("postconditions", &self.postconditions.len())
            .field("fallback", &self.fallback.label())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Error)]
pub enum ContractError {
    #[error("contract {id}: invalid {which} schema: {errors:?}")]
    Schema {
        id: String,
        which: &'static str,
        errors: Vec<crate::schema::SchemaError>,
    },
    #[error("contract {id}: duplicate predicate name {name:?}")]
    DuplicatePredicate { id: String, name: String },
    #[error("contract {id}: predicate {name:?} has an empty {what}")]
    EmptyPredicateField {
        id: String,
        name: String,
        what: &'static str,
    },
    #[error("contract {id}: {which} {name:?} has illegal target {target}")]
    BadTarget {
        id: String,
        which: &'static str,
        name: String,
        target: String,
    },
    #[error("contract {id}: invalid retry policy: {message}")]
    Policy { id: String, message: String },
    #[error("contract {id}: graceful-default instance does not satisfy the output schema")]
    BadDefault { id: String },
}

impl Contract {
    pub fn builder(
        id: impl Into<String>,
        input_schema: Arc<TypeSchema>,
        output_schema: Arc<TypeSchema>,
    ) -> ContractBuilder {
        ContractBuilder {
            contract: Contract {
                id: id.into(),
                input_schema,
                output_schema,
                prompt: String::new(),
                preconditions: Vec::new(),
                postconditions: Vec::new(),
                act: None,
                pre_retry: RetryPolicy::default(),
                post_retry: RetryPolicy::default(),
                fallback: FallbackMode::Strict,
                on_finalize: None,
            },
        }
    }

    fn validate(&self) -> Result<(), ContractError> {
        for (which, schema) in [("input", &self.input_schema), ("output", &self.output_schema)] {
            if let Err(errors) = check_schema(schema) {
                return Err(ContractError::Schema {
                    id: self.id.clone(),
                    which,
                    errors,
                });
            }
        }
        if let Some(act) = &self.act {
            if let Err(errors) = check_schema(&act.schema) {
                return Err(ContractError::Schema {
                    id: self.id.clone(),
                    which: "act",
                    errors,
                });
            }
        }
        let mut names = std::collections::HashSet::new();
        for predicate in self.preconditions.iter().chain(&self.postconditions) {
            if predicate.name.is_empty() {
                return Err(ContractError::EmptyPredicateField {
                    id: self.id.clone(),
                    name: predicate.name.clone(),
                    what: "name",
                });
            }
            if predicate.family.is_empty() {
                return Err(ContractError::EmptyPredicateField {
                    id: self.id.clone(),
                    name: predicate.name.clone(),
                    what: "family",
                });
            }
            if !names.insert(predicate.name.clone()) {
                return Err(ContractError::DuplicatePredicate {
                    id: self.id.clone(),
                    name: predicate.name.clone(),
                });
            }
        }
        for predicate in &self.preconditions {
            if predicate.target != PredicateTarget::Input {
                return Err(ContractError::BadTarget {
                    id: self.id.clone(),
                    which: "precondition",
                    name: predicate.name.clone(),
                    target: predicate.target.to_string(),
                });
            }
        }
        for predicate in &self.postconditions {
            if predicate.target == PredicateTarget::Input {
                return Err(ContractError::BadTarget {
                    id: self.id.clone(),
                    which: "postcondition",
                    name: predicate.name.clone(),
                    target: predicate.target.to_string(),
                });
            }
        }
        for (which, policy) in [("pre_retry", &self.pre_retry), ("post_retry", &self.post_retry)] {
            policy.validate().map_err(|message| ContractError::Policy {
                id: self.id.clone(),
                message: format!("{which}: {message}"),
            })?;
        }
        if let FallbackMode::GracefulDefault(instance) = &self.fallback {
            let ok = instance.schema().name == self.output_schema.name
                && validate_instance(&self.output_schema, instance.value()).is_empty();
            if !ok {
                return Err(ContractError::BadDefault { id: self.id.clone() });
            }
        }
        Ok(())
    }
}

pub struct ContractBuilder {
    contract: Contract,
}

impl ContractBuilder {
    pub fn prompt(mut self, prompt: impl Into<String>) -> Self {
        self.contract.prompt = prompt.into();
        self
    }

    pub fn precondition(mut self, predicate: Predicate) -> Self {
        self.contract.preconditions.push(predicate);
        self
    }

    pub fn postcondition(mut self, predicate: Predicate) -> Self {
        self.contract.postconditions.push(predicate);
        self
    }

    pub fn act(mut self, act: Act) -> Self {
        self.contract.act = Some(act);
        self
    }

    pub fn pre_retry(mut self, policy: RetryPolicy) -> Self {
        self.contract.pre_retry = policy;
        self
    }

    pub fn post_retry(mut self, policy: RetryPolicy) -> Self {
        self.contract.post_retry = policy;
        self
    }

    pub fn fallback(mut self, mode: FallbackMode) -> Self {
        self.contract.fallback = mode;
        self
    }

    pub fn on_finalize(
        mut self,
        hook: impl Fn(&FinalizeInfo<'_>) -> Result<(), String> + Send + Sync + 'static,
    ) -> Self {
        self.contract.on_finalize = Some(Arc::new(hook));
        self
    }

    pub fn build(self) -> Result<Contract, ContractError> {
        self.contract.validate()?;
        Ok(self.contract)
    }
}

/// Hyperparameters governing executions: sampling temperature, base seed,
/// default retry policies, and the hard cap on generator calls per
/// execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub temperature: f64,
    pub seed: Option<u64>,
    pub default_pre_retry: RetryPolicy,
    pub default_post_retry: RetryPolicy,
    /// Maximum generator calls in one execution; enforced at runtime and
    /// statically against every contract's worst case.
    pub cost_cap: u32,
    pub max_tokens: u32,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            seed: None,
            default_pre_retry: RetryPolicy::default(),
            default_post_retry: RetryPolicy::default(),
            cost_cap: 16,
            max_tokens: 1024,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), String> {
        if self.temperature < 0.0 || !self.temperature.is_finite() {
            return Err("temperature must be a finite value ≥ 0".to_string());
        }
        if self.cost_cap < 1 {
            return Err("cost cap must be at least 1".to_string());
        }
        if self.max_tokens < 1 {
            return Err("max_tokens must be at least 1".to_string());
        }
        self.default_pre_retry.validate()?;
        self.default_post_retry.validate()
    }
}

/// Worst-case generator calls for one execution under the given policies:
/// up to `max_attempts − 1` input-fix calls, then up to `max_attempts`
/// output-producing calls (the initial generation plus corrective
/// regenerations). Disabled remediation contributes a single attempt.
pub fn worst_case_generator_calls(pre_retry: &RetryPolicy, post_retry: &RetryPolicy) -> u32 {
    let input_calls = if pre_retry.remediation_enabled {
        pre_retry.max_attempts.saturating_sub(1)
    } else {
        0
    };
    let output_calls = if post_retry.remediation_enabled {
        post_retry.max_attempts
    } else {
        1
    };
    input_calls + output_calls
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("agent: {0}")]
    Invalid(String),
    #[error("agent: schema {schema:?} referenced by contract {contract:?} is not registered")]
    MissingSchema { contract: String, schema: String },
    #[error(
        "agent: contract {contract:?} can make up to {worst_case} generator calls, above the cost cap {cap}"
    )]
    CostCapExceeded {
        contract: String,
        worst_case: u32,
        cap: u32,
    },
}

/// The agent tuple: generator configs, instructions, hyperparameters, the
/// schemas it handles, and the contracts it must satisfy.
#[derive(Debug, Clone)]
pub struct Agent {
    pub generators: Vec<crate::generator::GeneratorConfig>,
    pub instructions: Vec<String>,
    pub hyperparameters: Hyperparameters,
    pub schemas: Vec<Arc<TypeSchema>>,
    pub contracts: Vec<Arc<Contract>>,
}

impl Agent {
    /// Validates the tuple: at least one generator, valid hyperparameters,
    /// every contract schema registered, and every contract's worst-case
    /// call count within the cost cap.
    pub fn new(
        generators: Vec<crate::generator::GeneratorConfig>,
        instructions: Vec<String>,
        hyperparameters: Hyperparameters,
        schemas: Vec<Arc<TypeSchema>>,
        contracts: Vec<Arc<Contract>>,
    ) -> Result<Self, AgentError> {
        if generators.is_empty() {
            return Err(AgentError::Invalid(
                "at least one generator config is required".to_string(),
            ));
        }
        hyperparameters.validate().map_err(AgentError::Invalid)?;
        let registered: std::collections::HashSet<&str> =
            schemas.iter().map(|s| s.name.as_str()).collect();
        for contract in &contracts {
            let mut referenced = vec![&contract.input_schema, &contract.output_schema];
            if let Some(act) = &contract.act {
                referenced.push(&act.schema);
            }
            for schema in referenced {
                if !registered.contains(schema.name.as_str()) {
                    return Err(AgentError::MissingSchema {
                        contract: contract.id.clone(),
                        schema: schema.name.clone(),
                    });
                }
            }
            let worst_case = worst_case_generator_calls(&contract.pre_retry, &contract.post_retry);
            if worst_case > hyperparameters.cost_cap {
                return Err(AgentError::CostCapExceeded {
                    contract: contract.id.clone(),
                    worst_case,
                    cap: hyperparameters.cost_cap,
                });
            }
        }
        Ok(Self {
            generators,
            instructions,
            hyperparameters,
            schemas,
            contracts,
        })
    }

    /// Copy of this agent with a different base seed. The estimator uses
    /// this to derive per-run seeds.
    pub fn with_seed(&self, seed: u64) -> Agent {
        let mut agent = self.clone();
        agent.hyperparameters.seed = Some(seed);
        agent
    }

    pub fn contract(&self, id: &str) -> Option<&Arc<Contract>> {
        self.contracts.iter().find(|c| c.id == id)
    }
}

/// Outcome of one contract execution.
///
/// `Validated` instances re-validate cleanly and satisfy every
/// postcondition; `Failed` occurs only under strict fallback; the degraded
/// variants are the graceful modes' totality guarantee.
#[derive(Debug, Clone, PartialEq)]
pub enum ContractOutcome {
    Validated(Instance),
    DegradedRaw(String),
    DegradedDefault(Instance),
    Failed(String),
}

impl ContractOutcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            ContractOutcome::Validated(_) => OutcomeKind::Validated,
            ContractOutcome::DegradedRaw(_) => OutcomeKind::DegradedRaw,
            ContractOutcome::DegradedDefault(_) => OutcomeKind::DegradedDefault,
            ContractOutcome::Failed(_) => OutcomeKind::Failed,
        }
    }

    pub fn validated(&self) -> Option<&Instance> {
        match self {
            ContractOutcome::Validated(instance) => Some(instance),
            _ => None,
        }
    }
}
