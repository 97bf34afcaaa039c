//! Contract-checked execution for text generators.
//!
//! `surety` wraps calls to a text generator (an HTTP chat-completions
//! endpoint, or one of two deterministic test mocks) in an executable
//! contract: inputs and outputs are validated against declared schemas,
//! semantic pre- and post-conditions run on the well-typed values, failures
//! feed bounded remediation loops that ask the generator to correct itself,
//! and an always-run fallback turns unrecoverable failures into a degraded
//! but total result.
//!
//! Because generators are stochastic, contract satisfaction is measured, not
//! proven. The [`metrics`] module estimates per-contract success probability
//! over N seeded runs, factorizes it into per-family pass rates, and compares
//! agents that claim the same contracts.
//!
//! The crate is organized around the execution pipeline:
//!
//! - [`schema`] — the type system: schemas, instances, constraint checking,
//!   prompt rendering, and parsing of generator text into typed instances.
//! - [`contract`] — contracts, agents, the phase machine that executes one
//!   contract call, and its trace.
//! - [`remediation`] — retry policies, error history, corrective prompts,
//!   and the fix loop.
//! - [`generator`] — the generator boundary: scripted mock, seeded Bernoulli
//!   mock, and an OpenAI-compatible HTTP client.
//! - [`metrics`] — Monte Carlo success estimation, family factorization, and
//!   agent comparison.

pub mod contract;
pub mod generator;
pub mod metrics;
pub mod remediation;
pub mod schema;
pub mod seed;

pub use contract::{
    check_postconditions, check_preconditions, execute, finalize, worst_case_generator_calls,
    Agent, Contract, ContractOutcome, ExecutionTrace, FallbackMode, Hyperparameters, Phase,
    PhaseEntry, PhaseOutcome, Predicate, PredicateFailure, PredicateTarget,
};
pub use generator::{
    Generator, GeneratorConfig, GeneratorRequest, GeneratorResponse, TransportError,
};
pub use metrics::{
    compare_agents, estimate_success, factorize_families, AgentReports, EquivalenceVerdict,
    RunRecord, SuccessReport,
};
pub use remediation::{
    build_corrective_prompt, fix_instance, next_delay, ErrorHistory, ErrorRecord, ErrorSource,
    FixCandidate, FixOutcome, GenerationSettings, RetryPolicy,
};
pub use schema::{
    check_schema, parse_output, render_schema_prompt, serialize_instance, validate_instance,
    BaseType, Constraint, FieldSpec, Instance, SchemaError, TypeSchema, Value, Violation,
    ViolationKind,
};
