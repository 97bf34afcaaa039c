//! Turns a validated [`SuiteFile`] into executable engine objects.

use std::collections::BTreeMap;
use std::sync::Arc;

use surety::contract::{
    worst_case_generator_calls, Act, Agent, Contract, FallbackMode, Hyperparameters,
};
use surety::schema::{check_schema, BaseType, Instance, TypeSchema, Value};

use crate::{ActOp, ActSpec, ContractSpec, FallbackSpec, SuiteError, SuiteFile, TargetSpec};

/// One contract ready to run: the compiled contract, its pass threshold, and
/// its input corpus.
#[derive(Debug)]
pub struct RunnableContract {
    pub contract: Arc<Contract>,
    pub threshold: f64,
    pub inputs: Vec<Value>,
}

/// A fully resolved suite.
#[derive(Debug)]
pub struct RunnableSuite {
    pub name: String,
    pub agent: Agent,
    pub contracts: Vec<RunnableContract>,
}

/// Validates every cross-reference and compiles the suite. All problems are
/// collected and reported together.
pub fn assemble(suite: &SuiteFile) -> Result<RunnableSuite, SuiteError> {
    let mut errors = Vec::new();

    let mut schemas: BTreeMap<&str, Arc<TypeSchema>> = BTreeMap::new();
    for schema in &suite.schemas {
        if let Err(schema_errors) = check_schema(schema) {
            for error in schema_errors {
                errors.push(format!("schema {}: {error}", schema.name));
            }
        }
        if schemas
            .insert(schema.name.as_str(), Arc::new(schema.clone()))
            .is_some()
        {
            errors.push(format!("duplicate schema name {:?}", schema.name));
        }
    }

    if suite.run.runs < 1 {
        errors.push("run.runs must be at least 1".to_string());
    }
    if !(0.0..=1.0).contains(&suite.run.threshold) {
        errors.push("run.threshold must lie in [0, 1]".to_string());
    }

    let mut contracts = Vec::new();
    let mut seen_ids = std::collections::HashSet::new();
    for spec in &suite.contracts {
        if !seen_ids.insert(spec.id.as_str()) {
            errors.push(format!("duplicate contract id {:?}", spec.id));
        }
        match assemble_contract(suite, spec, &schemas, &mut errors) {
            Some(runnable) => contracts.push(runnable),
            None => continue,
        }
    }

    if !errors.is_empty() {
        return Err(SuiteError::Config(errors));
    }

    let cost_cap = suite.agent.cost_cap.unwrap_or_else(|| {
        contracts
            .iter()
            .map(|c| worst_case_generator_calls(&c.contract.pre_retry, &c.contract.post_retry))
            .max()
            .unwrap_or(1)
            .max(1)
    });
    let hyperparameters = Hyperparameters {
        temperature: suite.agent.temperature,
        seed: suite.agent.seed,
        default_pre_retry: suite.agent.default_pre_retry.clone(),
        default_post_retry: suite.agent.default_post_retry.clone(),
        cost_cap,
        max_tokens: suite.agent.max_tokens,
    };
    let mut generators = vec![suite.generator.clone()];
    generators.extend(suite.alternates.values().cloned());
    let agent = Agent::new(
        generators,
        suite.agent.instructions.clone(),
        hyperparameters,
        schemas.values().cloned().collect(),
        contracts.iter().map(|c| c.contract.clone()).collect(),
    )
    .map_err(|e| SuiteError::config(e.to_string()))?;

    Ok(RunnableSuite {
        name: suite.name.clone(),
        agent,
        contracts,
    })
}

fn assemble_contract(
    suite: &SuiteFile,
    spec: &ContractSpec,
    schemas: &BTreeMap<&str, Arc<TypeSchema>>,
    errors: &mut Vec<String>,
) -> Option<RunnableContract> {
    let before = errors.len();

    let resolve = |name: &str, errors: &mut Vec<String>| -> Option<Arc<TypeSchema>> {
        match schemas.get(name) {
            Some(schema) => Some(schema.clone()),
            None => {
                errors.push(format!(
                    "contract {}: unknown schema reference {name:?}",
                    spec.id
                ));
                None
            }
        }
    };
    let input_schema = resolve(&spec.input_schema, errors);
    let output_schema = resolve(&spec.output_schema, errors);

    if spec.inputs.is_empty() {
        errors.push(format!(
            "contract {}: the input corpus must not be empty",
            spec.id
        ));
    }
    if let Some(threshold) = spec.threshold {
        if !(0.0..=1.0).contains(&threshold) {
            errors.push(format!("contract {}: threshold must lie in [0, 1]", spec.id));
        }
    }

    let (input_schema, output_schema) = (input_schema?, output_schema?);

    // Inputs must conform to the input schema up front; runtime input
    // violations are an engine concern, suite typos a config error.
    let mut inputs = Vec::new();
    for (index, raw) in spec.inputs.iter().enumerate() {
        let value = Value::from_json(raw.clone());
        match Instance::new(input_schema.clone(), value.clone()) {
            Ok(_) => inputs.push(value),
            Err(violations) => {
                errors.push(format!(
                    "contract {}: inputs[{index}] does not satisfy schema {}: {}",
                    spec.id,
                    input_schema.name,
                    violations
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join("; ")
                ));
            }
        }
    }

    for predicate in &spec.preconditions {
        predicate.type_check(&spec.id, &input_schema, &output_schema, TargetSpec::Input, errors);
    }
    for predicate in &spec.postconditions {
        predicate.type_check(&spec.id, &input_schema, &output_schema, TargetSpec::Output, errors);
    }

    let act = spec.act.as_ref().and_then(|act_spec| {
        compile_act(&spec.id, act_spec, schemas, errors)
    });

    let fallback = match &spec.fallback {
        FallbackSpec::Strict => FallbackMode::Strict,
        FallbackSpec::GracefulRaw => FallbackMode::GracefulRaw,
        FallbackSpec::GracefulDefault(raw) => {
            match Instance::new(output_schema.clone(), Value::from_json(raw.clone())) {
                Ok(instance) => FallbackMode::GracefulDefault(instance),
                Err(violations) => {
                    errors.push(format!(
                        "contract {}: graceful-default does not satisfy schema {}: {}",
                        spec.id,
                        output_schema.name,
                        violations
                            .iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join("; ")
                    ));
                    FallbackMode::Strict
                }
            }
        }
    };

    if errors.len() > before {
        return None;
    }

    let mut builder = Contract::builder(spec.id.clone(), input_schema, output_schema)
        .prompt(spec.prompt.clone())
        .pre_retry(
            spec.pre_retry
                .clone()
                .unwrap_or_else(|| suite.agent.default_pre_retry.clone()),
        )
        .post_retry(
            spec.post_retry
                .clone()
                .unwrap_or_else(|| suite.agent.default_post_retry.clone()),
        )
        .fallback(fallback);
    for predicate in &spec.preconditions {
        builder = builder.precondition(predicate.compile());
    }
    for predicate in &spec.postconditions {
        builder = builder.postcondition(predicate.compile());
    }
    if let Some(act) = act {
        builder = builder.act(act);
    }
    match builder.build() {
        Ok(contract) => Some(RunnableContract {
            contract: Arc::new(contract),
            threshold: spec.threshold.unwrap_or(suite.run.threshold),
            inputs,
        }),
        Err(error) => {
            errors.push(error.to_string());
            None
        }
    }
}

fn compile_act(
    contract_id: &str,
    spec: &ActSpec,
    schemas: &BTreeMap<&str, Arc<TypeSchema>>,
    errors: &mut Vec<String>,
) -> Option<Act> {
    let Some(schema) = schemas.get(spec.schema.as_str()).cloned() else {
        errors.push(format!(
            "contract {contract_id}: act references unknown schema {:?}",
            spec.schema
        ));
        return None;
    };
    // Field-touching ops must name a string field of the act schema.
    match &spec.op {
        ActOp::LowercaseField { field } | ActOp::UppercaseField { field } => {
            match schema.field(field).map(|f| &f.base) {
                Some(BaseType::String) => {}
                Some(base) => {
                    errors.push(format!(
                        "contract {contract_id}: act op requires a string field, {field} is {}",
                        base.label()
                    ));
                    return None;
                }
                None => {
                    errors.push(format!(
                        "contract {contract_id}: act field {field:?} does not resolve in schema {}",
                        schema.name
                    ));
                    return None;
                }
            }
        }
        ActOp::SetField { field, .. } => {
            if schema.field(field).is_none() {
                errors.push(format!(
                    "contract {contract_id}: act field {field:?} does not resolve in schema {}",
                    schema.name
                ));
                return None;
            }
        }
        ActOp::Identity => {}
    }

    let op = spec.op.clone();
    Some(Act::new(schema, move |input| {
        let Value::Object(mut pairs) = input.value().clone() else {
            return Err("act input is not an object".to_string());
        };
        match &op {
            ActOp::Identity => {}
            ActOp::LowercaseField { field } | ActOp::UppercaseField { field } => {
                let upper = matches!(op, ActOp::UppercaseField { .. });
                let entry = pairs
                    .iter_mut()
                    .find(|(k, _)| k == field)
                    .ok_or_else(|| format!("act field {field} is absent"))?;
                let Value::String(text) = &entry.1 else {
                    return Err(format!("act field {field} is not a string"));
                };
                entry.1 = Value::String(if upper {
                    text.to_uppercase()
                } else {
                    text.to_lowercase()
                });
            }
            ActOp::SetField { field, value } => {
                let value = Value::from_json(value.clone());
                match pairs.iter_mut().find(|(k, _)| k == field) {
                    Some(entry) => entry.1 = value,
                    None => pairs.push((field.clone(), value)),
                }
            }
        }
        Ok(Value::Object(pairs))
    }))
}
