//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Every tolerance is pinned in code.

mod fuzz;
mod oracle;

use std::sync::Arc;
use std::time::Instant;

use rand::prelude::*;

use surety::contract::{
    check_postconditions, execute, Act, Agent, Contract, ContractOutcome, FallbackMode,
    Hyperparameters, OutcomeKind, Phase, Predicate, PredicateTarget,
};
use surety::generator::{
    BernoulliGenerator, DependenceMode, FamilyEmission, GeneratorConfig, ScriptedGenerator,
};
use surety::metrics::{estimate_runs, estimate_success, factorize_families};
use surety::remediation::RetryPolicy;
use surety::schema::{
    parse_output, serialize_instance, validate_instance, BaseType, FieldSpec, Instance,
    TypeSchema, Value,
};
use surety_cli::{run_suite, RunOptions};

fn ask_schema() -> Arc<TypeSchema> {
    Arc::new(TypeSchema::new("Ask", "").with_field(FieldSpec::required("topic", BaseType::String)))
}

fn status_schema() -> Arc<TypeSchema> {
    Arc::new(
        TypeSchema::new("Status", "").with_field(FieldSpec::required("status", BaseType::String)),
    )
}

fn pair_schema() -> Arc<TypeSchema> {
    Arc::new(
        TypeSchema::new("Pair", "")
            .with_field(FieldSpec::required("a", BaseType::String))
            .with_field(FieldSpec::required("b", BaseType::String)),
    )
}

fn field_ok(name: &str, family: &str, field: &'static str) -> Predicate {
    Predicate::new(name, family, PredicateTarget::Output, move |_, output| {
        match output.and_then(|o| o.field(field)).and_then(|v| v.as_str()) {
            Some("ok") => Ok(()),
            other => Err(format!("field {field} must be \"ok\", found {other:?}")),
        }
    })
}

fn emission(name: &str, p: f64, field: &str) -> FamilyEmission {
    FamilyEmission {
        name: name.to_string(),
        pass_probability: p,
        field: field.to_string(),
        pass_value: serde_json::json!("ok"),
        fail_value: serde_json::json!("bad"),
    }
}

fn mock_agent(input: &Arc<TypeSchema>, output: &Arc<TypeSchema>) -> Agent {
    Agent::new(
        vec![GeneratorConfig::ScriptedMock {
            script: vec![],
            script_path: None,
            cycle: true,
        }],
        vec![],
        Hyperparameters::default(),
        vec![input.clone(), output.clone()],
        vec![],
    )
    .unwrap()
}

fn status_contract(attempts: u32, fallback: FallbackMode) -> Contract {
    Contract::builder("status-report", ask_schema(), status_schema())
        .prompt("Report the current status.")
        .postcondition(field_ok("status-ok", "valid", "status"))
        .pre_retry(RetryPolicy::disabled())
        .post_retry(RetryPolicy::immediate(attempts))
        .fallback(fallback)
        .build()
        .unwrap()
}

fn topic_input() -> Vec<Value> {
    vec![Value::Object(vec![(
        "topic".to_string(),
        Value::String("tides".to_string()),
    )])]
}

#[test]
fn criterion_1_closed_form_success_probability() {
    // Per-attempt success 0.5, two attempts, N = 10,000, fixed seed:
    // p_succ within 0.75 ± 0.02 (3σ binomial ≈ 0.013), in under 60 s.
    let started = Instant::now();
    let contract = status_contract(2, FallbackMode::Strict);
    let agent = mock_agent(&ask_schema(), &status_schema());
    let generator = BernoulliGenerator::new(
        42,
        vec![emission("valid", 0.5, "status")],
        DependenceMode::Independent,
        vec![],
    )
    .unwrap();
    let report =
        estimate_success(&contract, &agent, &generator, &topic_input(), 10_000, 7).unwrap();
    let closed_form = 1.0 - (1.0 - 0.5f64).powi(2);
    assert!(
        (report.p_succ - closed_form).abs() <= 0.02,
        "p_succ {} outside {closed_form} ± 0.02",
        report.p_succ
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 1 (closed-form p_succ {:.4} ≈ 0.75 ± 0.02, {elapsed:?}): PASS",
        report.p_succ
    );
}

#[test]
fn criterion_2_degenerate_estimators() {
    let agent = mock_agent(&ask_schema(), &status_schema());

    let contract = status_contract(1, FallbackMode::Strict);
    let always_valid = BernoulliGenerator::new(
        9,
        vec![emission("valid", 1.0, "status")],
        DependenceMode::Independent,
        vec![],
    )
    .unwrap();
    let report =
        estimate_success(&contract, &agent, &always_valid, &topic_input(), 100, 1).unwrap();
    assert_eq!(report.p_succ, 1.0, "always-valid must be exactly 1.0");

    let always_invalid = BernoulliGenerator::new(
        9,
        vec![emission("valid", 0.0, "status")],
        DependenceMode::Independent,
        vec![],
    )
    .unwrap();
    let report =
        estimate_success(&contract, &agent, &always_invalid, &topic_input(), 100, 1).unwrap();
    assert_eq!(report.p_succ, 0.0, "always-invalid strict must be exactly 0.0");

    println!("criterion 2 (degenerate estimators 1.0 / 0.0 exactly): PASS");
}

#[test]
fn criterion_3_factorization_study() {
    let contract = Contract::builder("two-families", ask_schema(), pair_schema())
        .postcondition(field_ok("a-ok", "A", "a"))
        .postcondition(field_ok("b-ok", "B", "b"))
        .pre_retry(RetryPolicy::disabled())
        .post_retry(RetryPolicy::immediate(1))
        .fallback(FallbackMode::Strict)
        .build()
        .unwrap();
    let agent = mock_agent(&ask_schema(), &pair_schema());

    // Independent families at (0.9, 0.8): the product approximation tracks
    // the empirical joint within 0.02 at N = 10,000.
    let independent = BernoulliGenerator::new(
        6,
        vec![emission("A", 0.9, "a"), emission("B", 0.8, "b")],
        DependenceMode::Independent,
        vec![],
    )
    .unwrap();
    let (_, records) = estimate_runs(
        &contract,
        &agent,
        &independent,
        &topic_input(),
        10_000,
        11,
        &mut |_, _| {},
    )
    .unwrap();
    let factor = factorize_families(&records).unwrap();
    let gap = (factor.product_approx - factor.empirical_joint).abs();
    assert!(
        gap <= 0.02,
        "independent families: |{} - {}| = {gap} > 0.02",
        factor.product_approx,
        factor.empirical_joint
    );

    // Anti-correlated families at (0.5, 0.5): joint exactly 0, product near
    // 0.25, divergence at least 0.20.
    let anti = BernoulliGenerator::new(
        6,
        vec![emission("A", 0.5, "a"), emission("B", 0.5, "b")],
        DependenceMode::AntiCorrelated,
        vec![],
    )
    .unwrap();
    let (_, records) = estimate_runs(
        &contract,
        &agent,
        &anti,
        &topic_input(),
        10_000,
        13,
        &mut |_, _| {},
    )
    .unwrap();
    let anti_factor = factorize_families(&records).unwrap();
    assert_eq!(anti_factor.empirical_joint, 0.0);
    assert!(
        (anti_factor.product_approx - 0.25).abs() <= 0.05,
        "product {}",
        anti_factor.product_approx
    );
    let divergence = anti_factor.product_approx - anti_factor.empirical_joint;
    assert!(divergence >= 0.20, "divergence {divergence}");

    println!(
        "criterion 3 (factorization: independent gap {gap:.4} ≤ 0.02, anti-correlated divergence {divergence:.3} ≥ 0.20): PASS"
    );
}

/// Shared corpus for criteria 4 and 5: fuzzed schemas, scripts, inputs,
/// policies, fallbacks, predicates, and acts, executed deterministically.
fn fuzzed_corpus(executions: usize) -> Vec<(Contract, Agent, ContractOutcome, surety::contract::ExecutionTrace)> {
    let mut rng = fuzz::rng(0xACCE97);
    let mut corpus = Vec::with_capacity(executions);
    for case in 0..executions {
        let input_schema = Arc::new(fuzz::schema(&mut rng, "In", 4, false));
        let output_schema = Arc::new(fuzz::schema(&mut rng, "Out", 5, true));

        let mut builder = Contract::builder(format!("fuzz-{case}"), input_schema.clone(), output_schema.clone())
            .prompt("Fill the type.")
            .pre_retry(RetryPolicy {
                max_attempts: rng.gen_range(1..=3),
                initial_delay_ms: 0,
                backoff_factor: 1.0,
                max_delay_ms: 0,
                remediation_enabled: rng.gen_bool(0.7),
            })
            .post_retry(RetryPolicy {
                max_attempts: rng.gen_range(1..=3),
                initial_delay_ms: 0,
                backoff_factor: 1.0,
                max_delay_ms: 0,
                remediation_enabled: rng.gen_bool(0.8),
            });

        // Postconditions over the output's first field, when present.
        if rng.gen_bool(0.6) {
            if let Some(field) = output_schema.fields.first().cloned() {
                let name = field.name.clone();
                builder = builder.postcondition(Predicate::new(
                    "first-field-present",
                    "present",
                    PredicateTarget::Output,
                    move |_, output| match output.and_then(|o| o.field(&name)) {
                        Some(_) => Ok(()),
                        None if field.optional => Ok(()),
                        None => Err(format!("field {} is absent", field.name)),
                    },
                ));
            }
        }
        if rng.gen_bool(0.2) {
            builder = builder.postcondition(Predicate::new(
                "synthetic-failure",
                "synthetic",
                PredicateTarget::Output,
                |_, _| Err("synthetic postcondition failure".to_string()),
            ));
        }
        if rng.gen_bool(0.3) {
            builder = builder.precondition(Predicate::new(
                "input-passes",
                "input",
                PredicateTarget::Input,
                |_, _| Ok(()),
            ));
        }

        // Occasional act: identity or deliberately schema-breaking.
        if rng.gen_bool(0.25) {
            let broken = rng.gen_bool(0.3);
            builder = builder.act(Act::new(input_schema.clone(), move |input| {
                if broken {
                    Ok(Value::Integer(13))
                } else {
                    Ok(input.value().clone())
                }
            }));
        }

        let fallback = match rng.gen_range(0..3) {
            0 => FallbackMode::Strict,
            1 => FallbackMode::GracefulRaw,
            _ => {
                let default = fuzz::conforming(&mut rng, &output_schema);
                FallbackMode::GracefulDefault(
                    Instance::new(output_schema.clone(), default).unwrap(),
                )
            }
        };
        let contract = builder.fallback(fallback).build().unwrap();

        // Cost caps sometimes bind below the policy worst case, so the
        // runtime backstop is exercised too.
        let agent = Agent {
            generators: vec![GeneratorConfig::ScriptedMock {
                script: vec![],
                script_path: None,
                cycle: true,
            }],
            instructions: vec!["Produce the requested object.".to_string()],
            hyperparameters: Hyperparameters {
                seed: Some(case as u64),
                cost_cap: rng.gen_range(1..=6),
                ..Hyperparameters::default()
            },
            schemas: vec![input_schema.clone(), output_schema.clone()],
            contracts: vec![],
        };

        let entry_count = rng.gen_range(1..=6);
        let entries = fuzz::script(&mut rng, &output_schema, entry_count);
        let generator = ScriptedGenerator::new(entries, rng.gen_bool(0.7));

        let input = {
            let valid = fuzz::conforming(&mut rng, &input_schema);
            if rng.gen_bool(0.3) {
                fuzz::corrupted(&mut rng, &input_schema, &valid).unwrap_or(valid)
            } else {
                valid
            }
        };

        let (outcome, trace) = execute(&contract, &agent, &generator, &input);
        corpus.push((contract, agent, outcome, trace));
    }
    corpus
}

#[test]
fn criterion_4_termination_and_finalize_invariants() {
    let corpus = fuzzed_corpus(1_200);
    let mut outcome_counts = [0usize; 4];
    for (contract, agent, outcome, trace) in &corpus {
        trace
            .check_phase_order()
            .unwrap_or_else(|e| panic!("{}: phase order: {e}\n{trace:?}", contract.id));
        trace
            .check_call_bound(
                &contract.pre_retry,
                &contract.post_retry,
                agent.hyperparameters.cost_cap,
            )
            .unwrap_or_else(|e| panic!("{}: call bound: {e}", contract.id));
        let finalizes = trace
            .phases
            .iter()
            .filter(|p| p.phase == Phase::Finalize)
            .count();
        assert_eq!(finalizes, 1, "{}: finalize must appear exactly once", contract.id);
        assert_eq!(
            trace.phases.last().map(|p| p.phase),
            Some(Phase::Finalize),
            "{}: finalize must be last",
            contract.id
        );
        if !matches!(contract.fallback, FallbackMode::Strict) {
            assert!(
                !matches!(outcome, ContractOutcome::Failed(_)),
                "{}: graceful modes must not surface errors",
                contract.id
            );
        }
        outcome_counts[match trace.outcome {
            OutcomeKind::Validated => 0,
            OutcomeKind::DegradedRaw => 1,
            OutcomeKind::DegradedDefault => 2,
            OutcomeKind::Failed => 3,
        }] += 1;
    }
    // The corpus must actually exercise every terminal mode.
    assert!(outcome_counts.iter().all(|&c| c >= 30), "thin corpus: {outcome_counts:?}");
    println!(
        "criterion 4 (termination/finalize invariants over {} fuzzed executions, outcomes {outcome_counts:?}): PASS",
        corpus.len()
    );
}

#[test]
fn criterion_5_soundness_of_validated_outcomes() {
    let corpus = fuzzed_corpus(1_200);
    let mut validated = 0;
    let mut discrepancies = 0;
    for (contract, _, outcome, _) in &corpus {
        let ContractOutcome::Validated(instance) = outcome else {
            continue;
        };
        validated += 1;
        if !validate_instance(&contract.output_schema, instance.value()).is_empty() {
            discrepancies += 1;
        }
        // The fuzz postconditions ignore the input, so any well-typed input
        // works for the re-check.
        let mut rng = fuzz::rng(1);
        let input = Instance::new(
            contract.input_schema.clone(),
            fuzz::conforming(&mut rng, &contract.input_schema),
        )
        .unwrap();
        if !check_postconditions(contract, &input, instance).is_empty() {
            discrepancies += 1;
        }
    }
    assert!(validated >= 100, "only {validated} validated outcomes");
    assert_eq!(discrepancies, 0);
    println!(
        "criterion 5 (soundness: {validated} validated outcomes re-checked, 0 discrepancies): PASS"
    );
}

#[test]
fn criterion_6_round_trip_and_oracle_equivalence() {
    // 10,000 serialize/parse round trips over random valid instances.
    let mut rng = fuzz::rng(0x5EED);
    for case in 0..10_000 {
        let schema = Arc::new(fuzz::schema(&mut rng, "Round", 5, true));
        let instance = Instance::new(schema.clone(), fuzz::conforming(&mut rng, &schema))
            .unwrap_or_else(|v| panic!("case {case}: {v:?}"));
        let text = serialize_instance(&instance);
        let back = parse_output(&text, &schema)
            .unwrap_or_else(|v| panic!("case {case}: reparse failed: {v:?}"));
        assert_eq!(instance, back, "case {case}");
    }

    // validate_instance agrees with the brute-force (field × constraint)
    // oracle on fuzzed small schemas, for conforming and corrupted values.
    let mut checked = 0;
    for case in 0..4_000 {
        let schema = fuzz::schema(&mut rng, "Oracle", 5, true);
        let valid = fuzz::conforming(&mut rng, &schema);
        let value = if case % 2 == 0 {
            valid
        } else {
            match fuzz::corrupted(&mut rng, &schema, &valid) {
                Some(bad) => bad,
                None => valid,
            }
        };
        let mut observed: Vec<_> = validate_instance(&schema, &value)
            .into_iter()
            .map(|v| (v.path, v.kind))
            .collect();
        observed.sort();
        let expected = oracle::expected_violations(&schema, &value);
        assert_eq!(observed, expected, "case {case}");
        checked += 1;
    }
    println!(
        "criterion 6 (10,000 round trips; validator ≡ brute-force oracle on {checked} fuzzed cases): PASS"
    );
}

#[test]
fn criterion_7_suite_reports_are_byte_identical() {
    let suite = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/threshold_miss.json");
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let report = dir.path().join(name);
        let options = RunOptions {
            runs: Some(1_000),
            seed: Some(123),
            report: Some(report.clone()),
            ..RunOptions::default()
        };
        run_suite(&suite, &options).unwrap();
        std::fs::read(report).unwrap()
    };
    let first = run("a.json");
    let second = run("b.json");
    assert!(!first.is_empty());
    assert_eq!(first, second, "reports differ between identical runs");
    println!(
        "criterion 7 (byte-identical reports for identical seeds, {} bytes): PASS",
        first.len()
    );
}

#[test]
fn criterion_8_remediation_bookkeeping() {
    let contract = status_contract(3, FallbackMode::Strict);
    let agent = mock_agent(&ask_schema(), &status_schema());
    let generator = ScriptedGenerator::new(
        vec![
            surety::generator::ScriptEntry::response("no object at all"),
            surety::generator::ScriptEntry::response(r#"{"status":"bad"}"#),
            surety::generator::ScriptEntry::response(r#"{"status":"ok"}"#),
        ],
        false,
    );
    let input = Value::Object(vec![(
        "topic".to_string(),
        Value::String("tides".to_string()),
    )]);
    let (outcome, trace) = execute(&contract, &agent, &generator, &input);

    // Success on attempt 3, two failed attempts in the history.
    assert!(matches!(outcome, ContractOutcome::Validated(_)), "{trace:?}");
    assert_eq!(trace.generator_calls, 3);
    assert_eq!(trace.error_history.len(), 2);
    let post_pass = trace
        .phases
        .iter()
        .find(|p| p.phase == Phase::Post && p.outcome == surety::contract::PhaseOutcome::Pass)
        .expect("validated runs pass post");
    assert_eq!(post_pass.attempt, 3);

    // The corrective prompt for attempt 3 carries both prior failure lines
    // verbatim.
    let prompts = generator.recorded_prompts();
    assert_eq!(prompts.len(), 3);
    let third = &prompts[2];
    for record in trace.error_history.records() {
        let line = format!(
            "attempt {} failed: {} {}: {}",
            record.attempt, record.source, record.predicate_or_path, record.message
        );
        assert!(
            third.contains(&line),
            "prompt for attempt 3 lost the line {line:?}\n---\n{third}"
        );
    }
    assert!(third.contains("attempt 1 failed:"));
    assert!(third.contains("attempt 2 failed:"));
    println!("criterion 8 (remediation bookkeeping: success on attempt 3, history length 2, corrective prompt complete): PASS");
}
