//! Success-probability estimation and agent comparison.
//!
//! Contract satisfaction per invocation is a Bernoulli variable. The
//! estimator runs N independent seeded executions and reports the empirical
//! success probability — the fraction of runs in which all contract
//! predicates pass — together with per-family pass rates, their product (the
//! independence approximation), and cost aggregates. Two agents measured
//! over the same contract suite can then be compared for functional
//! equivalence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::{execute, Agent, Contract, ExecutionTrace, OutcomeKind};
use crate::generator::Generator;
use crate::schema::Value;
use crate::seed::mix;

/// One run of the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u32,
    /// True exactly when the execution validated: all contract predicates
    /// passed on a well-typed output.
    pub success: bool,
    /// Per-family pass flags from the final postcondition evaluation, keyed
    /// by the contract's declared predicate families. Their conjunction
    /// equals `success` whenever the contract declares postconditions; a run
    /// that never reached the post phase fails every family.
    pub families: BTreeMap<String, bool>,
    pub generator_calls: u32,
    pub latency_ms: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub transport_errors: u32,
}

impl RunRecord {
    fn from_trace(run: u32, contract: &Contract, trace: &ExecutionTrace) -> Self {
        let success = trace.outcome == OutcomeKind::Validated;
        let mut families: BTreeMap<String, bool> = contract
            .postconditions
            .iter()
            .map(|p| (p.family.clone(), true))
            .collect();
        if success {
            // Validated means every postcondition passed.
        } else if trace.final_postconditions.is_empty() {
            // Never reached the post phase: nothing passed.
            for passed in families.values_mut() {
                *passed = false;
            }
        } else {
            for result in &trace.final_postconditions {
                if !result.passed {
                    families.insert(result.family.clone(), false);
                }
            }
        }
        Self {
            run,
            success,
            families,
            generator_calls: trace.generator_calls,
            latency_ms: trace.latency_ms,
            tokens_in: trace.tokens_in,
            tokens_out: trace.tokens_out,
            transport_errors: trace.transport_errors,
        }
    }
}

/// Mean and max of one cost dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub mean: f64,
    pub max: u64,
}

impl CostStats {
    fn over(values: impl Iterator<Item = u64> + Clone, n: u64) -> Self {
        let sum: u64 = values.clone().sum();
        Self {
            mean: sum as f64 / n as f64,
            max: values.max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAggregates {
    pub generator_calls: CostStats,
    pub latency_ms: CostStats,
    pub tokens_in: CostStats,
    pub tokens_out: CostStats,
}

/// The estimator's report for one contract. Serialization has stable field
/// order, and identical (seed, config) inputs produce byte-identical
/// reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub contract_id: String,
    pub n: u32,
    pub successes: u32,
    pub p_succ: f64,
    /// Per-family empirical pass probability, keyed by family name.
    pub per_family: BTreeMap<String, f64>,
    /// Product of the per-family probabilities: the independence
    /// approximation of `p_succ`.
    pub product_approx: f64,
    pub cost: CostAggregates,
    /// Runs that hit at least one transport error (counted as failures).
    pub transport_failures: u32,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("estimator requires N ≥ 1")]
    ZeroRuns,
    #[error("estimator requires a nonempty input corpus")]
    EmptyCorpus,
    #[error("run records carry inconsistent family sets")]
    InconsistentFamilies,
    #[error("agents were measured over different contract suites or run counts")]
    MismatchedSuites,
}

/// Runs `contract` N times — inputs cycled round-robin, per-run seeds
/// derived from `seed` — and reports the empirical success probability with
/// per-family rates and cost aggregates. Transport errors count as run
/// failures and are flagged in the report.
pub fn estimate_success(
    contract: &Contract,
    agent: &Agent,
    generator: &dyn Generator,
    inputs: &[Value],
    n: u32,
    seed: u64,
) -> Result<SuccessReport, MetricsError> {
    estimate_runs(contract, agent, generator, inputs, n, seed, &mut |_, _| {})
        .map(|(report, _)| report)
}

/// [`estimate_success`] with the per-run records and a trace observer, for
/// factorization studies and trace export.
pub fn estimate_runs(
    contract: &Contract,
    agent: &Agent,
    generator: &dyn Generator,
    inputs: &[Value],
    n: u32,
    seed: u64,
    observe: &mut dyn FnMut(u32, &ExecutionTrace),
) -> Result<(SuccessReport, Vec<RunRecord>), MetricsError> {
    if n == 0 {
        return Err(MetricsError::ZeroRuns);
    }
    if inputs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut records = Vec::with_capacity(n as usize);
    for run in 0..n {
        let run_agent = agent.with_seed(mix(seed, run as u64));
        let input = &inputs[run as usize % inputs.len()];
        let (_, trace) = execute(contract, &run_agent, generator, input);
        observe(run, &trace);
        records.push(RunRecord::from_trace(run, contract, &trace));
    }

    let successes = records.iter().filter(|r| r.success).count() as u32;
    let families = family_rates(&records)?;
    let product_approx = families.values().product();
    let report = SuccessReport {
        contract_id: contract.id.clone(),
        n,
        successes,
        p_succ: successes as f64 / n as f64,
        per_family: families,
        product_approx,
        cost: CostAggregates {
            generator_calls: CostStats::over(
                records.iter().map(|r| r.generator_calls as u64),
                n as u64,
            ),
            latency_ms: CostStats::over(records.iter().map(|r| r.latency_ms), n as u64),
            tokens_in: CostStats::over(records.iter().map(|r| r.tokens_in), n as u64),
            tokens_out: CostStats::over(records.iter().map(|r| r.tokens_out), n as u64),
        },
        transport_failures: records.iter().filter(|r| r.transport_errors > 0).count() as u32,
        seed,
    };
    Ok((report, records))
}

fn family_rates(records: &[RunRecord]) -> Result<BTreeMap<String, f64>, MetricsError> {
    let keys: Vec<&String> = records[0].families.keys().collect();
    let mut passes: BTreeMap<String, u32> =
        keys.iter().map(|k| ((*k).clone(), 0)).collect();
    for record in records {
        if record.families.len() != keys.len()
            || !record.families.keys().eq(keys.iter().copied())
        {
            return Err(MetricsError::InconsistentFamilies);
        }
        for (family, passed) in &record.families {
            if *passed {
                *passes.get_mut(family).expect("key checked") += 1;
            }
        }
    }
    let n = records.len() as f64;
    Ok(passes
        .into_iter()
        .map(|(family, count)| (family, count as f64 / n))
        .collect())
}

/// Per-family pass rates, their product, and the empirical joint
/// (all-families-pass) rate, side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFactorization {
    pub per_family: BTreeMap<String, f64>,
    pub product_approx: f64,
    pub empirical_joint: f64,
}

/// Factorizes run records into per-family pass rates and compares the
/// product approximation against the empirical joint. The two agree (up to
/// binomial noise) when families are independent and diverge when they are
/// not; both numbers are reported, nothing is corrected.
pub fn factorize_families(records: &[RunRecord]) -> Result<FamilyFactorization, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::ZeroRuns);
    }
    let per_family = family_rates(records)?;
    let product_approx = per_family.values().product();
    let joint = records
        .iter()
        .filter(|r| r.families.values().all(|p| *p))
        .count() as f64
        / records.len() as f64;
    Ok(FamilyFactorization {
        per_family,
        product_approx,
        empirical_joint: joint,
    })
}

/// Reports for one agent over a contract suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReports {
    pub agent: String,
    pub reports: Vec<SuccessReport>,
}

/// Relative capacity ordering by strict inclusion of satisfied-contract
/// sets. Never derived from success probabilities themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialOrdering {
    AOverB,
    BOverA,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub agent_a: String,
    pub agent_b: String,
    /// Both agents meet the threshold on every shared contract.
    pub equivalent: bool,
    /// Mean of (A − B) success probabilities over shared contracts.
    pub delta_p_succ: f64,
    /// Mean of (A − B) mean generator calls over shared contracts.
    pub delta_cost: f64,
    pub potential: PotentialOrdering,
}

/// Compares two agents measured over the same contract suite with the same
/// run counts. They are functionally equivalent with respect to the suite
/// when both satisfy every contract at `threshold`; they then differ only in
/// success probability, cost, and potential.
pub fn compare_agents(
    a: &AgentReports,
    b: &AgentReports,
    threshold: f64,
) -> Result<EquivalenceVerdict, MetricsError> {
    let mut reports_a: BTreeMap<&str, &SuccessReport> = BTreeMap::new();
    for report in &a.reports {
        if reports_a
            .insert(report.contract_id.as_str(), report)
            .is_some()
        {
            return Err(MetricsError::MismatchedSuites);
        }
    }
    let mut by_id: BTreeMap<&str, (&SuccessReport, &SuccessReport)> = BTreeMap::new();
    for report in &b.reports {
        match reports_a.get(report.contract_id.as_str()) {
            Some(ra) if ra.n == report.n => {
                if by_id
                    .insert(report.contract_id.as_str(), (ra, report))
                    .is_some()
                {
                    return Err(MetricsError::MismatchedSuites);
                }
            }
            _ => return Err(MetricsError::MismatchedSuites),
        }
    }
    if by_id.len() != reports_a.len() {
        return Err(MetricsError::MismatchedSuites);
    }

    let count = by_id.len() as f64;
    let mut satisfied_a = Vec::new();
    let mut satisfied_b = Vec::new();
    let mut delta_p = 0.0;
    let mut delta_cost = 0.0;
    for (id, (ra, rb)) in &by_id {
        if ra.p_succ >= threshold {
            satisfied_a.push(*id);
        }
        if rb.p_succ >= threshold {
            satisfied_b.push(*id);
        }
        delta_p += ra.p_succ - rb.p_succ;
        delta_cost += ra.cost.generator_calls.mean - rb.cost.generator_calls.mean;
    }
    let equivalent = satisfied_a.len() == by_id.len() && satisfied_b.len() == by_id.len();
    let a_superset = satisfied_b.iter().all(|id| satisfied_a.contains(id));
    let b_superset = satisfied_a.iter().all(|id| satisfied_b.contains(id));
    let potential = match (a_superset, b_superset) {
        (true, false) => PotentialOrdering::AOverB,
        (false, true) => PotentialOrdering::BOverA,
        _ => PotentialOrdering::Incomparable,
    };
    Ok(EquivalenceVerdict {
        agent_a: a.agent.clone(),
        agent_b: b.agent.clone(),
        equivalent,
        delta_p_succ: delta_p / count,
        delta_cost: delta_cost / count,
        potential,
    })
}
