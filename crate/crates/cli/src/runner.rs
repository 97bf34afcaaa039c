//! Suite execution: estimation runs, report and trace files, explain.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use surety::generator::Generator;
use surety::metrics::{estimate_runs, SuccessReport};
use surety::schema::render_schema_prompt;

use crate::assemble::assemble;
use crate::{SuiteError, SuiteFile};

/// Command-line overrides for one run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub runs: Option<u32>,
    pub seed: Option<u64>,
    /// Backend name: `scripted`, `bernoulli`, or `http`. Must be the suite's
    /// primary generator or one of its alternates.
    pub backend: Option<String>,
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

/// Everything a caller needs to act on a finished run.
#[derive(Debug)]
pub struct RunSummary {
    pub all_passed: bool,
    pub report_json: String,
    pub report_path: Option<PathBuf>,
    pub trace_path: Option<PathBuf>,
}

/// The report file payload: stable field order for byte-identical reruns.
#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    suite: &'a str,
    backend: &'a str,
    runs: u32,
    seed: u64,
    reports: Vec<ContractReport<'a>>,
    all_passed: bool,
}

#[derive(Debug, Serialize)]
struct ContractReport<'a> {
    threshold: f64,
    passed: bool,
    #[serde(flatten)]
    report: &'a SuccessReport,
}

/// Loads, validates, and runs a suite: one estimation per contract, report
/// JSON (and optional trace JSON-lines) written to the configured or
/// overridden paths. `all_passed` is false as soon as one contract misses
/// its threshold.
pub fn run_suite(suite_path: &Path, options: &RunOptions) -> Result<RunSummary, SuiteError> {
    let suite = SuiteFile::load(suite_path)?;
    let runnable = assemble(&suite)?;
    let base_dir = suite_path.parent().map(Path::to_path_buf);

    let (backend_name, generator) = select_backend(&suite, options, base_dir.as_deref())?;
    let runs = options.runs.unwrap_or(suite.run.runs);
    if runs < 1 {
        return Err(SuiteError::config("--runs must be at least 1"));
    }
    let seed = options.seed.unwrap_or(suite.run.seed);

    let report_path = options.report.clone().or(suite.output.report.clone());
    let trace_path = options.trace.clone().or(suite.output.trace.clone());
    let mut trace_writer = match &trace_path {
        Some(path) => Some(create_file(path)?),
        None => None,
    };

    let mut reports = Vec::new();
    let mut all_passed = true;
    for runnable_contract in &runnable.contracts {
        let contract = &runnable_contract.contract;
        let mut observe = |run: u32, trace: &surety::contract::ExecutionTrace| {
            if let Some(writer) = &mut trace_writer {
                // Failing to append traces should not corrupt the run.
                let _ = writer.write_all(trace.to_json_lines(Some(run)).as_bytes());
            }
        };
        let (report, _records) = estimate_runs(
            contract,
            &runnable.agent,
            generator.as_ref(),
            &runnable_contract.inputs,
            runs,
            seed,
            &mut observe,
        )
        .map_err(|e| SuiteError::config(format!("contract {}: {e}", contract.id)))?;
        let passed = report.p_succ >= runnable_contract.threshold;
        all_passed &= passed;
        reports.push((runnable_contract.threshold, passed, report));
    }

    let payload = ReportFile {
        suite: &runnable.name,
        backend: backend_name,
        runs,
        seed,
        reports: reports
            .iter()
            .map(|(threshold, passed, report)| ContractReport {
                threshold: *threshold,
                passed: *passed,
                report,
            })
            .collect(),
        all_passed,
    };
    let mut report_json =
        serde_json::to_string_pretty(&payload).expect("reports serialize");
    report_json.push('\n');

    if let Some(path) = &report_path {
        let mut file = create_file(path)?;
        file.write_all(report_json.as_bytes())
            .map_err(|source| SuiteError::Write {
                path: path.display().to_string(),
                source,
            })?;
    }

    Ok(RunSummary {
        all_passed,
        report_json,
        report_path,
        trace_path,
    })
}

fn select_backend(
    suite: &SuiteFile,
    options: &RunOptions,
    base_dir: Option<&Path>,
) -> Result<(&'static str, Box<dyn Generator>), SuiteError> {
    let config = match &options.backend {
        None => &suite.generator,
        Some(name) => {
            if suite.generator.backend_name() == name.as_str() {
                &suite.generator
            } else {
                suite.alternates.get(name.as_str()).ok_or_else(|| {
                    SuiteError::config(format!(
                        "backend {name:?} is neither the suite's generator nor an alternate"
                    ))
                })?
            }
        }
    };
    let generator = config
        .build(base_dir)
        .map_err(|e| SuiteError::config(e.to_string()))?;
    Ok((config.backend_name(), generator))
}

fn create_file(path: &Path) -> Result<std::fs::File, SuiteError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| SuiteError::Write {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::File::create(path).map_err(|source| SuiteError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Renders one contract's obligations: schema prompts, predicates with
/// families, retry policies, and fallback mode. A pure function of the suite
/// file — byte-identical on repeated calls.
pub fn explain(suite_path: &Path, contract_id: &str) -> Result<String, SuiteError> {
    let suite = SuiteFile::load(suite_path)?;
    let runnable = assemble(&suite)?;
    let spec = suite
        .contracts
        .iter()
        .find(|c| c.id == contract_id)
        .ok_or_else(|| SuiteError::config(format!("unknown contract id {contract_id:?}")))?;
    let runnable_contract = runnable
        .contracts
        .iter()
        .find(|c| c.contract.id == contract_id)
        .expect("assembled suites keep every contract");
    let contract = &runnable_contract.contract;

    let mut out = String::new();
    out.push_str(&format!("contract: {}\n", contract.id));
    out.push_str(&format!("fallback: {}\n", contract.fallback));
    out.push_str(&format!(
        "act: {}\n",
        match &spec.act {
            Some(act) => format!("present (schema {}, {})", act.schema, act_label(&act.op)),
            None => "absent".to_string(),
        }
    ));
    for (label, policy) in [
        ("pre-retry", &contract.pre_retry),
        ("post-retry", &contract.post_retry),
    ] {
        out.push_str(&format!(
            "{label}: max_attempts={} initial_delay_ms={} backoff_factor={} max_delay_ms={} remediation={}\n",
            policy.max_attempts,
            policy.initial_delay_ms,
            policy.backoff_factor,
            policy.max_delay_ms,
            if policy.remediation_enabled { "on" } else { "off" },
        ));
    }
    out.push_str(&format!("threshold: {}\n", runnable_contract.threshold));

    for (label, predicates) in [
        ("preconditions", &spec.preconditions),
        ("postconditions", &spec.postconditions),
    ] {
        if predicates.is_empty() {
            out.push_str(&format!("{label}: (none)\n"));
            continue;
        }
        out.push_str(&format!("{label}:\n"));
        for predicate in predicates {
            out.push_str(&format!(
                "- {} [family: {}, target: {}] {}\n",
                predicate.name(),
                predicate.family(),
                match predicate.target() {
                    crate::TargetSpec::Input => "input",
                    crate::TargetSpec::Output => "output",
                    crate::TargetSpec::InputOutput => "input+output",
                },
                predicate.describe(),
            ));
        }
    }

    out.push_str("\ninput schema:\n");
    out.push_str(&render_schema_prompt(&contract.input_schema));
    out.push_str("\noutput schema:\n");
    out.push_str(&render_schema_prompt(&contract.output_schema));
    Ok(out)
}

fn act_label(op: &crate::ActOp) -> String {
    match op {
        crate::ActOp::Identity => "identity".to_string(),
        crate::ActOp::LowercaseField { field } => format!("lowercase-field {field}"),
        crate::ActOp::UppercaseField { field } => format!("uppercase-field {field}"),
        crate::ActOp::SetField { field, .. } => format!("set-field {field}"),
    }
}
