//! The corrective prompt template.
//!
//! The template is fixed text shipped with the crate and documented verbatim
//! in `docs/prompt_template.md`; a golden test keeps the two in sync. The
//! assembled prompt is a pure function of its inputs.

use super::history::ErrorHistory;
use super::FixCandidate;

/// Header introducing the failure lines.
pub const CORRECTIVE_HEADER: &str = "Previous attempts failed validation:";

/// Closing instruction of every corrective prompt.
pub const CORRECTIVE_INSTRUCTION: &str = "Produce a corrected JSON object that fixes every error \
listed above. Respond with the single corrected JSON object and nothing else.";

/// Header introducing the value being fixed.
pub const FIX_CANDIDATE_HEADER: &str =
    "The following value failed validation and must be corrected:";

/// Assembles a corrective prompt: base prompt, schema rendering, one
/// `attempt k failed: <source> <predicate-or-path>: <message>` line per
/// history record in order, then the correction instruction. Byte-stable for
/// identical inputs; every prior failure line reappears on later attempts
/// because the history is append-only.
pub fn build_corrective_prompt(
    base_prompt: &str,
    schema_prompt: &str,
    history: &ErrorHistory,
) -> String {
    debug_assert!(!history.is_empty(), "corrective prompts need a history");
    let mut out = String::new();
    out.push_str(base_prompt);
    out.push_str("\n\n");
    out.push_str(schema_prompt);
    out.push('\n');
    out.push_str(CORRECTIVE_HEADER);
    out.push('\n');
    for record in history.records() {
        out.push_str(&format!(
            "attempt {} failed: {} {}: {}\n",
            record.attempt, record.source, record.predicate_or_path, record.message
        ));
    }
    out.push('\n');
    out.push_str(CORRECTIVE_INSTRUCTION);
    out.push('\n');
    out
}

/// Base prompt for fixing a candidate value: the fix header plus the
/// candidate itself. Text candidates are capped at the excerpt limit so
/// prompts cannot grow without bound.
pub fn fix_candidate_base(candidate: &FixCandidate) -> String {
    let rendered = match candidate {
        FixCandidate::Value(value) => {
            let mut out = String::new();
            write_value(value, &mut out);
            out
        }
        FixCandidate::Text(text) => super::history::excerpt(text),
    };
    format!("{FIX_CANDIDATE_HEADER}\n\n{rendered}")
}

fn write_value(value: &crate::schema::Value, out: &mut String) {
    out.push_str(
        &serde_json::to_string(&value.to_json()).unwrap_or_else(|_| "<unrenderable>".to_string()),
    );
}
