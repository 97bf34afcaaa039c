//! Parsing generator text into typed instances.
//!
//! Generators are chatty: the object of interest may be wrapped in prose,
//! markdown fences, or trailing commentary. The extraction rule is fixed and
//! fully deterministic: if the text contains a fenced code block, the first
//! block is the candidate region; otherwise the whole text is. Within the
//! region, the first balanced `{...}` span that parses as JSON is the
//! candidate object.

use std::sync::Arc;

use super::value::{Instance, Value};
use super::validate::Violation;
use super::TypeSchema;

/// Extracts, deserializes, and validates one object from generator text.
///
/// On success the returned [`Instance`] is well-typed: re-validating it
/// yields zero violations. On failure the error list is either a single
/// parse violation at the root (no candidate region, or nothing
/// deserializable) or the field violations from validation.
pub fn parse_output(text: &str, schema: &Arc<TypeSchema>) -> Result<Instance, Vec<Violation>> {
    let region = fenced_block(text).unwrap_or(text);
    let Some(json) = first_json_object(region) else {
        return Err(vec![Violation::parse_at_root(
            "no JSON object found in generator output",
        )]);
    };
    Instance::new(schema.clone(), Value::from_json(json))
}

/// Content of the first complete ``` fenced block, language tag stripped.
/// An unterminated fence does not count as a block.
fn fenced_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after_open = &text[open + 3..];
    // Skip the info string (language tag) up to the end of the opening line.
    let content_start = after_open.find('\n')? + 1;
    let content = &after_open[content_start..];
    let close = content.find("```")?;
    Some(&content[..close])
}

/// Scans for the first balanced top-level `{...}` span that parses as JSON.
/// Braces inside string literals are ignored; candidates that balance but do
/// not parse are skipped and the scan continues from the next `{`.
fn first_json_object(region: &str) -> Option<serde_json::Value> {
    let bytes = region.as_bytes();
    let mut start = region.find('{')?;
    loop {
        if let Some(end) = balanced_end(bytes, start) {
            let candidate = &region[start..=end];
            if let Ok(value) = serde_json::from_str::<serde_json::Value>(candidate) {
                return Some(value);
            }
        }
        start = region[start + 1..].find('{')? + start + 1;
    }
}

/// Index of the `}` matching the `{` at `start`, honoring JSON string
/// literals and escapes. All delimiters are ASCII, so byte indexing is safe.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + offset);
                }
            }
            _ => {}
        }
    }
    None
}
