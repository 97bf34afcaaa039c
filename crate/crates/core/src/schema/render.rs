//! Deterministic schema-to-prompt rendering.

use super::validate::fmt_number;
use super::{BaseType, Constraint, FieldSpec, TypeSchema};

/// Renders a schema as prompt text: one line per field with its name, base
/// type, description, and constraints, nested fields indented beneath their
/// parent, and a closing instruction to answer with a single serialized
/// object. A pure function of the schema — identical schemas render to
/// byte-identical text.
pub fn render_schema_prompt(schema: &TypeSchema) -> String {
    let mut out = String::new();
    out.push_str(&format!("Type: {}\n", schema.name));
    if !schema.description.is_empty() {
        out.push_str(&format!("Description: {}\n", schema.description));
    }
    out.push_str("Fields:\n");
    if schema.fields.is_empty() {
        out.push_str("(none)\n");
    }
    for field in &schema.fields {
        render_field(field, 0, &mut out);
    }
    out.push_str(
        "\nRespond with a single JSON object that matches the type exactly, \
         with no additional fields and no surrounding text.\n",
    );
    out
}

fn render_field(field: &FieldSpec, depth: usize, out: &mut String) {
    out.push_str(&"  ".repeat(depth));
    out.push_str("- ");
    out.push_str(&field.name);
    out.push_str(" (");
    out.push_str(&field.base.label());
    if field.optional {
        out.push_str(", optional");
    }
    out.push(')');
    if !field.description.is_empty() {
        out.push_str(": ");
        out.push_str(&field.description);
    }
    if !field.constraints.is_empty() {
        out.push_str(" | constraints: ");
        let rendered: Vec<String> = field.constraints.iter().map(render_constraint).collect();
        out.push_str(&rendered.join("; "));
    }
    out.push('\n');
    if let Some(nested) = nested_schema(&field.base) {
        for sub in &nested.fields {
            render_field(sub, depth + 1, out);
        }
    }
}

fn nested_schema(base: &BaseType) -> Option<&TypeSchema> {
    match base {
        BaseType::Nested(schema) => Some(schema),
        BaseType::List(element) => nested_schema(element),
        _ => None,
    }
}

fn render_constraint(constraint: &Constraint) -> String {
    match constraint {
        Constraint::Regex { pattern } => format!("matches /{pattern}/"),
        Constraint::Range { min, max } => {
            format!("range {}..{}", fmt_number(*min), fmt_number(*max))
        }
        Constraint::Length { min, max } => format!("length {min}..{max}"),
        Constraint::EnumMembers { members } => format!("one of: {}", members.join(", ")),
        Constraint::NonEmpty => "non-empty".to_string(),
    }
}
