//! The type system: schema definitions and schema well-formedness checking.
//!
//! A [`TypeSchema`] is an ordered list of named, described, constrained
//! fields. Schemas are plain data — they serialize to and from the JSON
//! schema-definition format (`name`, `description`, `fields[]`) — and are
//! immutable once built, so they can be shared freely across concurrent
//! executions.

mod parse;
mod render;
mod validate;
mod value;

pub use parse::parse_output;
pub use render::render_schema_prompt;
pub use validate::{validate_instance, Violation, ViolationKind};
pub use value::{serialize_instance, Instance, Value};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Maximum schema nesting depth (a schema at the root counts as depth 1).
pub const MAX_NESTING_DEPTH: usize = 16;

/// A named, ordered record type. The concrete type system generators are
/// validated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
}

impl TypeSchema {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            fields: Vec::new(),
        }
    }

    /// Appends a field, builder-style.
    pub fn with_field(mut self, field: FieldSpec) -> Self {
        self.fields.push(field);
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Checks every schema-definition invariant. See [`check_schema`].
    pub fn check(&self) -> Result<(), Vec<SchemaError>> {
        check_schema(self)
    }
}

/// One field of a schema: a name, a base type, optionality, a free-text
/// description (prompt-only metadata — it never affects validation), and a
/// set of constraints compatible with the base type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub base: BaseType,
    #[serde(default)]
    pub optional: bool,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

impl FieldSpec {
    pub fn required(name: impl Into<String>, base: BaseType) -> Self {
        Self {
            name: name.into(),
            base,
            optional: false,
            description: String::new(),
            constraints: Vec::new(),
        }
    }

    pub fn optional(name: impl Into<String>, base: BaseType) -> Self {
        Self {
            optional: true,
            ..Self::required(name, base)
        }
    }

    pub fn describe(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn constrain(mut self, constraint: Constraint) -> Self {
        self.constraints.push(constraint);
        self
    }
}

/// Base types a field can take.
///
/// Serializes to the schema-definition file format: unit variants as plain
/// strings (`"string"`, `"integer"`, ...), `list` and `nested` as
/// single-entry objects (`{"list": "string"}`, `{"nested": {...}}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseType {
    String,
    Integer,
    Real,
    Boolean,
    /// A closed string set; the members come from an `enum-members`
    /// constraint on the same field.
    Enum,
    List(Box<BaseType>),
    Nested(TypeSchema),
}

impl BaseType {
    /// Human-readable type label used in violations and rendered prompts.
    pub fn label(&self) -> String {
        match self {
            BaseType::String => "string".to_string(),
            BaseType::Integer => "integer".to_string(),
            BaseType::Real => "real".to_string(),
            BaseType::Boolean => "boolean".to_string(),
            BaseType::Enum => "enum".to_string(),
            BaseType::List(inner) => format!("list of {}", inner.label()),
            BaseType::Nested(schema) => format!("object {}", schema.name),
        }
    }
}

/// A per-field constraint. Compatibility with the field's base type is part
/// of schema well-formedness:
///
/// - `regex` — string fields only
/// - `range` — integer and real fields only
/// - `length` — string and list fields only
/// - `enum-members` — enum fields only (and required there, with ≥ 1 member)
/// - `non-empty` — string and list fields only
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Constraint {
    Regex { pattern: String },
    Range { min: f64, max: f64 },
    Length { min: u64, max: u64 },
    EnumMembers { members: Vec<String> },
    NonEmpty,
}

impl Constraint {
    fn kind_label(&self) -> &'static str {
        match self {
            Constraint::Regex { .. } => "regex",
            Constraint::Range { .. } => "range",
            Constraint::Length { .. } => "length",
            Constraint::EnumMembers { .. } => "enum-members",
            Constraint::NonEmpty => "non-empty",
        }
    }
}

/// A schema-definition error: where it is and which rule it breaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaError {
    /// Dotted location of the offending field, starting with the schema name.
    pub location: String,
    pub message: String,
}

impl SchemaError {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Checks every schema-definition invariant: unique field names, legal
/// identifiers, nesting depth ≤ [`MAX_NESTING_DEPTH`], well-formed
/// constraints (valid regex syntax, `min ≤ max`, enum members nonempty), and
/// constraint/base-type compatibility.
///
/// Returns `Ok(())` or the full list of errors; never short-circuits. A
/// schema with zero fields is legal.
pub fn check_schema(schema: &TypeSchema) -> Result<(), Vec<SchemaError>> {
    let mut errors = Vec::new();
    check_schema_at(schema, &schema.name, 1, &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn check_schema_at(schema: &TypeSchema, location: &str, depth: usize, errors: &mut Vec<SchemaError>) {
    if depth > MAX_NESTING_DEPTH {
        errors.push(SchemaError::new(
            location,
            format!("nesting depth exceeds the maximum of {MAX_NESTING_DEPTH}"),
        ));
        return;
    }
    if schema.name.is_empty() {
        errors.push(SchemaError::new(location, "schema name must not be empty"));
    }
    let mut seen: HashSet<&str> = HashSet::new();
    for field in &schema.fields {
        let field_loc = format!("{location}.{}", field.name);
        if !is_identifier(&field.name) {
            errors.push(SchemaError::new(
                &field_loc,
                format!("field name {:?} is not a legal identifier", field.name),
            ));
        }
        if !seen.insert(field.name.as_str()) {
            errors.push(SchemaError::new(
                &field_loc,
                format!("duplicate field name {:?}", field.name),
            ));
        }
        check_base(&field.base, &field_loc, depth, errors);
        for constraint in &field.constraints {
            check_constraint(constraint, &field.base, &field_loc, errors);
        }
        if matches!(field.base, BaseType::Enum) {
            let members = field
                .constraints
                .iter()
                .filter(|c| matches!(c, Constraint::EnumMembers { .. }))
                .count();
            if members != 1 {
                errors.push(SchemaError::new(
                    &field_loc,
                    "enum fields require exactly one enum-members constraint",
                ));
            }
        }
    }
}

fn check_base(base: &BaseType, location: &str, depth: usize, errors: &mut Vec<SchemaError>) {
    match base {
        BaseType::Nested(schema) => check_schema_at(schema, location, depth + 1, errors),
        BaseType::List(element) => match element.as_ref() {
            BaseType::Enum => errors.push(SchemaError::new(
                location,
                "enum is not supported as a list element type",
            )),
            other => check_base(other, location, depth, errors),
        },
        _ => {}
    }
}

fn check_constraint(
    constraint: &Constraint,
    base: &BaseType,
    location: &str,
    errors: &mut Vec<SchemaError>,
) {
    let compatible = matches!(
        (constraint, base),
        (Constraint::Regex { .. }, BaseType::String)
            | (Constraint::Range { .. }, BaseType::Integer)
            | (Constraint::Range { .. }, BaseType::Real)
            | (Constraint::Length { .. }, BaseType::String)
            | (Constraint::Length { .. }, BaseType::List(_))
            | (Constraint::EnumMembers { .. }, BaseType::Enum)
            | (Constraint::NonEmpty, BaseType::String)
            | (Constraint::NonEmpty, BaseType::List(_))
    );
    if !compatible {
        errors.push(SchemaError::new(
            location,
            format!(
                "constraint {} is not compatible with base type {}",
                constraint.kind_label(),
                base.label()
            ),
        ));
    }
    match constraint {
        Constraint::Regex { pattern } => {
            if let Err(err) = validate::compile_regex(pattern) {
                errors.push(SchemaError::new(
                    location,
                    format!("invalid regex {pattern:?}: {err}"),
                ));
            }
        }
        Constraint::Range { min, max } => {
            if !min.is_finite() || !max.is_finite() {
                errors.push(SchemaError::new(location, "range bounds must be finite"));
            } else if min > max {
                errors.push(SchemaError::new(
                    location,
                    format!("range min ≤ max violated ({min} > {max})"),
                ));
            }
        }
        Constraint::Length { min, max } => {
            if min > max {
                errors.push(SchemaError::new(
                    location,
                    format!("length min ≤ max violated ({min} > {max})"),
                ));
            }
        }
        Constraint::EnumMembers { members } => {
            if members.is_empty() {
                errors.push(SchemaError::new(
                    location,
                    "enum-members requires at least one member",
                ));
            }
        }
        Constraint::NonEmpty => {}
    }
}

fn is_identifier(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}
