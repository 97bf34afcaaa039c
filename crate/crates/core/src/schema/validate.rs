//! Instance validation: structural checks plus constraint checks, with one
//! violation per failed field or constraint and no short-circuiting. The
//! messages are written to be fed back to a generator verbatim, so they name
//! the path, the expectation, and the offending value.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{BaseType, Constraint, FieldSpec, TypeSchema, Value};

/// One validation failure, addressed by field path from the root (`$`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, kind: ViolationKind, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            kind,
            message: message.into(),
        }
    }

    /// A parse-phase violation at the root.
    pub fn parse_at_root(message: impl Into<String>) -> Self {
        Self::new("$", ViolationKind::Parse, message)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Missing,
    TypeMismatch,
    Constraint,
    Parse,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            ViolationKind::Missing => "missing",
            ViolationKind::TypeMismatch => "type-mismatch",
            ViolationKind::Constraint => "constraint",
            ViolationKind::Parse => "parse",
        };
        f.write_str(label)
    }
}

/// Validates a value tree against a schema. Returns the empty list exactly
/// when the value structurally matches the schema and every constraint
/// passes; otherwise one [`Violation`] per failed field or constraint.
///
/// Every field and constraint is evaluated — failures never short-circuit —
/// so the result doubles as the full error report for remediation prompts.
/// `null` is treated as absence: legal for optional fields, `missing` for
/// required ones. Fields not declared in the schema are violations.
pub fn validate_instance(schema: &TypeSchema, value: &Value) -> Vec<Violation> {
    let mut violations = Vec::new();
    validate_object(schema, value, "$", &mut violations);
    violations
}

fn validate_object(schema: &TypeSchema, value: &Value, path: &str, out: &mut Vec<Violation>) {
    let Value::Object(pairs) = value else {
        out.push(Violation::new(
            path,
            ViolationKind::TypeMismatch,
            format!("expected object, found {}", value.kind_name()),
        ));
        return;
    };

    for (index, (key, _)) in pairs.iter().enumerate() {
        let first = pairs.iter().position(|(k, _)| k == key);
        if first != Some(index) {
            out.push(Violation::new(
                join(path, key),
                ViolationKind::TypeMismatch,
                format!("duplicate field {key:?}"),
            ));
        } else if schema.field(key).is_none() {
            out.push(Violation::new(
                join(path, key),
                ViolationKind::TypeMismatch,
                format!("unexpected field {key:?} not defined in schema {}", schema.name),
            ));
        }
    }

    for field in &schema.fields {
        let field_path = join(path, &field.name);
        match value.get(&field.name) {
            None | Some(Value::Null) => {
                if !field.optional {
                    out.push(Violation::new(
                        field_path,
                        ViolationKind::Missing,
                        format!("required field {:?} is missing", field.name),
                    ));
                }
            }
            Some(v) => validate_field(field, v, &field_path, out),
        }
    }
}

fn validate_field(field: &FieldSpec, value: &Value, path: &str, out: &mut Vec<Violation>) {
    if check_base(&field.base, value, path, out) {
        for constraint in &field.constraints {
            check_constraint(constraint, value, path, out);
        }
    }
}

/// Structural check. Returns whether the value has the right shape for the
/// base type; element- and sub-field errors are pushed as they are found.
fn check_base(base: &BaseType, value: &Value, path: &str, out: &mut Vec<Violation>) -> bool {
    let mismatch = |out: &mut Vec<Violation>| {
        out.push(Violation::new(
            path,
            ViolationKind::TypeMismatch,
            format!("expected {}, found {}", base.label(), value.kind_name()),
        ));
        false
    };
    match (base, value) {
        (BaseType::String, Value::String(_)) => true,
        (BaseType::Integer, Value::Integer(_)) => true,
        (BaseType::Real, Value::Integer(_)) => true,
        (BaseType::Real, Value::Real(r)) => {
            if r.is_finite() {
                true
            } else {
                out.push(Violation::new(
                    path,
                    ViolationKind::TypeMismatch,
                    "expected a finite real number",
                ));
                false
            }
        }
        (BaseType::Boolean, Value::Boolean(_)) => true,
        (BaseType::Enum, Value::String(_)) => true,
        (BaseType::List(element), Value::List(items)) => {
            for (i, item) in items.iter().enumerate() {
                let item_path = format!("{path}[{i}]");
                check_base(element, item, &item_path, out);
            }
            true
        }
        (BaseType::Nested(schema), Value::Object(_)) => {
            validate_object(schema, value, path, out);
            true
        }
        _ => mismatch(out),
    }
}

fn check_constraint(constraint: &Constraint, value: &Value, path: &str, out: &mut Vec<Violation>) {
    let fail = |out: &mut Vec<Violation>, message: String| {
        out.push(Violation::new(path, ViolationKind::Constraint, message));
    };
    match constraint {
        Constraint::Regex { pattern } => {
            if let Some(s) = value.as_str() {
                match compile_regex(pattern) {
                    Ok(re) if re.is_match(s) => {}
                    Ok(_) => fail(
                        out,
                        format!("value {s:?} does not match pattern /{pattern}/"),
                    ),
                    Err(err) => fail(out, format!("invalid pattern /{pattern}/: {err}")),
                }
            }
        }
        Constraint::Range { min, max } => {
            if let Some(n) = value.as_number() {
                if n < *min || n > *max {
                    fail(
                        out,
                        format!(
                            "value {n} outside range {}..{}",
                            fmt_number(*min),
                            fmt_number(*max)
                        ),
                    );
                }
            }
        }
        Constraint::Length { min, max } => {
            if let Some(len) = length_of(value) {
                if len < *min || len > *max {
                    fail(out, format!("length {len} outside {min}..{max}"));
                }
            }
        }
        Constraint::EnumMembers { members } => {
            if let Some(s) = value.as_str() {
                if !members.iter().any(|m| m == s) {
                    fail(
                        out,
                        format!("value {s:?} is not one of: {}", members.join(", ")),
                    );
                }
            }
        }
        Constraint::NonEmpty => {
            if length_of(value) == Some(0) {
                fail(out, "value must not be empty".to_string());
            }
        }
    }
}

fn length_of(value: &Value) -> Option<u64> {
    match value {
        Value::String(s) => Some(s.chars().count() as u64),
        Value::List(items) => Some(items.len() as u64),
        _ => None,
    }
}

/// Deterministic rendering of constraint bounds: integral values print
/// without a fractional part.
pub(crate) fn fmt_number(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 9e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

fn join(path: &str, key: &str) -> String {
    format!("{path}.{key}")
}

/// Compiles (and process-wide caches) a constraint regex.
pub(crate) fn compile_regex(pattern: &str) -> Result<Regex, regex::Error> {
    static CACHE: OnceLock<Mutex<HashMap<String, Regex>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("regex cache poisoned");
    if let Some(re) = cache.get(pattern) {
        return Ok(re.clone());
    }
    let re = Regex::new(pattern)?;
    cache.insert(pattern.to_string(), re.clone());
    Ok(re)
}
