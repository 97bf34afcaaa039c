//! Value trees and well-typed instances.
//!
//! [`Value`] mirrors JSON with one refinement: integers and reals are kept
//! distinct, so an integer field can reject fractional literals while a real
//! field accepts integer literals. [`Instance`] pairs a value with its
//! schema; constructing one validates and canonicalizes the value, so any
//! instance you can hold is well-typed by construction.

use std::sync::Arc;

use super::validate::{validate_instance, Violation};
use super::TypeSchema;
use crate::schema::BaseType;

/// A field-value tree. `Null` exists only so arbitrary JSON can be
/// represented before validation; canonical instances never contain it.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    String(String),
    Integer(i64),
    Real(f64),
    Boolean(bool),
    List(Vec<Value>),
    Object(Vec<(String, Value)>),
    Null,
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::String(_) => "string",
            Value::Integer(_) => "integer",
            Value::Real(_) => "real",
            Value::Boolean(_) => "boolean",
            Value::List(_) => "list",
            Value::Object(_) => "object",
            Value::Null => "null",
        }
    }

    pub fn object(pairs: impl IntoIterator<Item = (impl Into<String>, Value)>) -> Value {
        Value::Object(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// First value stored under `key`, for object values.
    pub fn get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Object(pairs) => pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric view: integers widen to f64.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn from_json(json: serde_json::Value) -> Value {
        match json {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Boolean(b),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Value::Integer(i)
                } else {
                    // u64 beyond i64::MAX or a fractional literal.
                    Value::Real(n.as_f64().unwrap_or(f64::NAN))
                }
            }
            serde_json::Value::String(s) => Value::String(s),
            serde_json::Value::Array(items) => {
                Value::List(items.into_iter().map(Value::from_json).collect())
            }
            serde_json::Value::Object(map) => {
                Value::Object(map.into_iter().map(|(k, v)| (k, Value::from_json(v))).collect())
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::String(s) => serde_json::Value::String(s.clone()),
            Value::Integer(i) => serde_json::Value::from(*i),
            Value::Real(r) => serde_json::Number::from_f64(*r)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Boolean(b) => serde_json::Value::Bool(*b),
            Value::List(items) => {
                serde_json::Value::Array(items.iter().map(Value::to_json).collect())
            }
            Value::Object(pairs) => serde_json::Value::Object(
                pairs
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json()))
                    .collect(),
            ),
            Value::Null => serde_json::Value::Null,
        }
    }
}

/// A value proven well-typed against its schema.
///
/// Construction validates and canonicalizes: object keys are re-ordered to
/// schema field order, and `null` optionals are dropped. Instances are
/// immutable and cheap to clone (the schema is shared through an `Arc`).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    schema: Arc<TypeSchema>,
    value: Value,
}

impl Instance {
    /// Validates `value` against `schema`; on success the stored value is
    /// the canonicalized form. Returns every violation otherwise.
    pub fn new(schema: Arc<TypeSchema>, value: Value) -> Result<Self, Vec<Violation>> {
        let violations = validate_instance(&schema, &value);
        if !violations.is_empty() {
            return Err(violations);
        }
        let value = canonicalize(&schema, &value);
        Ok(Self { schema, value })
    }

    pub fn schema(&self) -> &Arc<TypeSchema> {
        &self.schema
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    /// Resolves a dotted field path (`"user.email"`) within the instance.
    pub fn field(&self, path: &str) -> Option<&Value> {
        let mut current = &self.value;
        for segment in path.split('.') {
            current = current.get(segment)?;
        }
        Some(current)
    }

    /// Canonical serialization: JSON, keys in schema field order, no
    /// insignificant whitespace. See [`serialize_instance`].
    pub fn canonical_json(&self) -> String {
        let mut out = String::new();
        write_json(&self.value, &mut out);
        out
    }
}

/// Canonical serialization of a well-typed instance. Round-trips through
/// [`super::parse_output`]: `parse_output(serialize_instance(x), schema)`
/// reproduces `x` field for field.
pub fn serialize_instance(instance: &Instance) -> String {
    instance.canonical_json()
}

/// Reorders object fields to schema order and drops absent/null optionals.
/// Only called on values that already validated, so unknown fields cannot
/// occur.
fn canonicalize(schema: &TypeSchema, value: &Value) -> Value {
    let Value::Object(pairs) = value else {
        return value.clone();
    };
    let mut out = Vec::with_capacity(pairs.len());
    for field in &schema.fields {
        let Some(found) = pairs.iter().find(|(k, _)| *k == field.name) else {
            continue;
        };
        if matches!(found.1, Value::Null) {
            continue;
        }
        out.push((field.name.clone(), canonicalize_field(&field.base, &found.1)));
    }
    Value::Object(out)
}

fn canonicalize_field(base: &BaseType, value: &Value) -> Value {
    match (base, value) {
        (BaseType::Nested(schema), Value::Object(_)) => canonicalize(schema, value),
        (BaseType::List(element), Value::List(items)) => Value::List(
            items
                .iter()
                .map(|item| canonicalize_field(element, item))
                .collect(),
        ),
        _ => value.clone(),
    }
}

fn write_json(value: &Value, out: &mut String) {
    match value {
        Value::String(s) => {
            // serde_json's escaping, which is deterministic.
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
        }
        Value::Integer(i) => out.push_str(&i.to_string()),
        Value::Real(r) => {
            // Finite by validation; ryu's shortest round-trip form.
            let n = serde_json::Number::from_f64(*r).expect("canonical reals are finite");
            out.push_str(&n.to_string());
        }
        Value::Boolean(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Null => out.push_str("null"),
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(item, out);
            }
            out.push(']');
        }
        Value::Object(pairs) => {
            out.push('{');
            for (i, (key, item)) in pairs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("string serialization"));
                out.push(':');
                write_json(item, out);
            }
            out.push('}');
        }
    }
}
