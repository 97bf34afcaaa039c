//! Seeded fuzzers for the acceptance corpus: small schemas, conforming and
//! corrupted values, and generator scripts mixing valid, invalid, and
//! garbage responses.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use surety::generator::ScriptEntry;
use surety::schema::{BaseType, Constraint, FieldSpec, Instance, TypeSchema, Value};
use std::sync::Arc;

pub type FuzzRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FuzzRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A schema with at most `max_fields` fields; one level of nesting when
/// `allow_nested`.
pub fn schema(rng: &mut FuzzRng, name: &str, max_fields: usize, allow_nested: bool) -> TypeSchema {
    let mut schema = TypeSchema::new(name, "fuzzed type");
    for index in 0..rng.gen_range(0..=max_fields) {
        schema = schema.with_field(field(rng, index, allow_nested));
    }
    schema
}

fn field(rng: &mut FuzzRng, index: usize, allow_nested: bool) -> FieldSpec {
    let name = format!("f{index}");
    let optional = rng.gen_bool(0.2);
    let top = if allow_nested { 7 } else { 6 };
    let (base, constraints): (BaseType, Vec<Constraint>) = match rng.gen_range(0..top) {
        0 => (
            BaseType::String,
            match rng.gen_range(0..4) {
                0 => vec![],
                1 => vec![Constraint::NonEmpty],
                2 => vec![Constraint::Regex {
                    pattern: "^[a-z]+$".to_string(),
                }],
                _ => vec![Constraint::Length { min: 1, max: 8 }],
            },
        ),
        1 => {
            let min = rng.gen_range(-5..=5);
            let max = min + rng.gen_range(0..=10);
            (
                BaseType::Integer,
                vec![Constraint::Range {
                    min: min as f64,
                    max: max as f64,
                }],
            )
        }
        2 => (BaseType::Real, vec![]),
        3 => (BaseType::Boolean, vec![]),
        4 => (
            BaseType::Enum,
            vec![Constraint::EnumMembers {
                members: vec!["on".to_string(), "off".to_string()],
            }],
        ),
        5 => (
            BaseType::List(Box::new(BaseType::Integer)),
            vec![Constraint::Length { min: 0, max: 3 }],
        ),
        _ => (BaseType::Nested(schema(rng, &format!("Sub{index}"), 3, false)), vec![]),
    };
    let mut spec = if optional {
        FieldSpec::optional(name, base)
    } else {
        FieldSpec::required(name, base)
    };
    for constraint in constraints {
        spec = spec.constrain(constraint);
    }
    spec
}

/// A value satisfying every field and constraint.
pub fn conforming(rng: &mut FuzzRng, schema: &TypeSchema) -> Value {
    let mut pairs = Vec::new();
    for field in &schema.fields {
        if field.optional && rng.gen_bool(0.3) {
            continue;
        }
        pairs.push((field.name.clone(), conforming_field(rng, field)));
    }
    Value::Object(pairs)
}

fn conforming_field(rng: &mut FuzzRng, field: &FieldSpec) -> Value {
    match &field.base {
        BaseType::String => {
            let lowercase = field
                .constraints
                .iter()
                .any(|c| matches!(c, Constraint::Regex { .. }));
            let needs_content = lowercase
                || field
                    .constraints
                    .iter()
                    .any(|c| matches!(c, Constraint::NonEmpty | Constraint::Length { .. }));
            let len = rng.gen_range(if needs_content { 1 } else { 0 }..=6);
            Value::String(
                (0..len)
                    .map(|_| char::from(rng.gen_range(b'a'..=b'z')))
                    .collect(),
            )
        }
        BaseType::Integer => {
            let (min, max) = field
                .constraints
                .iter()
                .find_map(|c| match c {
                    Constraint::Range { min, max } => Some((*min as i64, *max as i64)),
                    _ => None,
                })
                .unwrap_or((-20, 20));
            Value::Integer(rng.gen_range(min..=max))
        }
        BaseType::Real => Value::Real(rng.gen_range(-10.0..10.0)),
        BaseType::Boolean => Value::Boolean(rng.gen()),
        BaseType::Enum => Value::String(if rng.gen() { "on" } else { "off" }.to_string()),
        BaseType::List(element) => {
            let len = rng.gen_range(0..=3);
            Value::List(
                (0..len)
                    .map(|_| match element.as_ref() {
                        BaseType::Integer => Value::Integer(rng.gen_range(-5..=5)),
                        _ => Value::String("item".to_string()),
                    })
                    .collect(),
            )
        }
        BaseType::Nested(nested) => conforming(rng, nested),
    }
}

/// One random mutation that breaks conformance, when possible.
pub fn corrupted(rng: &mut FuzzRng, schema: &TypeSchema, value: &Value) -> Option<Value> {
    let Value::Object(pairs) = value else {
        return None;
    };
    let mut pairs = pairs.clone();
    match rng.gen_range(0..4) {
        0 => {
            let required: Vec<String> = schema
                .fields
                .iter()
                .filter(|f| !f.optional)
                .map(|f| f.name.clone())
                .collect();
            let victim = required.choose(rng)?;
            pairs.retain(|(k, _)| k != victim);
            Some(Value::Object(pairs))
        }
        1 => {
            let index = rng.gen_range(0..pairs.len().max(1));
            let entry = pairs.get_mut(index)?;
            entry.1 = match entry.1 {
                Value::String(_) => Value::Integer(404),
                _ => Value::String("wrong".to_string()),
            };
            Some(Value::Object(pairs))
        }
        2 => {
            // Violate a constraint while keeping the base type.
            for (key, slot) in pairs.iter_mut() {
                let Some(field) = schema.field(key) else { continue };
                for constraint in &field.constraints {
                    match (constraint, &field.base) {
                        (Constraint::Regex { .. }, BaseType::String) => {
                            *slot = Value::String("UPPER 9".to_string());
                            return Some(Value::Object(pairs));
                        }
                        (Constraint::Range { min, .. }, BaseType::Integer) => {
                            *slot = Value::Integer(*min as i64 - 1);
                            return Some(Value::Object(pairs));
                        }
                        (Constraint::EnumMembers { .. }, BaseType::Enum) => {
                            *slot = Value::String("dim".to_string());
                            return Some(Value::Object(pairs));
                        }
                        (Constraint::Length { max, .. }, BaseType::String) => {
                            *slot = Value::String("y".repeat(*max as usize + 1));
                            return Some(Value::Object(pairs));
                        }
                        (Constraint::Length { max, .. }, BaseType::List(_)) => {
                            *slot = Value::List(vec![Value::Integer(0); *max as usize + 1]);
                            return Some(Value::Object(pairs));
                        }
                        (Constraint::NonEmpty, BaseType::String) => {
                            *slot = Value::String(String::new());
                            return Some(Value::Object(pairs));
                        }
                        _ => {}
                    }
                }
            }
            None
        }
        _ => {
            pairs.push(("zz_extra".to_string(), Value::Boolean(true)));
            Some(Value::Object(pairs))
        }
    }
}

/// Script entry kinds the corpus mixes: valid instances, corrupted
/// instances, garbage, fenced valid output, and empty text.
pub fn script(rng: &mut FuzzRng, output_schema: &Arc<TypeSchema>, entries: usize) -> Vec<ScriptEntry> {
    (0..entries)
        .map(|_| {
            let roll = rng.gen_range(0..10);
            let text = if roll < 4 {
                valid_text(rng, output_schema)
            } else if roll < 6 {
                let base = conforming(rng, output_schema);
                match corrupted(rng, output_schema, &base) {
                    Some(bad) => serde_json::to_string(&bad.to_json()).unwrap(),
                    None => "{\"zz_extra\":true}".to_string(),
                }
            } else if roll < 7 {
                format!(
                    "Sure! Here you go:\n```json\n{}\n```\nHope that helps.",
                    valid_text(rng, output_schema)
                )
            } else if roll < 8 {
                "I am sorry, I cannot produce that.".to_string()
            } else if roll < 9 {
                "{\"unterminated\": ".to_string()
            } else {
                String::new()
            };
            ScriptEntry::response(text)
        })
        .collect()
}

pub fn valid_text(rng: &mut FuzzRng, schema: &Arc<TypeSchema>) -> String {
    let value = conforming(rng, schema);
    Instance::new(schema.clone(), value)
        .expect("conforming values validate")
        .canonical_json()
}
