//! Seeded random schemas, conforming values, and targeted corruptions for
//! fuzz-style tests. Everything derives from a caller-supplied RNG, so runs
//! are reproducible. Each integration-test binary compiles its own copy, so
//! helpers unused by one binary are expected.
#![allow(dead_code)]

use rand::prelude::*;
use rand::rngs::StdRng;

use surety::schema::{BaseType, Constraint, FieldSpec, TypeSchema, Value};

/// A corruption applied to a conforming value, with the path it touched.
#[derive(Debug, Clone, PartialEq)]
pub enum Corruption {
    RemoveRequired(String),
    WrongType(String),
    ViolateConstraint(String),
    UnknownField(String),
}

pub fn random_schema(rng: &mut StdRng, name: &str, max_fields: usize, depth: usize) -> TypeSchema {
    let mut schema = TypeSchema::new(name, "fuzzed");
    let fields = rng.gen_range(0..=max_fields);
    for i in 0..fields {
        schema = schema.with_field(random_field(rng, i, depth));
    }
    schema
}

fn random_field(rng: &mut StdRng, index: usize, depth: usize) -> FieldSpec {
    let name = format!("f{index}");
    let optional = rng.gen_bool(0.2);
    let pick = if depth > 1 {
        rng.gen_range(0..7)
    } else {
        rng.gen_range(0..6)
    };
    let (base, constraints) = match pick {
        0 => string_field(rng),
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
        2 => {
            let min = rng.gen_range(-3..=3) as f64;
            let max = min + rng.gen_range(0..=6) as f64;
            (BaseType::Real, vec![Constraint::Range { min, max }])
        }
        3 => (BaseType::Boolean, vec![]),
        4 => {
            let members: Vec<String> = ["red", "green", "blue"]
                .iter()
                .take(rng.gen_range(1..=3))
                .map(|s| s.to_string())
                .collect();
            (BaseType::Enum, vec![Constraint::EnumMembers { members }])
        }
        5 => {
            let element = match rng.gen_range(0..3) {
                0 => BaseType::String,
                1 => BaseType::Integer,
                _ => BaseType::Boolean,
            };
            let constraint = match rng.gen_range(0..3) {
                0 => vec![],
                1 => vec![Constraint::Length { min: 0, max: 4 }],
                _ => vec![Constraint::NonEmpty],
            };
            (BaseType::List(Box::new(element)), constraint)
        }
        _ => {
            let nested = random_schema(rng, &format!("Nested{index}"), 3, depth - 1);
            (BaseType::Nested(nested), vec![])
        }
    };
    let mut field = if optional {
        FieldSpec::optional(name, base)
    } else {
        FieldSpec::required(name, base)
    };
    for constraint in constraints {
        field = field.constrain(constraint);
    }
    field.describe("fuzzed field")
}

fn string_field(rng: &mut StdRng) -> (BaseType, Vec<Constraint>) {
    let constraints = match rng.gen_range(0..4) {
        0 => vec![],
        1 => vec![Constraint::NonEmpty],
        2 => vec![Constraint::Regex {
            pattern: "^[a-z]+$".to_string(),
        }],
        _ => vec![Constraint::Length { min: 1, max: 8 }],
    };
    (BaseType::String, constraints)
}

/// A value satisfying every field and constraint of `schema`. Optional
/// fields are present with probability 0.7.
pub fn conforming_value(rng: &mut StdRng, schema: &TypeSchema) -> Value {
    let mut pairs = Vec::new();
    for field in &schema.fields {
        if field.optional && rng.gen_bool(0.3) {
            continue;
        }
        pairs.push((field.name.clone(), conforming_field(rng, field)));
    }
    Value::Object(pairs)
}

fn conforming_field(rng: &mut StdRng, field: &FieldSpec) -> Value {
    conforming_base(rng, &field.base, &field.constraints)
}

fn conforming_base(rng: &mut StdRng, base: &BaseType, constraints: &[Constraint]) -> Value {
    match base {
        BaseType::String => Value::String(conforming_string(rng, constraints)),
        BaseType::Integer => {
            let (min, max) = range_bounds(constraints, -50.0, 50.0);
            Value::Integer(rng.gen_range(min as i64..=max as i64))
        }
        BaseType::Real => {
            let (min, max) = range_bounds(constraints, -50.0, 50.0);
            match rng.gen_range(0..3) {
                0 => Value::Real(min),
                1 => Value::Real((min + max) / 2.0),
                // Reals accept integer literals.
                _ => Value::Integer(min.ceil() as i64),
            }
        }
        BaseType::Boolean => Value::Boolean(rng.gen()),
        BaseType::Enum => {
            let members = enum_members(constraints);
            Value::String(members[rng.gen_range(0..members.len())].clone())
        }
        BaseType::List(element) => {
            let (min, max) = constraints
                .iter()
                .find_map(|c| match c {
                    Constraint::Length { min, max } => Some((*min as usize, *max as usize)),
                    _ => None,
                })
                .unwrap_or((0, 4));
            let min = if constraints.iter().any(|c| matches!(c, Constraint::NonEmpty)) {
                min.max(1)
            } else {
                min
            };
            let len = rng.gen_range(min..=max.max(min));
            Value::List(
                (0..len)
                    .map(|_| conforming_base(rng, element, &[]))
                    .collect(),
            )
        }
        BaseType::Nested(nested) => conforming_value(rng, nested),
    }
}

fn conforming_string(rng: &mut StdRng, constraints: &[Constraint]) -> String {
    let lowercase = constraints
        .iter()
        .any(|c| matches!(c, Constraint::Regex { .. }));
    let (min, max) = constraints
        .iter()
        .find_map(|c| match c {
            Constraint::Length { min, max } => Some((*min as usize, *max as usize)),
            _ => None,
        })
        .unwrap_or((0, 10));
    let min = if constraints.iter().any(|c| matches!(c, Constraint::NonEmpty)) || lowercase {
        min.max(1)
    } else {
        min
    };
    let len = rng.gen_range(min..=max.max(min));
    (0..len)
        .map(|_| {
            if lowercase {
                char::from(rng.gen_range(b'a'..=b'z'))
            } else {
                // Mix in escapes and unicode to exercise serialization.
                *['a', 'Z', '7', ' ', '"', '\\', 'é', '{', '}']
                    .choose(rng)
                    .unwrap()
            }
        })
        .collect()
}

fn range_bounds(constraints: &[Constraint], default_min: f64, default_max: f64) -> (f64, f64) {
    constraints
        .iter()
        .find_map(|c| match c {
            Constraint::Range { min, max } => Some((*min, *max)),
            _ => None,
        })
        .unwrap_or((default_min, default_max))
}

fn enum_members(constraints: &[Constraint]) -> &[String] {
    constraints
        .iter()
        .find_map(|c| match c {
            Constraint::EnumMembers { members } => Some(members.as_slice()),
            _ => None,
        })
        .expect("enum fields carry members")
}

/// Applies one random corruption to a conforming value. Returns `None` when
/// the schema offers nothing to corrupt (no fields).
pub fn corrupt_value(
    rng: &mut StdRng,
    schema: &TypeSchema,
    value: &Value,
) -> Option<(Value, Corruption)> {
    let Value::Object(pairs) = value else {
        return None;
    };
    let mut pairs = pairs.clone();
    let choice = rng.gen_range(0..4);
    match choice {
        0 => {
            let required: Vec<&FieldSpec> =
                schema.fields.iter().filter(|f| !f.optional).collect();
            let field = required.choose(rng)?;
            pairs.retain(|(k, _)| k != &field.name);
            Some((
                Value::Object(pairs),
                Corruption::RemoveRequired(field.name.clone()),
            ))
        }
        1 => {
            let present: Vec<usize> = (0..pairs.len()).collect();
            let index = *present.choose(rng)?;
            let name = pairs[index].0.clone();
            let field = schema.field(&name)?;
            pairs[index].1 = wrong_type_value(&field.base);
            Some((Value::Object(pairs), Corruption::WrongType(name)))
        }
        2 => {
            let candidates: Vec<usize> = (0..pairs.len())
                .filter(|i| {
                    schema
                        .field(&pairs[*i].0)
                        .is_some_and(|f| violating_value(f).is_some())
                })
                .collect();
            let index = *candidates.choose(rng)?;
            let name = pairs[index].0.clone();
            let field = schema.field(&name)?;
            pairs[index].1 = violating_value(field)?;
            Some((Value::Object(pairs), Corruption::ViolateConstraint(name)))
        }
        _ => {
            let name = "zz_unknown".to_string();
            pairs.push((name.clone(), Value::Boolean(true)));
            Some((Value::Object(pairs), Corruption::UnknownField(name)))
        }
    }
}

fn wrong_type_value(base: &BaseType) -> Value {
    match base {
        BaseType::String | BaseType::Enum => Value::Integer(99),
        _ => Value::String("not the right type".to_string()),
    }
}

/// A value violating one of the field's constraints while keeping the right
/// base type, when such a value exists.
fn violating_value(field: &FieldSpec) -> Option<Value> {
    for constraint in &field.constraints {
        match (constraint, &field.base) {
            (Constraint::Regex { .. }, BaseType::String) => {
                return Some(Value::String("NOPE!!".to_string()))
            }
            (Constraint::Range { min, .. }, BaseType::Integer) => {
                return Some(Value::Integer(*min as i64 - 1))
            }
            (Constraint::Range { min, .. }, BaseType::Real) => {
                return Some(Value::Real(min - 0.5))
            }
            (Constraint::Length { max, .. }, BaseType::String) => {
                return Some(Value::String("x".repeat(*max as usize + 1)))
            }
            (Constraint::Length { max, .. }, BaseType::List(_)) => {
                return Some(Value::List(vec![Value::Boolean(true); *max as usize + 1]))
            }
            (Constraint::EnumMembers { .. }, BaseType::Enum) => {
                return Some(Value::String("chartreuse".to_string()))
            }
            (Constraint::NonEmpty, BaseType::String) => {
                return Some(Value::String(String::new()))
            }
            (Constraint::NonEmpty, BaseType::List(_)) => return Some(Value::List(vec![])),
            _ => continue,
        }
    }
    None
}
