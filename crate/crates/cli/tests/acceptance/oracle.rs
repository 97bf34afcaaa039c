//! Brute-force validation oracle for the acceptance suite: enumerates every
//! (field, constraint) pair of a schema against a value, independently of
//! the library's validator.

use surety::schema::{BaseType, Constraint, TypeSchema, Value, ViolationKind};

pub fn expected_violations(schema: &TypeSchema, value: &Value) -> Vec<(String, ViolationKind)> {
    let mut out = Vec::new();
    walk(schema, value, "$", &mut out);
    out.sort();
    out
}

fn walk(schema: &TypeSchema, value: &Value, path: &str, out: &mut Vec<(String, ViolationKind)>) {
    let Value::Object(pairs) = value else {
        out.push((path.to_string(), ViolationKind::TypeMismatch));
        return;
    };
    for (index, (key, _)) in pairs.iter().enumerate() {
        let duplicate = pairs.iter().take(index).any(|(k, _)| k == key);
        if duplicate || schema.field(key).is_none() {
            out.push((format!("{path}.{key}"), ViolationKind::TypeMismatch));
        }
    }
    for field in &schema.fields {
        let field_path = format!("{path}.{}", field.name);
        let slot = pairs.iter().find(|(k, _)| k == &field.name).map(|(_, v)| v);
        let value = match slot {
            None | Some(Value::Null) => {
                if !field.optional {
                    out.push((field_path, ViolationKind::Missing));
                }
                continue;
            }
            Some(v) => v,
        };
        if !shape_ok(&field.base, value) {
            out.push((field_path, ViolationKind::TypeMismatch));
            continue;
        }
        match (&field.base, value) {
            (BaseType::Nested(nested), object) => walk(nested, object, &field_path, out),
            (BaseType::List(element), Value::List(items)) => {
                for (i, item) in items.iter().enumerate() {
                    let item_path = format!("{field_path}[{i}]");
                    if let BaseType::Nested(nested) = element.as_ref() {
                        if matches!(item, Value::Object(_)) {
                            walk(nested, item, &item_path, out);
                        } else {
                            out.push((item_path, ViolationKind::TypeMismatch));
                        }
                    } else if !shape_ok(element, item) {
                        out.push((item_path, ViolationKind::TypeMismatch));
                    }
                }
            }
            _ => {}
        }
        for constraint in &field.constraints {
            if !holds(constraint, value) {
                out.push((field_path.clone(), ViolationKind::Constraint));
            }
        }
    }
}

fn shape_ok(base: &BaseType, value: &Value) -> bool {
    match base {
        BaseType::String | BaseType::Enum => matches!(value, Value::String(_)),
        BaseType::Integer => matches!(value, Value::Integer(_)),
        BaseType::Real => matches!(value, Value::Integer(_))
            || matches!(value, Value::Real(r) if r.is_finite()),
        BaseType::Boolean => matches!(value, Value::Boolean(_)),
        BaseType::List(_) => matches!(value, Value::List(_)),
        BaseType::Nested(_) => matches!(value, Value::Object(_)),
    }
}

fn holds(constraint: &Constraint, value: &Value) -> bool {
    match constraint {
        Constraint::Regex { pattern } => match value {
            Value::String(s) => regex::Regex::new(pattern).unwrap().is_match(s),
            _ => true,
        },
        Constraint::Range { min, max } => match value.as_number() {
            Some(n) => n >= *min && n <= *max,
            None => true,
        },
        Constraint::Length { min, max } => {
            let length = match value {
                Value::String(s) => s.chars().count() as u64,
                Value::List(items) => items.len() as u64,
                _ => return true,
            };
            length >= *min && length <= *max
        }
        Constraint::EnumMembers { members } => match value {
            Value::String(s) => members.contains(s),
            _ => true,
        },
        Constraint::NonEmpty => match value {
            Value::String(s) => !s.is_empty(),
            Value::List(items) => !items.is_empty(),
            _ => true,
        },
    }
}
