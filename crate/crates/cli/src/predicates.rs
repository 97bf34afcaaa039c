//! The declarative predicate vocabulary.
//!
//! Suite files cannot carry arbitrary code, so predicates are drawn from a
//! closed set of parameterized checks. Each spec is type-checked against its
//! target schemas at load time and compiled into a [`surety::Predicate`].

use serde::{Deserialize, Serialize};

use surety::contract::{Predicate, PredicateTarget};
use surety::schema::{BaseType, Instance, TypeSchema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetSpec {
    #[serde(rename = "input")]
    Input,
    #[serde(rename = "output")]
    Output,
    #[serde(rename = "input+output")]
    InputOutput,
}

impl From<TargetSpec> for PredicateTarget {
    fn from(target: TargetSpec) -> Self {
        match target {
            TargetSpec::Input => PredicateTarget::Input,
            TargetSpec::Output => PredicateTarget::Output,
            TargetSpec::InputOutput => PredicateTarget::InputOutput,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComparisonOp {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    NotEq,
    #[serde(rename = ">=")]
    GreaterEq,
    #[serde(rename = ">")]
    Greater,
}

impl ComparisonOp {
    fn symbol(&self) -> &'static str {
        match self {
            ComparisonOp::Less => "<",
            ComparisonOp::LessEq => "<=",
            ComparisonOp::Eq => "==",
            ComparisonOp::NotEq => "!=",
            ComparisonOp::GreaterEq => ">=",
            ComparisonOp::Greater => ">",
        }
    }

    fn holds(&self, ordering: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        matches!(
            (self, ordering),
            (ComparisonOp::Less, Less)
                | (ComparisonOp::LessEq, Less | Equal)
                | (ComparisonOp::Eq, Equal)
                | (ComparisonOp::NotEq, Less | Greater)
                | (ComparisonOp::GreaterEq, Greater | Equal)
                | (ComparisonOp::Greater, Greater)
        )
    }
}

/// One declarative predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PredicateSpec {
    /// A string field must match a regex.
    RegexMatch {
        name: String,
        family: String,
        target: TargetSpec,
        field: String,
        pattern: String,
    },
    /// A field must equal a literal value.
    FieldEquals {
        name: String,
        family: String,
        target: TargetSpec,
        field: String,
        value: serde_json::Value,
    },
    /// A string or list field's length must lie within bounds.
    LengthBound {
        name: String,
        family: String,
        target: TargetSpec,
        field: String,
        #[serde(default)]
        min: Option<u64>,
        #[serde(default)]
        max: Option<u64>,
    },
    /// A numeric field must lie within bounds.
    NumericRange {
        name: String,
        family: String,
        target: TargetSpec,
        field: String,
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
    },
    /// Two numeric fields must compare as stated. With target
    /// `input+output`, paths are prefixed `input.` / `output.`.
    CrossFieldComparison {
        name: String,
        family: String,
        target: TargetSpec,
        left: String,
        op: ComparisonOp,
        right: String,
    },
    /// A string output field must contain the input field's value.
    /// Implicitly targets input+output.
    OutputReferencesInputField {
        name: String,
        family: String,
        output_field: String,
        input_field: String,
    },
}

impl PredicateSpec {
    pub fn name(&self) -> &str {
        match self {
            PredicateSpec::RegexMatch { name, .. }
            | PredicateSpec::FieldEquals { name, .. }
            | PredicateSpec::LengthBound { name, .. }
            | PredicateSpec::NumericRange { name, .. }
            | PredicateSpec::CrossFieldComparison { name, .. }
            | PredicateSpec::OutputReferencesInputField { name, .. } => name,
        }
    }

    pub fn family(&self) -> &str {
        match self {
            PredicateSpec::RegexMatch { family, .. }
            | PredicateSpec::FieldEquals { family, .. }
            | PredicateSpec::LengthBound { family, .. }
            | PredicateSpec::NumericRange { family, .. }
            | PredicateSpec::CrossFieldComparison { family, .. }
            | PredicateSpec::OutputReferencesInputField { family, .. } => family,
        }
    }

    pub fn target(&self) -> TargetSpec {
        match self {
            PredicateSpec::RegexMatch { target, .. }
            | PredicateSpec::FieldEquals { target, .. }
            | PredicateSpec::LengthBound { target, .. }
            | PredicateSpec::NumericRange { target, .. }
            | PredicateSpec::CrossFieldComparison { target, .. } => *target,
            PredicateSpec::OutputReferencesInputField { .. } => TargetSpec::InputOutput,
        }
    }

    /// One-line summary for `explain`.
    pub fn describe(&self) -> String {
        match self {
            PredicateSpec::RegexMatch { field, pattern, .. } => {
                format!("regex-match({field} ~ /{pattern}/)")
            }
            PredicateSpec::FieldEquals { field, value, .. } => {
                format!("field-equals({field} == {value})")
            }
            PredicateSpec::LengthBound { field, min, max, .. } => format!(
                "length-bound({field} in {}..{})",
                min.map_or("0".to_string(), |m| m.to_string()),
                max.map_or("∞".to_string(), |m| m.to_string()),
            ),
            PredicateSpec::NumericRange { field, min, max, .. } => format!(
                "numeric-range({field} in {}..{})",
                min.map_or("-∞".to_string(), |m| m.to_string()),
                max.map_or("∞".to_string(), |m| m.to_string()),
            ),
            PredicateSpec::CrossFieldComparison { left, op, right, .. } => {
                format!("cross-field-comparison({left} {} {right})", op.symbol())
            }
            PredicateSpec::OutputReferencesInputField {
                output_field,
                input_field,
                ..
            } => format!("output-references-input-field({output_field} mentions {input_field})"),
        }
    }

    /// Type-checks the spec against the contract's schemas. `errors`
    /// collects human-readable problems prefixed with the contract id.
    pub fn type_check(
        &self,
        contract_id: &str,
        input_schema: &TypeSchema,
        output_schema: &TypeSchema,
        placement: TargetSpec,
        errors: &mut Vec<String>,
    ) {
        let mut found = Vec::new();
        self.type_check_inner(input_schema, output_schema, placement, &mut found);
        errors.extend(
            found
                .into_iter()
                .map(|m| format!("contract {contract_id}: predicate {}: {m}", self.name())),
        );
    }

    fn type_check_inner(
        &self,
        input_schema: &TypeSchema,
        output_schema: &TypeSchema,
        placement: TargetSpec,
        errors: &mut Vec<String>,
    ) {
        if self.name().is_empty() {
            errors.push("name must not be empty".to_string());
        }
        if self.family().is_empty() {
            errors.push("family must not be empty".to_string());
        }
        match (placement, self.target()) {
            (TargetSpec::Input, TargetSpec::Input) => {}
            (TargetSpec::Input, other) => errors.push(format!(
                "preconditions must target input, found {}",
                target_label(other)
            )),
            (_, TargetSpec::Input) => {
                errors.push("postconditions must target output or input+output".to_string())
            }
            _ => {}
        }

        // Resolves a bare field path in the predicate's target schema.
        let single = |field: &str, errors: &mut Vec<String>| -> Option<BaseType> {
            let schema = match self.target() {
                TargetSpec::Input => input_schema,
                _ => output_schema,
            };
            let resolved = resolve_base(schema, field);
            if resolved.is_none() {
                errors.push(format!(
                    "field {field:?} does not resolve in schema {}",
                    schema.name
                ));
            }
            resolved
        };

        match self {
            PredicateSpec::RegexMatch { field, pattern, .. } => {
                if let Some(base) = single(field, errors) {
                    if !matches!(base, BaseType::String) {
                        errors.push(format!(
                            "regex-match requires a string field, {field} is {}",
                            base.label()
                        ));
                    }
                }
                if let Err(err) = regex::Regex::new(pattern) {
                    errors.push(format!("invalid pattern /{pattern}/: {err}"));
                }
            }
            PredicateSpec::FieldEquals { field, value, .. } => {
                if let Some(base) = single(field, errors) {
                    let compatible = matches!(
                        (&base, value),
                        (BaseType::String | BaseType::Enum, serde_json::Value::String(_))
                            | (BaseType::Integer | BaseType::Real, serde_json::Value::Number(_))
                            | (BaseType::Boolean, serde_json::Value::Bool(_))
                    );
                    if !compatible {
                        errors.push(format!(
                            "field-equals value {value} is incompatible with {field} ({})",
                            base.label()
                        ));
                    }
                }
            }
            PredicateSpec::LengthBound { field, min, max, .. } => {
                if let Some(base) = single(field, errors) {
                    if !matches!(base, BaseType::String | BaseType::List(_)) {
                        errors.push(format!(
                            "length-bound requires a string or list field, {field} is {}",
                            base.label()
                        ));
                    }
                }
                if let (Some(min), Some(max)) = (min, max) {
                    if min > max {
                        errors.push(format!("length bounds inverted ({min} > {max})"));
                    }
                }
            }
            PredicateSpec::NumericRange { field, min, max, .. } => {
                if let Some(base) = single(field, errors) {
                    if !matches!(base, BaseType::Integer | BaseType::Real) {
                        errors.push(format!(
                            "numeric-range requires a numeric field, {field} is {}",
                            base.label()
                        ));
                    }
                }
                if let (Some(min), Some(max)) = (min, max) {
                    if min > max {
                        errors.push(format!("numeric bounds inverted ({min} > {max})"));
                    }
                }
            }
            PredicateSpec::CrossFieldComparison { left, op, right, .. } => {
                for path in [left, right] {
                    match resolve_cross(self.target(), input_schema, output_schema, path) {
                        Err(message) => errors.push(message),
                        Ok(base) => {
                            let numeric = matches!(base, BaseType::Integer | BaseType::Real);
                            let comparable = numeric
                                || matches!((op, &base), (ComparisonOp::Eq | ComparisonOp::NotEq, _));
                            if !comparable {
                                errors.push(format!(
                                    "cross-field-comparison with {} requires numeric fields, {path} is {}",
                                    op.symbol(),
                                    base.label()
                                ));
                            }
                        }
                    }
                }
            }
            PredicateSpec::OutputReferencesInputField {
                output_field,
                input_field,
                ..
            } => {
                match resolve_base(output_schema, output_field) {
                    Some(BaseType::String) => {}
                    Some(base) => errors.push(format!(
                        "output field {output_field} must be a string, found {}",
                        base.label()
                    )),
                    None => errors.push(format!(
                        "output field {output_field:?} does not resolve in schema {}",
                        output_schema.name
                    )),
                }
                if resolve_base(input_schema, input_field).is_none() {
                    errors.push(format!(
                        "input field {input_field:?} does not resolve in schema {}",
                        input_schema.name
                    ));
                }
            }
        }
    }

    /// Compiles the spec into an executable predicate. Call after
    /// `type_check` passed.
    pub fn compile(&self) -> Predicate {
        let target: PredicateTarget = self.target().into();
        match self.clone() {
            PredicateSpec::RegexMatch {
                name,
                family,
                field,
                pattern,
                ..
            } => {
                let spec_target = self.target();
                Predicate::new(name, family, target, move |input, output| {
                    let value = lookup(spec_target, input, output, &field)?;
                    let text = value
                        .as_str()
                        .ok_or_else(|| format!("field {field} is not a string"))?;
                    let re = regex::Regex::new(&pattern)
                        .map_err(|e| format!("invalid pattern /{pattern}/: {e}"))?;
                    if re.is_match(text) {
                        Ok(())
                    } else {
                        Err(format!(
                            "field {field} value {text:?} does not match /{pattern}/"
                        ))
                    }
                })
            }
            PredicateSpec::FieldEquals {
                name,
                family,
                field,
                value,
                ..
            } => {
                let spec_target = self.target();
                let expected = Value::from_json(value);
                Predicate::new(name, family, target, move |input, output| {
                    let actual = lookup(spec_target, input, output, &field)?;
                    if *actual == expected {
                        Ok(())
                    } else {
                        Err(format!(
                            "field {field} must equal {}, found {}",
                            render(&expected),
                            render(actual)
                        ))
                    }
                })
            }
            PredicateSpec::LengthBound {
                name,
                family,
                field,
                min,
                max,
                ..
            } => {
                let spec_target = self.target();
                Predicate::new(name, family, target, move |input, output| {
                    let value = lookup(spec_target, input, output, &field)?;
                    let length = match value {
                        Value::String(s) => s.chars().count() as u64,
                        Value::List(items) => items.len() as u64,
                        _ => return Err(format!("field {field} has no length")),
                    };
                    let lo = min.unwrap_or(0);
                    let hi = max.unwrap_or(u64::MAX);
                    if length < lo || length > hi {
                        Err(format!(
                            "field {field} length {length} outside {lo}..{}",
                            max.map_or("∞".to_string(), |m| m.to_string())
                        ))
                    } else {
                        Ok(())
                    }
                })
            }
            PredicateSpec::NumericRange {
                name,
                family,
                field,
                min,
                max,
                ..
            } => {
                let spec_target = self.target();
                Predicate::new(name, family, target, move |input, output| {
                    let value = lookup(spec_target, input, output, &field)?;
                    let number = value
                        .as_number()
                        .ok_or_else(|| format!("field {field} is not numeric"))?;
                    let lo = min.unwrap_or(f64::NEG_INFINITY);
                    let hi = max.unwrap_or(f64::INFINITY);
                    if number < lo || number > hi {
                        Err(format!("field {field} value {number} outside {lo}..{hi}"))
                    } else {
                        Ok(())
                    }
                })
            }
            PredicateSpec::CrossFieldComparison {
                name,
                family,
                left,
                op,
                right,
                ..
            } => {
                let spec_target = self.target();
                Predicate::new(name, family, target, move |input, output| {
                    let lv = lookup(spec_target, input, output, &left)?;
                    let rv = lookup(spec_target, input, output, &right)?;
                    let ordering = compare(lv, rv).ok_or_else(|| {
                        format!(
                            "cannot compare {left} ({}) with {right} ({})",
                            render(lv),
                            render(rv)
                        )
                    })?;
                    if op.holds(ordering) {
                        Ok(())
                    } else {
                        Err(format!(
                            "expected {left} {} {right}, found {} vs {}",
                            op.symbol(),
                            render(lv),
                            render(rv)
                        ))
                    }
                })
            }
            PredicateSpec::OutputReferencesInputField {
                name,
                family,
                output_field,
                input_field,
            } => Predicate::new(name, family, target, move |input, output| {
                let output = output.ok_or("predicate requires an output instance")?;
                let needle_value = input
                    .field(&input_field)
                    .ok_or_else(|| format!("input field {input_field} is absent"))?;
                let needle = stringify(needle_value);
                let haystack = output
                    .field(&output_field)
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| format!("output field {output_field} is absent"))?;
                if haystack.contains(&needle) {
                    Ok(())
                } else {
                    Err(format!(
                        "output field {output_field} does not mention input field {input_field} value {needle:?}"
                    ))
                }
            }),
        }
    }
}

fn target_label(target: TargetSpec) -> &'static str {
    match target {
        TargetSpec::Input => "input",
        TargetSpec::Output => "output",
        TargetSpec::InputOutput => "input+output",
    }
}

/// Follows a dotted path through nested schemas to the field's base type.
fn resolve_base(schema: &TypeSchema, path: &str) -> Option<BaseType> {
    let mut current = schema;
    let mut segments = path.split('.').peekable();
    loop {
        let segment = segments.next()?;
        let field = current.field(segment)?;
        if segments.peek().is_none() {
            return Some(field.base.clone());
        }
        match &field.base {
            BaseType::Nested(nested) => current = nested,
            _ => return None,
        }
    }
}

/// Resolves a cross-comparison path: with target input+output the path must
/// carry an `input.` or `output.` prefix; otherwise it is bare in the
/// target's schema.
fn resolve_cross(
    target: TargetSpec,
    input_schema: &TypeSchema,
    output_schema: &TypeSchema,
    path: &str,
) -> Result<BaseType, String> {
    match target {
        TargetSpec::InputOutput => {
            if let Some(rest) = path.strip_prefix("input.") {
                resolve_base(input_schema, rest)
                    .ok_or_else(|| format!("path {path:?} does not resolve in schema {}", input_schema.name))
            } else if let Some(rest) = path.strip_prefix("output.") {
                resolve_base(output_schema, rest)
                    .ok_or_else(|| format!("path {path:?} does not resolve in schema {}", output_schema.name))
            } else {
                Err(format!(
                    "path {path:?} must start with input. or output. when targeting input+output"
                ))
            }
        }
        TargetSpec::Input => resolve_base(input_schema, path)
            .ok_or_else(|| format!("path {path:?} does not resolve in schema {}", input_schema.name)),
        TargetSpec::Output => resolve_base(output_schema, path)
            .ok_or_else(|| format!("path {path:?} does not resolve in schema {}", output_schema.name)),
    }
}

/// Evaluation-time path lookup mirroring [`resolve_cross`].
fn lookup<'a>(
    target: TargetSpec,
    input: &'a Instance,
    output: Option<&'a Instance>,
    path: &str,
) -> Result<&'a Value, String> {
    let (instance, rest) = match target {
        TargetSpec::Input => (Some(input), path),
        TargetSpec::Output => (output, path),
        TargetSpec::InputOutput => {
            if let Some(rest) = path.strip_prefix("input.") {
                (Some(input), rest)
            } else if let Some(rest) = path.strip_prefix("output.") {
                (output, rest)
            } else {
                (output, path)
            }
        }
    };
    let instance = instance.ok_or("predicate requires an output instance")?;
    instance
        .field(rest)
        .ok_or_else(|| format!("field {path} is absent"))
}

fn compare(left: &Value, right: &Value) -> Option<std::cmp::Ordering> {
    match (left.as_number(), right.as_number()) {
        (Some(l), Some(r)) => l.partial_cmp(&r),
        _ => match (left, right) {
            (Value::String(l), Value::String(r)) => Some(l.cmp(r)),
            (Value::Boolean(l), Value::Boolean(r)) => Some(l.cmp(r)),
            _ => None,
        },
    }
}

fn render(value: &Value) -> String {
    serde_json::to_string(&value.to_json()).unwrap_or_else(|_| "<value>".to_string())
}

/// String form used for containment checks: strings stay bare, everything
/// else renders as JSON.
fn stringify(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => render(other),
    }
}
