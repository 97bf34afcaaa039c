//! The seeded Bernoulli mock.
//!
//! Each call draws a pass/fail outcome per configured family and emits a
//! serialized object whose per-family fields carry either the valid value or
//! the corrupting one. Draws derive from `(config seed, request seed)` when
//! the request carries a seed — this is what keeps concurrent estimator runs
//! reproducible — and from `(config seed, call index)` otherwise.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExtraField, Generator, GeneratorRequest, GeneratorResponse, TransportError};
use crate::seed::mix;

/// One predicate family the mock can pass or fail, realized as a single
/// field that takes `pass_value` or `fail_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEmission {
    pub name: String,
    pub pass_probability: f64,
    pub field: String,
    pub pass_value: serde_json::Value,
    pub fail_value: serde_json::Value,
}

/// How family outcomes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DependenceMode {
    /// One independent draw per family.
    #[default]
    Independent,
    /// Exactly two families whose failure probabilities sum to 1; a single
    /// draw picks which one fails, so exactly one family fails every call.
    AntiCorrelated,
}

pub struct BernoulliGenerator {
    config_seed: u64,
    families: Vec<FamilyEmission>,
    mode: DependenceMode,
    extra_fields: Vec<ExtraField>,
    fallback_counter: AtomicU64,
}

impl BernoulliGenerator {
    pub fn new(
        seed: u64,
        families: Vec<FamilyEmission>,
        mode: DependenceMode,
        extra_fields: Vec<ExtraField>,
    ) -> Result<Self, String> {
        if families.is_empty() {
            return Err("bernoulli-mock: at least one family is required".to_string());
        }
        for family in &families {
            if family.name.is_empty() {
                return Err("bernoulli-mock: family names must not be empty".to_string());
            }
            if !(0.0..=1.0).contains(&family.pass_probability) {
                return Err(format!(
                    "bernoulli-mock: pass_probability for family {:?} must be in [0, 1]",
                    family.name
                ));
            }
        }
        let mut fields: Vec<&str> = families.iter().map(|f| f.field.as_str()).collect();
        fields.extend(extra_fields.iter().map(|f| f.field.as_str()));
        let unique: std::collections::HashSet<&str> = fields.iter().copied().collect();
        if unique.len() != fields.len() {
            return Err("bernoulli-mock: emitted field names must be distinct".to_string());
        }
        if mode == DependenceMode::AntiCorrelated {
            if families.len() != 2 {
                return Err(
                    "bernoulli-mock: anti-correlated mode requires exactly two families"
                        .to_string(),
                );
            }
            let fail_sum: f64 = families.iter().map(|f| 1.0 - f.pass_probability).sum();
            if (fail_sum - 1.0).abs() > 1e-9 {
                return Err(
                    "bernoulli-mock: anti-correlated failure probabilities must sum to 1"
                        .to_string(),
                );
            }
        }
        Ok(Self {
            config_seed: seed,
            families,
            mode,
            extra_fields,
            fallback_counter: AtomicU64::new(0),
        })
    }

    /// Per-family pass draws for one call.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<bool> {
        match self.mode {
            DependenceMode::Independent => self
                .families
                .iter()
                .map(|f| rng.gen::<f64>() < f.pass_probability)
                .collect(),
            DependenceMode::AntiCorrelated => {
                let first_fails = rng.gen::<f64>() < (1.0 - self.families[0].pass_probability);
                vec![!first_fails, first_fails]
            }
        }
    }

    fn emit(&self, passes: &[bool]) -> String {
        let mut out = String::from("{");
        let mut first = true;
        let mut push_field = |out: &mut String, name: &str, value: &serde_json::Value| {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&serde_json::to_string(name).expect("field name serializes"));
            out.push(':');
            out.push_str(&serde_json::to_string(value).expect("field value serializes"));
        };
        for (family, pass) in self.families.iter().zip(passes) {
            let value = if *pass {
                &family.pass_value
            } else {
                &family.fail_value
            };
            push_field(&mut out, &family.field, value);
        }
        for extra in &self.extra_fields {
            push_field(&mut out, &extra.field, &extra.value);
        }
        out.push('}');
        out
    }
}

impl Generator for BernoulliGenerator {
    fn generate(&self, request: &GeneratorRequest) -> Result<GeneratorResponse, TransportError> {
        let entropy = request
            .seed
            .unwrap_or_else(|| self.fallback_counter.fetch_add(1, Ordering::Relaxed));
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.config_seed, entropy));
        let passes = self.draw(&mut rng);
        Ok(GeneratorResponse::mock(&request.prompt, self.emit(&passes)))
    }
}
