//! Structured verification records shared by every pipeline.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Config;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Stage {
    pub name: String,
    pub data: Value,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Invariant {
    pub pass: bool,
    pub value: Value,
}

/// Verification record. Field order is fixed so serialized output is
/// byte-stable for identical inputs.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub input: String,
    pub stages: Vec<Stage>,
    pub invariants: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pencil: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cofactor: Option<String>,
    pub seed: u64,
    pub config: Config,
}

impl Report {
    pub fn new(input: impl Into<String>, config: &Config) -> Self {
        Report {
            input: input.into(),
            stages: Vec::new(),
            invariants: Map::new(),
            pencil: None,
            cofactor: None,
            seed: config.seed,
            config: config.clone(),
        }
    }

    pub fn stage(&mut self, name: &str, data: Value) {
        self.stages.push(Stage {
            name: name.to_string(),
            data,
        });
    }

    /// Records an invariant; a later call with the same name replaces it.
    pub fn check(&mut self, name: &str, pass: bool, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        let inv = Invariant { pass, value };
        self.invariants.insert(
            name.to_string(),
            serde_json::to_value(inv).expect("invariant serializes"),
        );
    }

    pub fn invariant(&self, name: &str) -> Option<bool> {
        self.invariants
            .get(name)
            .and_then(|v| v.get("pass"))
            .and_then(Value::as_bool)
    }

    pub fn invariant_value(&self, name: &str) -> Option<&Value> {
        self.invariants.get(name).and_then(|v| v.get("value"))
    }

    /// True when every recorded invariant passed.
    pub fn passed(&self) -> bool {
        self.invariants
            .values()
            .all(|v| v.get("pass").and_then(Value::as_bool).unwrap_or(false))
    }

    pub fn failures(&self) -> Vec<String> {
        self.invariants
            .iter()
            .filter(|(_, v)| !v.get("pass").and_then(Value::as_bool).unwrap_or(false))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Copies the other report's stages and invariants in, prefixing names.
    pub fn absorb(&mut self, prefix: &str, other: &Report) {
        for s in &other.stages {
            self.stages.push(Stage {
                name: format!("{prefix}{}", s.name),
                data: s.data.clone(),
            });
        }
        for (k, v) in &other.invariants {
            self.invariants.insert(format!("{prefix}{k}"), v.clone());
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
