//! Published JSON schemas and validation against them.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use jsonschema::Validator;
use serde::Serialize;
use serde_json::Value;

pub const DOCUMENT: &str = include_str!("../schemas/v1.json");

/// A schema violation located by JSON pointer.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

pub fn document() -> &'static Value {
    static DOC: OnceLock<Value> = OnceLock::new();
    DOC.get_or_init(|| serde_json::from_str(DOCUMENT).expect("schema document is valid JSON"))
}

/// Names of the top-level definitions, one per request or response type.
pub fn names() -> Vec<&'static str> {
    document()["$defs"].as_object().unwrap().keys().map(String::as_str).collect()
}

/// The definition `name` as a standalone schema.
pub fn standalone(name: &str) -> Option<Value> {
    let doc = document();
    doc["$defs"].get(name)?;
    let mut s = doc.clone();
    let obj = s.as_object_mut().unwrap();
    obj.insert("$ref".into(), Value::String(format!("#/$defs/{name}")));
    obj.remove("$id");
    Some(s)
}

fn validators() -> &'static BTreeMap<String, Validator> {
    static V: OnceLock<BTreeMap<String, Validator>> = OnceLock::new();
    V.get_or_init(|| {
        names()
            .into_iter()
            .map(|n| {
                let v = jsonschema::validator_for(&standalone(n).unwrap()).unwrap_or_else(|e| panic!("schema {n}: {e}"));
                (n.to_string(), v)
            })
            .collect()
    })
}

/// Checks `instance` against the definition `name`.
pub fn validate(name: &str, instance: &Value) -> Result<(), Vec<Violation>> {
    let v = validators().get(name).unwrap_or_else(|| panic!("no schema named {name}"));
    let errors: Vec<Violation> = v
        .iter_errors(instance)
        .map(|e| Violation {
            path: e.instance_path.to_string(),
            message: e.to_string(),
        })
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_definition_compiles() {
        assert!(validators().len() >= 20);
    }

    #[test]
    fn model_source_is_exclusive() {
        let spec = serde_json::to_value(trivine::scenarios::get("S1").unwrap().spec).unwrap();
        assert!(validate("tau_curve_request", &serde_json::json!({"scenario": "S1"})).is_ok());
        assert!(validate("tau_curve_request", &serde_json::json!({ "spec": spec })).is_ok());
        assert!(validate("tau_curve_request", &serde_json::json!({"scenario": "S1", "spec": spec})).is_err());
        assert!(validate("tau_curve_request", &serde_json::json!({})).is_err());
    }

    #[test]
    fn violations_carry_paths() {
        let bad = serde_json::json!({"scenario": "S1", "levels": [0.1, -2.0]});
        let errs = validate("mesh_request", &bad).unwrap_err();
        assert!(errs.iter().any(|e| e.path == "/levels/1"), "{errs:?}");
    }
}
