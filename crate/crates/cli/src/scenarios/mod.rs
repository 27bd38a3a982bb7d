//! The scenario registry: each entry owns its defaults, its structural
//! validation, and its run function.
//!
//! Scenario names and their headline claims are part of the command-line
//! contract; assertion outcomes decide the process exit status.

mod chain;
mod group;
mod lattice;

use crate::config::ValidationError;
use crate::report::Report;
use crate::CliError;
use serde::de::DeserializeOwned;
use serde_json::Value;

pub struct ParamDoc {
    pub name: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

pub struct ScenarioDef {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamDoc],
    pub defaults: fn() -> Value,
    pub validate: fn(&Value) -> Vec<ValidationError>,
    pub run: fn(&Value) -> Result<Report, CliError>,
}

pub fn registry() -> &'static [ScenarioDef] {
    &[
        lattice::ZP2_PPOWER,
        lattice::APARTMENT,
        lattice::PROP34,
        lattice::LIFT,
        group::CYCLOTOMIC_LOWERP,
        group::SL3_PRODUCT,
        group::HEISENBERG_PFD,
        group::LOWERP_BOUND,
        chain::CHAIN_ETA,
        chain::INTERVAL_SAMPLE,
        group::COMPARE_SERIES,
    ]
}

pub fn find(name: &str) -> Option<&'static ScenarioDef> {
    registry().iter().find(|d| d.name == name)
}

/// Element budget: `HDLAB_BUDGET` wins over the config's `budget` field,
/// which wins over the library default.
pub fn budget_from(doc: &Value) -> u64 {
    if let Ok(s) = std::env::var("HDLAB_BUDGET") {
        if let Ok(b) = s.trim().parse::<u64>() {
            return b;
        }
    }
    doc.get("budget")
        .and_then(Value::as_u64)
        .unwrap_or(hdlab_core::DEFAULT_BUDGET)
}

/// Deserialize the scenario's parameters, dropping the registry key and the
/// budget (which [budget_from] resolves uniformly).
fn typed<T: DeserializeOwned>(doc: &Value) -> Result<T, CliError> {
    let mut doc = doc.clone();
    if let Value::Object(map) = &mut doc {
        map.remove("scenario");
        map.remove("budget");
    }
    serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique_and_resolvable() {
        let names: Vec<&str> = registry().iter().map(|d| d.name).collect();
        assert_eq!(names.len(), 11);
        for name in &names {
            assert!(find(name).is_some());
            assert_eq!(names.iter().filter(|n| n == &name).count(), 1);
        }
        assert!(find("no-such-scenario").is_none());
    }

    #[test]
    fn every_default_config_validates_cleanly() {
        for def in registry() {
            let doc = (def.defaults)();
            assert_eq!(doc.get("scenario").and_then(Value::as_str), Some(def.name));
            let errs = (def.validate)(&doc);
            assert!(errs.is_empty(), "{}: {:?}", def.name, errs);
        }
    }

    #[test]
    fn params_document_every_default_field() {
        for def in registry() {
            let doc = (def.defaults)();
            let Value::Object(map) = &doc else { panic!("defaults must be objects") };
            for key in map.keys().filter(|k| *k != "scenario") {
                assert!(
                    def.params.iter().any(|p| p.name == key),
                    "{}: field '{key}' missing from the parameter docs",
                    def.name
                );
            }
        }
    }
}
