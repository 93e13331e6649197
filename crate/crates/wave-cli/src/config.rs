//! Effective configuration: defaults, then command-line flags, then the JSON config file.
//!
//! Every subcommand's flags (and the global `--out`, `--seed`, `--group`) form one flat
//! JSON object whose keys are the long flag names in snake case. A config file is a JSON
//! object over the same keys; each key it sets replaces the flag value. Unknown keys are a
//! validation error, so a typo never silently falls back to a default.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Reads a config file; it must hold a JSON object.
pub fn read_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Validation(format!("config {} is not a JSON object", path.display()))),
        Err(e) => Err(CliError::Validation(format!("config {} is not valid JSON: {e}", path.display()))),
    }
}

/// Flattens the serialized global and command options into one object.
pub fn flag_object<G: Serialize, A: Serialize>(global: &G, args: &A) -> Result<Map<String, Value>, CliError> {
    let mut out = Map::new();
    for part in [to_object(global)?, to_object(args)?] {
        for (k, v) in part {
            if out.insert(k.clone(), v).is_some() {
                return Err(CliError::Internal(format!("option `{k}` is defined twice")));
            }
        }
    }
    Ok(out)
}

fn to_object<T: Serialize>(value: &T) -> Result<Map<String, Value>, CliError> {
    match serde_json::to_value(value) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Internal("options do not serialize to an object".into())),
        Err(e) => Err(CliError::Internal(format!("options do not serialize: {e}"))),
    }
}

/// Applies the config file on top of the flags.
pub fn overlay(mut flags: Map<String, Value>, file: Option<Map<String, Value>>) -> Result<Map<String, Value>, CliError> {
    if let Some(file) = file {
        for (k, v) in file {
            match flags.get_mut(&k) {
                Some(slot) => *slot = v,
                None => {
                    let mut known: Vec<&String> = flags.keys().collect();
                    known.sort();
                    return Err(CliError::Validation(format!("unknown config key `{k}` (known: {known:?})")));
                }
            }
        }
    }
    Ok(flags)
}

/// Reads one option struct back out of the merged object.
pub fn extract<T: DeserializeOwned>(merged: &Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(merged.clone()))
        .map_err(|e| CliError::Validation(format!("invalid configuration value: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct G {
        seed: u64,
    }

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct A {
        lambda: Vec<f64>,
    }

    #[test]
    fn file_overrides_flags() {
        let flags = flag_object(&G { seed: 1 }, &A { lambda: vec![32.0] }).unwrap();
        let mut file = Map::new();
        file.insert("seed".into(), Value::from(9));
        let merged = overlay(flags, Some(file)).unwrap();
        assert_eq!(extract::<G>(&merged).unwrap(), G { seed: 9 });
        assert_eq!(extract::<A>(&merged).unwrap(), A { lambda: vec![32.0] });
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        let flags = flag_object(&G { seed: 1 }, &A { lambda: vec![32.0] }).unwrap();
        let mut file = Map::new();
        file.insert("lamda".into(), Value::from(4));
        assert!(matches!(overlay(flags.clone(), Some(file)), Err(CliError::Validation(_))));
        let mut file = Map::new();
        file.insert("seed".into(), Value::from("x"));
        let merged = overlay(flags, Some(file)).unwrap();
        assert!(matches!(extract::<G>(&merged), Err(CliError::Validation(_))));
    }
}
