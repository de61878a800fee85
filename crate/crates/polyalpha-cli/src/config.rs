//! Config loading: flat JSON files mirroring `TrainConfig` field names,
//! with `--seed` and `--set KEY=VALUE` overrides applied on top.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde_json::Value;

use polyalpha::train::TrainConfig;

use crate::CliError;

/// Load a config file (or defaults), apply the seed shortcut and `--set`
/// overrides, and validate the result. Unknown field names are rejected
/// so typos fail loudly instead of silently training the wrong thing.
pub fn load_train_config(
    path: Option<&Path>,
    seed: Option<u64>,
    sets: &[String],
) -> Result<TrainConfig, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Runtime(format!("reading {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("parsing {}: {e}", p.display())))?
        }
        None => serde_json::to_value(TrainConfig::default()).expect("default serializes"),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    if let Some(seed) = seed {
        obj.insert("seed".into(), Value::from(seed));
    }
    apply_overrides(obj, sets)?;
    check_known_keys(obj.keys())?;
    finish(value)
}

/// Apply `--set` overrides to an already-loaded config.
pub fn override_config(config: &TrainConfig, sets: &[String]) -> Result<TrainConfig, CliError> {
    let mut value = serde_json::to_value(config).expect("config serializes");
    let obj = value.as_object_mut().expect("config is an object");
    apply_overrides(obj, sets)?;
    check_known_keys(obj.keys())?;
    finish(value)
}

fn finish(value: Value) -> Result<TrainConfig, CliError> {
    let config: TrainConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn apply_overrides(
    obj: &mut serde_json::Map<String, Value>,
    sets: &[String],
) -> Result<(), CliError> {
    for item in sets {
        let (key, raw) = item.split_once('=').ok_or_else(|| {
            CliError::Config(format!("--set expects KEY=VALUE, got {item:?}"))
        })?;
        // Values parse as JSON when possible (numbers, lists, booleans)
        // and fall back to plain strings (cipher names, keys).
        let value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        obj.insert(key.to_string(), value);
    }
    Ok(())
}

fn check_known_keys<'a>(keys: impl Iterator<Item = &'a String>) -> Result<(), CliError> {
    let defaults = serde_json::to_value(TrainConfig::default()).expect("default serializes");
    let known: BTreeSet<&str> =
        defaults.as_object().expect("object").keys().map(String::as_str).collect();
    for key in keys {
        if !known.contains(key.as_str()) {
            return Err(CliError::Config(format!(
                "unknown config field {key:?}; known fields: {}",
                known.iter().copied().collect::<Vec<_>>().join(", ")
            )));
        }
    }
    Ok(())
}

/// Parse a comma-separated list like `32,64,128`.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad {what} entry {part:?}")))
        })
        .collect()
}
