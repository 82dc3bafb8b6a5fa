//! Flat JSON configuration merged with command-line flags.
//!
//! Resolution order is defaults, then the `--config` file, then explicit
//! flags. The merged object is deserialized into the subcommand's parameter
//! struct, which rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

/// Keys shared by every subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Global {
    pub seed: u64,
    pub strict: bool,
    pub out_dir: PathBuf,
}

const GLOBAL_KEYS: [&str; 3] = ["seed", "strict", "out_dir"];

/// Global flags as given on the command line; `None` means "not given".
#[derive(Debug, Default, Serialize)]
pub struct GlobalFlags {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

pub struct Resolved<P> {
    pub global: Global,
    pub params: P,
}

fn as_object(v: Value, what: &str) -> Result<Map<String, Value>, CliError> {
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Config(format!("{what} must be a JSON object"))),
    }
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        base.insert(k, v);
    }
}

fn read_file(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut obj = as_object(value, "config file")?;
    if let Some(name) = obj.remove("command") {
        if name.as_str() != Some(command) {
            return Err(CliError::Config(format!("config file is for command {name}, not {command:?}")));
        }
    }
    if obj.values().any(|v| v.is_object()) {
        return Err(CliError::Config("config must be flat: nested objects are not allowed".into()));
    }
    Ok(obj)
}

pub fn resolve<P: DeserializeOwned>(
    command: &str,
    file: Option<&Path>,
    defaults: Value,
    global_flags: &GlobalFlags,
    flags: &impl Serialize,
) -> Result<Resolved<P>, CliError> {
    let mut merged = as_object(defaults, "defaults")?;
    overlay(
        &mut merged,
        as_object(
            serde_json::json!({ "seed": 0, "strict": false, "out_dir": "qfisher-out" }),
            "defaults",
        )?,
    );
    if let Some(path) = file {
        overlay(&mut merged, read_file(path, command)?);
    }
    let to_obj = |v: serde_json::Result<Value>| v.map_err(|e| CliError::Config(e.to_string())).and_then(|v| as_object(v, "flags"));
    overlay(&mut merged, to_obj(serde_json::to_value(flags))?);
    overlay(&mut merged, to_obj(serde_json::to_value(global_flags))?);

    let mut global = Map::new();
    for key in GLOBAL_KEYS {
        if let Some(v) = merged.remove(key) {
            global.insert(key.to_string(), v);
        }
    }
    let global: Global = serde_json::from_value(Value::Object(global)).map_err(|e| CliError::Config(e.to_string()))?;
    let params: P = serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Resolved { global, params })
}

/// Accept either a single number or an array of numbers.
pub fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        q: f64,
        #[serde(deserialize_with = "one_or_many")]
        alpha: Vec<f64>,
    }

    #[derive(Serialize)]
    struct F {
        #[serde(skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn flags_override_file_and_file_overrides_defaults() {
        let file = write(r#"{"q": 2.0, "alpha": 3, "seed": 7}"#);
        let defaults = serde_json::json!({"q": 1.0, "alpha": [2.0]});
        let r: Resolved<P> = resolve("x", Some(file.path()), defaults.clone(), &GlobalFlags::default(), &F { q: Some(1.5) }).unwrap();
        assert_eq!(r.params.q, 1.5);
        assert_eq!(r.params.alpha, vec![3.0]);
        assert_eq!(r.global.seed, 7);
        let r: Resolved<P> = resolve("x", None, defaults, &GlobalFlags::default(), &F { q: None }).unwrap();
        assert_eq!((r.params.q, r.global.seed), (1.0, 0));
    }

    #[test]
    fn unknown_and_nested_keys_are_rejected() {
        let defaults = serde_json::json!({"q": 1.0, "alpha": 2.0});
        for text in [r#"{"qq": 1}"#, r#"{"q": {"a": 1}}"#, r#"{"command": "other"}"#, "[1]", "{"] {
            let file = write(text);
            let r = resolve::<P>("x", Some(file.path()), defaults.clone(), &GlobalFlags::default(), &F { q: None });
            assert!(matches!(r, Err(CliError::Config(_))), "{text}");
        }
    }
}
