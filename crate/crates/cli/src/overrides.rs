//! `--override key=value` handling on the JSON form of a config.
//!
//! Keys are dotted paths (`al.batch_size`, `anomaly.models.forest.n_trees`)
//! and must name a field that already exists once defaults are filled in.
//! Values are parsed as JSON where possible and taken as strings otherwise.
//! A field holding an array takes a comma list (`seeds=1,2,3`) or a JSON
//! array literal.

use serde_json::Value;

pub fn apply(config: &mut Value, overrides: &[String]) -> Result<(), String> {
    for o in overrides {
        let (key, raw) = o.split_once('=').ok_or_else(|| format!("override {o:?} is not of the form key=value"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(format!("override {o:?} has an empty key"));
        }
        let slot = lookup(config, key)?;
        *slot = parse_for(slot, raw.trim());
    }
    Ok(())
}

fn lookup<'a>(config: &'a mut Value, key: &str) -> Result<&'a mut Value, String> {
    let mut at = config;
    for part in key.split('.') {
        at = match at {
            Value::Object(map) => map.get_mut(part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| format!("unknown config key {key:?}"))?;
    }
    Ok(at)
}

fn scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn parse_for(current: &Value, raw: &str) -> Value {
    match current {
        Value::Array(_) if raw.starts_with('[') => scalar(raw),
        Value::Array(_) if raw.is_empty() => Value::Array(Vec::new()),
        Value::Array(_) => Value::Array(raw.split(',').map(|s| scalar(s.trim())).collect()),
        _ => scalar(raw),
    }
}
