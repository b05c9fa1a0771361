//! Dotted-path overrides applied to the raw scenario document before
//! schema validation: `sim.seed=7`, `agents.0.initial.speed=1.5`,
//! `sim.planner=dmpc`. The value side is parsed as JSON when possible and
//! falls back to a plain string, so both `7` and `dmpc` work unquoted.

use serde_json::Value;

/// Apply one `PATH=VALUE` override in place. Intermediate path segments
/// must already exist; the final segment may introduce a new key so that
/// optional settings can be switched on from the command line.
pub fn apply(root: &mut Value, spec: &str) -> Result<(), String> {
    let Some((path, raw)) = spec.split_once('=') else {
        return Err(format!("override '{spec}': expected PATH=VALUE"));
    };
    if path.is_empty() {
        return Err(format!("override '{spec}': empty path"));
    }
    let parsed: Value =
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let segments: Vec<&str> = path.split('.').collect();
    let mut cursor = root;
    for (i, segment) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        match cursor {
            Value::Object(map) => {
                if last {
                    map.insert(segment.to_string(), parsed);
                    return Ok(());
                }
                cursor = map.get_mut(*segment).ok_or_else(|| {
                    format!("override '{path}': key '{segment}' not found")
                })?;
            }
            Value::Array(items) => {
                let index: usize = segment.parse().map_err(|_| {
                    format!("override '{path}': '{segment}' is not an array index")
                })?;
                let len = items.len();
                let slot = items.get_mut(index).ok_or_else(|| {
                    format!("override '{path}': index {index} out of bounds (length {len})")
                })?;
                if last {
                    *slot = parsed;
                    return Ok(());
                }
                cursor = slot;
            }
            other => {
                return Err(format!(
                    "override '{path}': segment '{segment}' addresses a {} value, \
                     not an object or array",
                    type_name(other)
                ));
            }
        }
    }
    unreachable!("loop returns on the last segment");
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}
