use serde_json::Value;
use thiserror::Error;

use super::CognitiveDecision;

const KEYS: [&str; 5] = ["next_state", "flags", "payload_len", "t_task", "verdict"];

/// Model output that does not satisfy the decision schema.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed decision: {reason}")]
pub struct MalformedDecision {
    pub reason: String,
    pub raw: String,
}

impl MalformedDecision {
    fn new(reason: impl Into<String>, raw: &str) -> Self {
        MalformedDecision { reason: reason.into(), raw: raw.to_string() }
    }
}

/// Strictly validates a decision object.
///
/// If `raw` is not itself a JSON document, the first well-formed JSON object
/// embedded in it (e.g. inside prose or a code fence) is validated instead.
pub fn parse_decision(raw: &str) -> Result<CognitiveDecision, MalformedDecision> {
    let value = match serde_json::from_str::<Value>(raw.trim()) {
        Ok(v) => v,
        Err(_) => first_embedded_object(raw).ok_or_else(|| MalformedDecision::new("no JSON object found", raw))?,
    };
    validate(value, raw)
}

fn first_embedded_object(raw: &str) -> Option<Value> {
    raw.char_indices().filter(|&(_, c)| c == '{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(v @ Value::Object(_))) => Some(v),
            _ => None,
        }
    })
}

fn validate(value: Value, raw: &str) -> Result<CognitiveDecision, MalformedDecision> {
    let Value::Object(map) = &value else {
        return Err(MalformedDecision::new("top-level value is not an object", raw));
    };
    if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(MalformedDecision::new(format!("unknown key `{k}`"), raw));
    }
    if let Some(k) = KEYS.iter().find(|k| !map.contains_key(**k)) {
        return Err(MalformedDecision::new(format!("missing key `{k}`"), raw));
    }
    let decision: CognitiveDecision =
        serde_json::from_value(value).map_err(|e| MalformedDecision::new(e.to_string(), raw))?;
    decision.check_consistency().map_err(|e| MalformedDecision::new(e, raw))?;
    Ok(decision)
}
