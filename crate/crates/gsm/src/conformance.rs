//! Golden request/response corpora for checking that another GSM implementation
//! speaks the same protocol.
//!
//! A corpus is recorded by replaying probes against a GSM with a fresh store. The
//! GSM's base URL is replaced by [`BASE`] in recorded bodies, so the corpus can be
//! replayed against any host. Cases run in order and may depend on earlier ones
//! (handles are allocated from id 0).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::client::{Client, ClientError};

/// Placeholder for the base URL of the GSM under test.
pub const BASE: &str = "{base}";

fn post() -> String {
    "POST".into()
}

/// A request to replay. `body` is sent verbatim after substituting [`BASE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub name: String,
    #[serde(default = "post")]
    pub method: String,
    pub path: String,
    #[serde(default)]
    pub body: String,
}

impl Probe {
    pub fn post(name: &str, path: &str, body: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            method: post(),
            path: path.into(),
            body: body.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    #[serde(flatten)]
    pub probe: Probe,
    pub status: u16,
    pub response: Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub cases: Vec<Case>,
}

impl Corpus {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("corpora serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    /// What differed, for failed cases.
    pub detail: Option<String>,
}

fn send(client: &Client, base: &str, probe: &Probe) -> Result<(u16, Json), ClientError> {
    let base = base.trim_end_matches('/');
    let body = probe.body.replace(BASE, base);
    let (status, text) = client.send_raw(&probe.method, &format!("{base}{}", probe.path), &body)?;
    let text = text.replace(base, BASE);
    let json = serde_json::from_str(&text).unwrap_or(Json::String(text));
    Ok((status, json))
}

/// Replays `probes` against the GSM at `base` and records the answers.
pub fn record(client: &Client, base: &str, probes: &[Probe]) -> Result<Corpus, ClientError> {
    let cases = probes
        .iter()
        .map(|p| {
            send(client, base, p).map(|(status, response)| Case {
                probe: p.clone(),
                status,
                response,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Corpus { cases })
}

/// Replays the corpus against the GSM at `base`, which must start from a fresh store.
pub fn check(client: &Client, base: &str, corpus: &Corpus) -> Vec<Outcome> {
    corpus
        .cases
        .iter()
        .map(|case| {
            let detail = match send(client, base, &case.probe) {
                Err(e) => Some(e.to_string()),
                Ok((status, _)) if status != case.status => Some(format!("status {status}, expected {}", case.status)),
                Ok((_, body)) if !equivalent(&case.response, &body) => {
                    Some(format!("body {body}, expected {}", case.response))
                }
                Ok(_) => None,
            };
            Outcome {
                name: case.probe.name.clone(),
                passed: detail.is_none(),
                detail,
            }
        })
        .collect()
}

/// Semantic body equality: numbers compare by value, and an `error` member only
/// has to be present as a string on both sides, since messages are free text.
pub fn equivalent(expected: &Json, actual: &Json) -> bool {
    match (expected, actual) {
        (Json::Number(a), Json::Number(b)) => a.as_f64() == b.as_f64(),
        (Json::Array(a), Json::Array(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| equivalent(x, y)),
        (Json::Object(a), Json::Object(b)) => {
            a.len() == b.len()
                && a.iter().all(|(k, v)| match (k.as_str(), b.get(k)) {
                    ("error", Some(w)) => v.is_string() && w.is_string(),
                    (_, Some(w)) => equivalent(v, w),
                    (_, None) => false,
                })
        }
        _ => expected == actual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn equivalence() {
        assert!(equivalent(&json!({"result": {"type": "number", "value": 1}}), &json!({"result": {"type": "number", "value": 1.0}})));
        assert!(equivalent(&json!({"error": "x", "step": 1}), &json!({"step": 1, "error": "other words"})));
        assert!(!equivalent(&json!({"error": "x", "step": 1}), &json!({"error": "x", "step": 2})));
        assert!(!equivalent(&json!({"error": "x"}), &json!({"error": "x", "step": 0})));
        assert!(!equivalent(&json!({"result": {"type": "null"}}), &json!({"result": {"type": "null", "value": null}})));
        assert!(!equivalent(&json!([0.1, 0.2]), &json!([0.1, 0.2000000001])));
    }

    #[test]
    fn corpus_round_trip() {
        let corpus = Corpus {
            cases: vec![Case {
                probe: Probe::post("create", "/x/new", ""),
                status: 200,
                response: json!({"result": {"type": "handle", "value": "{base}/x/0"}}),
            }],
        };
        let back: Corpus = serde_json::from_str(&corpus.to_pretty()).unwrap();
        assert_eq!(back, corpus);
        assert!(corpus.to_pretty().contains("\"method\": \"POST\""));
    }
}
