use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A tagged value on the wire: `{"type": "<kind>", "value": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Value {
    Null,
    Number(f64),
    String(String),
    Boolean(bool),
    /// Row-major; all rows have the same length.
    Matrix(Vec<Vec<f64>>),
    Labels(Vec<String>),
    /// URL of a service instance, `http://host/class/id`.
    Handle(String),
}

pub type Arguments = BTreeMap<String, Value>;

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Number(_) => "number",
            Value::String(_) => "string",
            Value::Boolean(_) => "boolean",
            Value::Matrix(_) => "matrix",
            Value::Labels(_) => "labels",
            Value::Handle(_) => "handle",
        }
    }

    /// Checks the payload invariants: rectangular matrices, well-formed handles.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Value::Matrix(rows) => {
                if let Some(first) = rows.first() {
                    if let Some(i) = rows.iter().position(|r| r.len() != first.len()) {
                        return Err(format!("matrix row {i} has {} columns, expected {}", rows[i].len(), first.len()));
                    }
                }
                Ok(())
            }
            Value::Handle(url) => parse_handle(url).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&[Vec<f64>]> {
        match self {
            Value::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_labels(&self) -> Option<&[String]> {
        match self {
            Value::Labels(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_handle(&self) -> Option<&str> {
        match self {
            Value::Handle(h) => Some(h),
            _ => None,
        }
    }
}

/// Splits `http://host/class/id` into (base URL, class, id).
pub fn parse_handle(url: &str) -> Result<(&str, &str, u64), String> {
    let bad = || format!("`{url}` is not a handle URL of the form http://host/class/id");
    let rest = url.strip_prefix("http://").ok_or_else(bad)?;
    let host_end = rest.find('/').ok_or_else(bad)?;
    let mut parts = rest[host_end + 1..].split('/');
    let (Some(class), Some(id), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    if class.is_empty() || id.is_empty() || !id.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let id = id.parse().map_err(|_| bad())?;
    Ok((&url[..7 + host_end], class, id))
}
