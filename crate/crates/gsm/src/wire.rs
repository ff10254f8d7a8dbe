use serde::{Deserialize, Serialize};
use svcplan_core::composition::Composition;

use crate::value::{Arguments, Value};

/// Body of every POST. With a composition attached, `arguments` is the
/// choreography environment: query inputs by name plus step results under `$<i>`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Request {
    #[serde(default)]
    pub arguments: Arguments,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composition: Option<Composition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_index: Option<usize>,
}

impl Request {
    pub fn call(arguments: Arguments) -> Self {
        Self {
            arguments,
            composition: None,
            step_index: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Response {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Failing composition step, for choreography errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
}

impl Response {
    pub fn ok(result: Value) -> Self {
        Self {
            result: Some(result),
            error: None,
            step: None,
        }
    }

    pub fn error(message: impl Into<String>, step: Option<usize>) -> Self {
        Self {
            result: None,
            error: Some(message.into()),
            step,
        }
    }
}

/// Name under which step `i`'s result travels in the choreography environment.
pub fn step_key(i: usize) -> String {
    format!("${i}")
}
