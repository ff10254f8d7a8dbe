use thiserror::Error;

/// Failure to read the textual prefix notation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse `{input}`: {reason}")]
pub struct ParseError {
    pub input: String,
    pub reason: String,
}

impl ParseError {
    pub fn new(input: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            input: input.into(),
            reason: reason.into(),
        }
    }
}
