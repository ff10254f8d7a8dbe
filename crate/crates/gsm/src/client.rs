use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use thiserror::Error;

use crate::value::{Arguments, Value};
use crate::wire::{Request, Response};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    /// No HTTP response was obtained. Calls are never retried automatically since
    /// most are not idempotent; `retriable` tells whether the request can be
    /// assumed not to have reached the service.
    #[error("cannot reach {url}: {message}")]
    Transport { url: String, message: String, retriable: bool },
    #[error("service error {status}: {message}")]
    Service {
        status: u16,
        message: String,
        step: Option<usize>,
    },
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Service { status, .. } => Some(*status),
            _ => None,
        }
    }

    pub fn step(&self) -> Option<usize> {
        match self {
            ClientError::Service { step, .. } => *step,
            _ => None,
        }
    }
}

/// Thin client for the GSM route grammar. Counts every HTTP response it receives.
#[derive(Debug)]
pub struct Client {
    agent: ureq::Agent,
    responses: AtomicUsize,
}

impl Default for Client {
    fn default() -> Self {
        Self::new()
    }
}

impl Client {
    pub fn new() -> Self {
        Self::with_timeout(Duration::from_secs(300))
    }

    pub fn with_timeout(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new()
                .timeout_connect(Duration::from_secs(5).min(timeout))
                .timeout(timeout)
                .build(),
            responses: AtomicUsize::new(0),
        }
    }

    pub fn responses_received(&self) -> usize {
        self.responses.load(Ordering::SeqCst)
    }

    /// Returns the raw status and body of a POST.
    pub fn post_raw(&self, url: &str, body: &str) -> Result<(u16, String), ClientError> {
        self.send_raw("POST", url, body)
    }

    /// Any HTTP method; the GSM itself only answers POST.
    pub fn send_raw(&self, method: &str, url: &str, body: &str) -> Result<(u16, String), ClientError> {
        let transport = |message: String, retriable: bool| ClientError::Transport {
            url: url.to_string(),
            message,
            retriable,
        };
        let req = self.agent.request(method, url).set("Content-Type", "application/json");
        let sent = if body.is_empty() { req.call() } else { req.send_string(body) };
        let resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(ureq::Error::Transport(t)) => {
                let retriable = matches!(t.kind(), ureq::ErrorKind::ConnectionFailed | ureq::ErrorKind::Dns);
                return Err(transport(t.to_string(), retriable));
            }
        };
        self.responses.fetch_add(1, Ordering::SeqCst);
        let status = resp.status();
        let text = resp.into_string().map_err(|e| transport(e.to_string(), false))?;
        Ok((status, text))
    }

    pub fn post(&self, url: &str, request: &Request) -> Result<Value, ClientError> {
        let body = serde_json::to_string(request).expect("requests serialize");
        let (status, text) = self.post_raw(url, &body)?;
        let resp: Response = serde_json::from_str(&text)
            .map_err(|e| ClientError::Protocol(format!("{url} answered {status} with unparsable body: {e}")))?;
        if status == 200 {
            resp.result
                .ok_or_else(|| ClientError::Protocol(format!("{url} answered 200 without a result")))
        } else {
            Err(ClientError::Service {
                status,
                message: resp.error.unwrap_or_default(),
                step: resp.step,
            })
        }
    }

    /// `POST {class_url}/new`, returning the instance handle URL.
    pub fn create(&self, class_url: &str, arguments: Arguments) -> Result<String, ClientError> {
        match self.post(&format!("{}/new", class_url.trim_end_matches('/')), &Request::call(arguments))? {
            Value::Handle(h) => Ok(h),
            other => Err(ClientError::Protocol(format!("constructor returned {} instead of a handle", other.kind()))),
        }
    }

    /// `POST {target}/{method}` where `target` is a class URL or an instance handle.
    pub fn invoke(&self, target: &str, method: &str, arguments: Arguments) -> Result<Value, ClientError> {
        self.post(&format!("{}/{method}", target.trim_end_matches('/')), &Request::call(arguments))
    }
}
