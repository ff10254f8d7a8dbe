//! Executing compositions, either by choreography (each GSM forwards to the next
//! hop) or by client-side orchestration.

use svcplan_core::composition::{Composition, Source, Step, Target};
use thiserror::Error;

use crate::client::{Client, ClientError};
use crate::value::{Arguments, Value};
use crate::wire::{step_key, Request};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("step {step}: {error}")]
pub struct ChoreographyError {
    pub step: usize,
    pub error: ClientError,
}

/// Looks a step source up in an environment of query inputs and `$<i>` results.
pub fn lookup<'a>(env: &'a Arguments, source: &Source) -> Option<&'a Value> {
    match source {
        Source::Query(q) => env.get(q),
        Source::Step(j) => env.get(&step_key(*j)),
    }
}

pub fn step_url(step: &Step, env: &Arguments) -> Result<String, String> {
    match &step.target {
        Target::Static { endpoint, service } => Ok(format!("{}/{service}/{}", endpoint.trim_end_matches('/'), step.operation)),
        Target::Instance { handle, .. } => match lookup(env, handle) {
            Some(Value::Handle(url)) => Ok(format!("{url}/{}", step.operation)),
            Some(other) => Err(format!("handle source {handle} holds a {}", other.kind())),
            None => Err(format!("handle source {handle} is unbound")),
        },
    }
}

pub fn step_arguments(step: &Step, env: &Arguments) -> Result<Arguments, String> {
    step.inputs
        .iter()
        .map(|(name, src)| {
            lookup(env, src)
                .cloned()
                .map(|v| (name.clone(), v))
                .ok_or_else(|| format!("input `{name}` refers to unbound {src}"))
        })
        .collect()
}

fn local_failure(message: String) -> ClientError {
    ClientError::Service {
        status: 400,
        message,
        step: None,
    }
}

/// Runs every step from the client, threading results forward. Returns all step
/// results in order.
pub fn orchestrate_steps(client: &Client, composition: &Composition, inputs: &Arguments) -> Result<Vec<Value>, ChoreographyError> {
    let mut env = inputs.clone();
    let mut results = Vec::with_capacity(composition.len());
    for (i, step) in composition.steps.iter().enumerate() {
        let fail = |error| ChoreographyError { step: i, error };
        let url = step_url(step, &env).map_err(|m| fail(local_failure(m)))?;
        let args = step_arguments(step, &env).map_err(|m| fail(local_failure(m)))?;
        let value = client.post(&url, &Request::call(args)).map_err(fail)?;
        env.insert(step_key(i), value.clone());
        results.push(value);
    }
    Ok(results)
}

/// Client-side orchestration; the result of the last step, or null for an empty
/// composition.
pub fn execute_orchestrated(client: &Client, composition: &Composition, inputs: &Arguments) -> Result<Value, ChoreographyError> {
    Ok(orchestrate_steps(client, composition, inputs)?.pop().unwrap_or(Value::Null))
}

/// Sends step 0 with the whole composition attached. Every GSM runs its step and
/// forwards to the next; the last one answers, and the answer is relayed back along
/// the chain, so the client receives exactly one response.
pub fn execute_choreography(client: &Client, composition: &Composition, inputs: &Arguments) -> Result<Value, ChoreographyError> {
    let Some(first) = composition.steps.first() else {
        return Ok(Value::Null);
    };
    let fail = |error| ChoreographyError { step: 0, error };
    composition.validate().map_err(|e| fail(local_failure(e.to_string())))?;
    let url = step_url(first, inputs).map_err(|m| fail(local_failure(m)))?;
    let request = Request {
        arguments: inputs.clone(),
        composition: Some(composition.clone()),
        step_index: Some(0),
    };
    client.post(&url, &request).map_err(|error| ChoreographyError {
        step: error.step().unwrap_or(0),
        error,
    })
}
