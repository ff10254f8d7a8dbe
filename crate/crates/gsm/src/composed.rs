//! Composed services hosted by a GSM. `POST /composed/new` takes the JSON
//! definition of a [`ComposedService`] in the `definition` argument, runs its
//! constructor (remaining arguments are the constructor's query inputs) and keeps
//! the field handles. Every template operation then becomes an instance method
//! executed by choreography.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use svcplan_core::composition::ComposedService;

use crate::choreography::{execute_choreography, orchestrate_steps, ChoreographyError};
use crate::client::{Client, ClientError};
use crate::service::{string_arg, Context, ServiceError, Servicified};
use crate::value::{Arguments, Value};

pub const CLASS: &str = "composed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composed {
    pub definition: ComposedService,
    /// Field → instance handle URL.
    pub fields: BTreeMap<String, String>,
}

fn service_error(e: ChoreographyError) -> ServiceError {
    let message = format!("composition step {}: {}", e.step, e.error);
    match e.error.status() {
        Some(409) => ServiceError::NotTrained(message),
        Some(400) => ServiceError::BadRequest(message),
        _ => ServiceError::Failed(message),
    }
}

impl Servicified for Composed {
    const CLASS: &'static str = CLASS;

    fn construct(args: &Arguments, ctx: &Context<'_>) -> Result<Self, ServiceError> {
        let definition: ComposedService = serde_json::from_str(string_arg(args, "definition")?)
            .map_err(|e| ServiceError::BadRequest(format!("invalid composed service definition: {e}")))?;
        definition
            .constructor
            .validate()
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let mut inputs = args.clone();
        inputs.remove("definition");
        let results = orchestrate_steps(ctx.client, &definition.constructor, &inputs).map_err(service_error)?;
        let mut fields = BTreeMap::new();
        for (field, &step) in &definition.fields {
            match results.get(step) {
                Some(Value::Handle(h)) => {
                    fields.insert(field.clone(), h.clone());
                }
                other => {
                    return Err(ServiceError::Failed(format!(
                        "constructor step {step} for field `{field}` returned {}",
                        other.map_or("nothing", Value::kind)
                    )))
                }
            }
        }
        Ok(Composed { definition, fields })
    }

    fn call(&mut self, method: &str, args: &Arguments, ctx: &Context<'_>) -> Result<Value, ServiceError> {
        let Some(composition) = self.definition.operations.get(method) else {
            return Err(ServiceError::UnknownMethod(method.into()));
        };
        let mut env = args.clone();
        for (field, handle) in &self.fields {
            env.insert(field.clone(), Value::Handle(handle.clone()));
        }
        execute_choreography(ctx.client, composition, &env).map_err(service_error)
    }
}

/// Deploys `service` at the GSM `gsm_url` (which must enable the composed class)
/// and returns the instance handle.
pub fn deploy(client: &Client, gsm_url: &str, service: &ComposedService, inputs: Arguments) -> Result<String, ClientError> {
    let mut args = inputs;
    args.insert(
        "definition".into(),
        Value::String(serde_json::to_string(service).expect("composed services serialize")),
    );
    client.create(&format!("{}/{CLASS}", gsm_url.trim_end_matches('/')), args)
}
