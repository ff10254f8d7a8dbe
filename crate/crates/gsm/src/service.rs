//! The class registry: explicit tables of servicified classes, their constructors,
//! static and instance methods, and their state encoding.

use std::collections::{BTreeMap, BTreeSet};
use std::marker::PhantomData;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::client::Client;
use crate::value::{Arguments, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServiceError {
    #[error("no such method `{0}`")]
    UnknownMethod(String),
    #[error("no such instance {0}")]
    UnknownInstance(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("not trained: {0}")]
    NotTrained(String),
    #[error("{0}")]
    Failed(String),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::UnknownMethod(_) | ServiceError::UnknownInstance(_) => 404,
            ServiceError::BadRequest(_) => 400,
            ServiceError::NotTrained(_) => 409,
            ServiceError::Failed(_) => 500,
        }
    }
}

/// What a running method may use besides its arguments.
pub struct Context<'a> {
    pub client: &'a Client,
    /// Base URL under which this GSM's handles are issued.
    pub public_url: &'a str,
}

pub trait ServiceInstance: Send {
    fn invoke(&mut self, method: &str, args: &Arguments, ctx: &Context<'_>) -> Result<Value, ServiceError>;
    /// Stable byte encoding of the instance state.
    fn encode(&self) -> Result<Vec<u8>, ServiceError>;
}

pub trait ServiceClass: Send + Sync {
    fn name(&self) -> &str;
    fn constructible(&self) -> bool;
    fn construct(&self, args: &Arguments, ctx: &Context<'_>) -> Result<Box<dyn ServiceInstance>, ServiceError>;
    fn invoke_static(&self, method: &str, args: &Arguments, ctx: &Context<'_>) -> Result<Value, ServiceError>;
    fn decode(&self, bytes: &[u8]) -> Result<Box<dyn ServiceInstance>, ServiceError>;
}

/// A class whose state is its serde JSON form.
pub trait Servicified: Serialize + DeserializeOwned + Send + 'static {
    const CLASS: &'static str;
    const CONSTRUCTIBLE: bool = true;

    fn construct(args: &Arguments, ctx: &Context<'_>) -> Result<Self, ServiceError>;

    fn call(&mut self, method: &str, args: &Arguments, ctx: &Context<'_>) -> Result<Value, ServiceError>;

    fn call_static(method: &str, _args: &Arguments, _ctx: &Context<'_>) -> Result<Value, ServiceError> {
        Err(ServiceError::UnknownMethod(method.to_string()))
    }
}

struct Instance<T>(T);

impl<T: Servicified> ServiceInstance for Instance<T> {
    fn invoke(&mut self, method: &str, args: &Arguments, ctx: &Context<'_>) -> Result<Value, ServiceError> {
        self.0.call(method, args, ctx)
    }

    fn encode(&self) -> Result<Vec<u8>, ServiceError> {
        serde_json::to_vec(&self.0).map_err(|e| ServiceError::Failed(format!("cannot encode {}: {e}", T::CLASS)))
    }
}

struct ClassOf<T>(PhantomData<fn() -> T>);

impl<T: Servicified> ServiceClass for ClassOf<T> {
    fn name(&self) -> &str {
        T::CLASS
    }

    fn constructible(&self) -> bool {
        T::CONSTRUCTIBLE
    }

    fn construct(&self, args: &Arguments, ctx: &Context<'_>) -> Result<Box<dyn ServiceInstance>, ServiceError> {
        if !T::CONSTRUCTIBLE {
            return Err(ServiceError::UnknownMethod("new".into()));
        }
        Ok(Box::new(Instance(T::construct(args, ctx)?)))
    }

    fn invoke_static(&self, method: &str, args: &Arguments, ctx: &Context<'_>) -> Result<Value, ServiceError> {
        T::call_static(method, args, ctx)
    }

    fn decode(&self, bytes: &[u8]) -> Result<Box<dyn ServiceInstance>, ServiceError> {
        let state: T = serde_json::from_slice(bytes).map_err(|e| ServiceError::Failed(format!("corrupt {} state: {e}", T::CLASS)))?;
        Ok(Box::new(Instance(state)))
    }
}

pub fn class<T: Servicified>() -> Arc<dyn ServiceClass> {
    Arc::new(ClassOf::<T>(PhantomData))
}

pub enum Lookup<'a> {
    Enabled(&'a Arc<dyn ServiceClass>),
    Disabled,
    Unknown,
}

/// Known classes, of which a subset is enabled.
#[derive(Clone, Default)]
pub struct Registry {
    classes: BTreeMap<String, Arc<dyn ServiceClass>>,
    disabled: BTreeSet<String>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, class: Arc<dyn ServiceClass>) -> Self {
        self.register(class);
        self
    }

    pub fn register(&mut self, class: Arc<dyn ServiceClass>) {
        self.classes.insert(class.name().to_string(), class);
    }

    pub fn disable(&mut self, name: &str) {
        self.disabled.insert(name.to_string());
    }

    pub fn lookup(&self, name: &str) -> Lookup<'_> {
        match self.classes.get(name) {
            None => Lookup::Unknown,
            Some(_) if self.disabled.contains(name) => Lookup::Disabled,
            Some(c) => Lookup::Enabled(c),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str).filter(|n| !self.disabled.contains(*n))
    }
}

pub fn arg<'a>(args: &'a Arguments, name: &str) -> Result<&'a Value, ServiceError> {
    args.get(name)
        .ok_or_else(|| ServiceError::BadRequest(format!("missing argument `{name}`")))
}

pub fn matrix_arg<'a>(args: &'a Arguments, name: &str) -> Result<&'a [Vec<f64>], ServiceError> {
    let v = arg(args, name)?;
    v.validate().map_err(ServiceError::BadRequest)?;
    v.as_matrix()
        .ok_or_else(|| ServiceError::BadRequest(format!("`{name}` must be a matrix, got {}", v.kind())))
}

pub fn labels_arg<'a>(args: &'a Arguments, name: &str) -> Result<&'a [String], ServiceError> {
    let v = arg(args, name)?;
    v.as_labels()
        .ok_or_else(|| ServiceError::BadRequest(format!("`{name}` must be labels, got {}", v.kind())))
}

pub fn number_arg(args: &Arguments, name: &str) -> Result<f64, ServiceError> {
    let v = arg(args, name)?;
    v.as_number()
        .ok_or_else(|| ServiceError::BadRequest(format!("`{name}` must be a number, got {}", v.kind())))
}

pub fn string_arg<'a>(args: &'a Arguments, name: &str) -> Result<&'a str, ServiceError> {
    let v = arg(args, name)?;
    v.as_str()
        .ok_or_else(|| ServiceError::BadRequest(format!("`{name}` must be a string, got {}", v.kind())))
}
