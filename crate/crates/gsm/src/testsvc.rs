//! Small deterministic services for exercising the runtime.

use serde::{Deserialize, Serialize};

use crate::service::{arg, class, number_arg, Context, Registry, ServiceError, Servicified};
use crate::value::{Arguments, Value};

/// `echo.echo(x) -> x`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Echo;

impl Servicified for Echo {
    const CLASS: &'static str = "echo";
    const CONSTRUCTIBLE: bool = false;

    fn construct(_: &Arguments, _: &Context<'_>) -> Result<Self, ServiceError> {
        Ok(Echo)
    }

    fn call(&mut self, method: &str, _: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        Err(ServiceError::UnknownMethod(method.into()))
    }

    fn call_static(method: &str, args: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        match method {
            "echo" => Ok(arg(args, "x")?.clone()),
            _ => Err(ServiceError::UnknownMethod(method.into())),
        }
    }
}

/// Static arithmetic: `add`, `sub`, `mul` over `a`, `b` and `neg` over `x`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Arith;

impl Servicified for Arith {
    const CLASS: &'static str = "arith";
    const CONSTRUCTIBLE: bool = false;

    fn construct(_: &Arguments, _: &Context<'_>) -> Result<Self, ServiceError> {
        Ok(Arith)
    }

    fn call(&mut self, method: &str, _: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        Err(ServiceError::UnknownMethod(method.into()))
    }

    fn call_static(method: &str, args: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        let binary = |f: fn(f64, f64) -> f64| -> Result<Value, ServiceError> {
            Ok(Value::Number(f(number_arg(args, "a")?, number_arg(args, "b")?)))
        };
        match method {
            "add" => binary(|a, b| a + b),
            "sub" => binary(|a, b| a - b),
            "mul" => binary(|a, b| a * b),
            "neg" => Ok(Value::Number(-number_arg(args, "x")?)),
            _ => Err(ServiceError::UnknownMethod(method.into())),
        }
    }
}

/// Stateful running sum. `new(start?)`, `add(x) -> total`, `total()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub total: f64,
}

impl Servicified for Accumulator {
    const CLASS: &'static str = "accumulator";

    fn construct(args: &Arguments, _: &Context<'_>) -> Result<Self, ServiceError> {
        let total = match args.get("start") {
            Some(_) => number_arg(args, "start")?,
            None => 0.0,
        };
        Ok(Accumulator { total })
    }

    fn call(&mut self, method: &str, args: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        match method {
            "add" => {
                self.total += number_arg(args, "x")?;
                Ok(Value::Number(self.total))
            }
            "total" => Ok(Value::Number(self.total)),
            _ => Err(ServiceError::UnknownMethod(method.into())),
        }
    }
}

/// `fail.fail()` always answers 500.
#[derive(Debug, Serialize, Deserialize)]
pub struct Fail;

impl Servicified for Fail {
    const CLASS: &'static str = "fail";
    const CONSTRUCTIBLE: bool = false;

    fn construct(_: &Arguments, _: &Context<'_>) -> Result<Self, ServiceError> {
        Ok(Fail)
    }

    fn call(&mut self, method: &str, _: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        Err(ServiceError::UnknownMethod(method.into()))
    }

    fn call_static(method: &str, _: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        match method {
            "fail" => Err(ServiceError::Failed("deliberate failure".into())),
            _ => Err(ServiceError::UnknownMethod(method.into())),
        }
    }
}

pub fn registry() -> Registry {
    Registry::new()
        .with(class::<Echo>())
        .with(class::<Arith>())
        .with(class::<Accumulator>())
        .with(class::<Fail>())
}
