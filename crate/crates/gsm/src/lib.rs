//! Generic Service Manager: an HTTP runtime exposing registered classes as
//! services with disk-persisted instances, plus the client and the choreography
//! executor for sequential compositions.

pub mod choreography;
pub mod client;
pub mod composed;
pub mod conformance;
pub mod objective;
pub mod server;
pub mod service;
pub mod store;
pub mod testsvc;
pub mod value;
pub mod wire;

pub use choreography::{execute_choreography, execute_orchestrated, ChoreographyError};
pub use client::{Client, ClientError};
pub use objective::{Deployment, ObjectiveRoutine, ObjectiveWrapper, StepCount};
pub use server::{start, Gsm, GsmConfig, RunningGsm};
pub use service::{Registry, ServiceError, Servicified};
pub use value::{Arguments, Value};
