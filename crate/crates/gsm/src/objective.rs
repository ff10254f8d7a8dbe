//! Turning a black-box objective routine into a plan evaluator: plan → composition
//! → composed service → deployment → score.

use std::sync::{mpsc, Arc};
use std::time::Duration;

use svcplan_core::composition::{inject_into_template, plan_to_composition, ComposedService, ServiceDescriptor, ServiceTemplate};
use svcplan_core::htn::{Action, HtnProblem};
use svcplan_core::search::{EvalFailure, PlanEvaluator};
use tracing::debug;

use crate::client::Client;
use crate::composed::deploy;
use crate::value::Arguments;

/// A freshly deployed composed service.
pub struct Deployment<'a> {
    pub service: &'a ComposedService,
    /// Handle of the composed instance.
    pub handle: String,
    pub client: &'a Client,
}

/// Benchmarks a deployed candidate. Higher or lower is better depending on the
/// search direction.
pub trait ObjectiveRoutine: Send + Sync {
    fn run(&self, deployment: &Deployment<'_>) -> Result<f64, String>;
}

impl<F> ObjectiveRoutine for F
where
    F: Fn(&Deployment<'_>) -> Result<f64, String> + Send + Sync,
{
    fn run(&self, deployment: &Deployment<'_>) -> Result<f64, String> {
        self(deployment)
    }
}

/// Scores a candidate by the number of constructor steps.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepCount;

impl ObjectiveRoutine for StepCount {
    fn run(&self, deployment: &Deployment<'_>) -> Result<f64, String> {
        Ok(deployment.service.constructor.len() as f64)
    }
}

struct Shared {
    problem: HtnProblem,
    services: Vec<ServiceDescriptor>,
    template: ServiceTemplate,
    host: String,
    inputs: Arguments,
    routine: Arc<dyn ObjectiveRoutine>,
    client: Client,
}

impl Shared {
    fn score(&self, plan: &[Action]) -> Result<f64, String> {
        let composition = plan_to_composition(plan, &self.problem, &self.services).map_err(|e| e.to_string())?;
        let service = inject_into_template(&self.template, composition).map_err(|e| e.to_string())?;
        let handle = deploy(&self.client, &self.host, &service, self.inputs.clone()).map_err(|e| format!("deployment: {e}"))?;
        debug!(%handle, steps = service.constructor.len(), "deployed candidate");
        let score = self.routine.run(&Deployment {
            service: &service,
            handle,
            client: &self.client,
        })?;
        if score.is_finite() {
            Ok(score)
        } else {
            Err(format!("objective returned {score}"))
        }
    }
}

/// Plan evaluator deploying every candidate as fresh service instances at `host`,
/// a GSM with the composed class enabled.
#[derive(Clone)]
pub struct ObjectiveWrapper {
    shared: Arc<Shared>,
}

impl ObjectiveWrapper {
    pub fn new(
        problem: HtnProblem,
        services: Vec<ServiceDescriptor>,
        template: ServiceTemplate,
        host: impl Into<String>,
        routine: Arc<dyn ObjectiveRoutine>,
    ) -> Self {
        Self {
            shared: Arc::new(Shared {
                problem,
                services,
                template,
                host: host.into(),
                inputs: Arguments::new(),
                routine,
                client: Client::new(),
            }),
        }
    }

    /// Query inputs passed to every constructor.
    pub fn with_inputs(self, inputs: Arguments) -> Self {
        let s = &self.shared;
        Self {
            shared: Arc::new(Shared {
                problem: s.problem.clone(),
                services: s.services.clone(),
                template: s.template.clone(),
                host: s.host.clone(),
                inputs,
                routine: s.routine.clone(),
                client: Client::new(),
            }),
        }
    }

    /// Runs one evaluation without a time limit.
    pub fn score(&self, plan: &[Action]) -> Result<f64, String> {
        self.shared.score(plan)
    }
}

impl PlanEvaluator for ObjectiveWrapper {
    /// An evaluation exceeding `budget` is abandoned: its worker keeps running
    /// detached and its result is dropped.
    fn evaluate(&self, plan: &[Action], budget: Duration) -> Result<f64, EvalFailure> {
        let (tx, rx) = mpsc::channel();
        let shared = self.shared.clone();
        let plan = plan.to_vec();
        std::thread::spawn(move || {
            let _ = tx.send(shared.score(&plan));
        });
        match rx.recv_timeout(budget) {
            Ok(Ok(score)) => Ok(score),
            Ok(Err(message)) => Err(EvalFailure::Failed(message)),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(EvalFailure::Timeout),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(EvalFailure::Failed("evaluation worker panicked".into())),
        }
    }
}
