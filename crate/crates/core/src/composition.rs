//! Service composition problems and their translation to HTN planning.
//!
//! Services are classes; instance-bound operations take the instance handle as an
//! extra first input named `handle`, which must be the output of the service's
//! `new` operation. After translation every operation is an ordinary operator
//! named `<service>.<operation>` and every macro a method.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::htn::{Action, ConditionalEffect, DomainError, HtnProblem, Method, Operator, Task, TaskNetwork};
use crate::logic::{Formula, Literal, State, Term, Theory};

/// Name of the distinguished constructor operation.
pub const CONSTRUCTOR: &str = "new";
/// Name of the handle input of instance-bound operations.
pub const HANDLE: &str = "handle";
/// Predicate linking a handle constant to its service, added by translation.
pub const INSTANCE_OF: &str = "instance-of";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompositionError {
    #[error("unknown reference `{0}`")]
    Unresolved(String),
    #[error("service {service}: {reason}")]
    InvalidService { service: String, reason: String },
    #[error("macro {0} has an empty body")]
    EmptyMacro(String),
    #[error("macro {name} reads ?{var} before any step produces it")]
    UninitializedRead { name: String, var: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("step {step}: constant `{constant}` is neither a query input nor an earlier output")]
    Unmappable { step: usize, constant: String },
    #[error("step {step}: handle `{handle}` was not created by a constructor of {service}")]
    HandleDiscipline {
        step: usize,
        handle: String,
        service: String,
    },
    #[error("step {step} references step {source_step}, which does not precede it")]
    ForwardReference { step: usize, source_step: usize },
    #[error("template field `{0}` is not covered by the constructor")]
    UncoveredField(String),
    #[error("template operation {operation} uses undeclared field `{field}`")]
    UnknownField { operation: String, field: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceOperation {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub precondition: Formula,
    pub add_effects: Vec<ConditionalEffect>,
    pub del_effects: Vec<ConditionalEffect>,
    pub is_static: bool,
}

impl ServiceOperation {
    pub fn new(name: impl Into<String>, inputs: &[&str], outputs: &[&str], is_static: bool) -> Self {
        Self {
            name: name.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            precondition: Formula::truth(),
            add_effects: Vec::new(),
            del_effects: Vec::new(),
            is_static,
        }
    }

    pub fn is_constructor(&self) -> bool {
        self.name == CONSTRUCTOR
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceDescriptor {
    pub name: String,
    /// Base URL of the hosting service manager.
    pub endpoint: String,
    pub operations: Vec<ServiceOperation>,
}

impl ServiceDescriptor {
    pub fn has_constructor(&self) -> bool {
        self.operations.iter().any(ServiceOperation::is_constructor)
    }

    pub fn operation(&self, name: &str) -> Option<&ServiceOperation> {
        self.operations.iter().find(|o| o.name == name)
    }

    fn validate(&self) -> Result<(), CompositionError> {
        let invalid = |reason: String| CompositionError::InvalidService {
            service: self.name.clone(),
            reason,
        };
        for (i, op) in self.operations.iter().enumerate() {
            if self.operations[..i].iter().any(|o| o.name == op.name) {
                return Err(invalid(format!("duplicate operation {}", op.name)));
            }
            if op.outputs.len() > 1 {
                return Err(invalid(format!("operation {} declares more than one output", op.name)));
            }
            if op.is_constructor() && (!op.is_static || op.outputs.len() != 1) {
                return Err(invalid("constructor must be static with exactly one output".into()));
            }
            if !op.is_static && op.inputs.first().map(String::as_str) != Some(HANDLE) {
                return Err(invalid(format!("instance operation {} must take `?{HANDLE}` first", op.name)));
            }
        }
        if self.operations.iter().any(|o| !o.is_static) && !self.has_constructor() {
            return Err(invalid("instance operations without a constructor".into()));
        }
        Ok(())
    }
}

/// Sequential process template refining `task`; alternatives are separate macros
/// for the same task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Macro {
    pub name: String,
    pub task: Task,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub precondition: Formula,
    /// Calls to `<service>.<operation>` or to tasks refined by macros.
    pub body: Vec<Task>,
}

impl Macro {
    /// Inputs are the precondition's variables outside the task signature; outputs
    /// every other variable introduced by the body.
    pub fn inferred(name: impl Into<String>, task: Task, precondition: Formula, body: Vec<Task>) -> Self {
        let sig: Vec<String> = task
            .args
            .iter()
            .filter_map(|t| match t {
                Term::Var(v) => Some(v.clone()),
                Term::Const(_) => None,
            })
            .collect();
        let inputs: Vec<String> = precondition.free_vars().into_iter().filter(|v| !sig.contains(v)).collect();
        let mut outputs: Vec<String> = Vec::new();
        for t in &body {
            for a in &t.args {
                if let Term::Var(v) = a {
                    if !sig.contains(v) && !inputs.contains(v) && !outputs.contains(v) {
                        outputs.push(v.clone());
                    }
                }
            }
        }
        Self {
            name: name.into(),
            task,
            inputs,
            outputs,
            precondition,
            body,
        }
    }
}

/// Identifier of an invocable benchmark routine plus its configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRef {
    pub routine: String,
    #[serde(default)]
    pub config: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceQuery {
    pub network: TaskNetwork,
    pub initial_facts: State,
    pub objective: ObjectiveRef,
}

/// Where a step input comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Query(String),
    Step(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Query(q) => write!(f, "query:{q}"),
            Source::Step(i) => write!(f, "step:{i}"),
        }
    }
}

impl std::str::FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("query", name)) if !name.is_empty() => Ok(Source::Query(name.to_string())),
            Some(("step", i)) => i.parse().map(Source::Step).map_err(|_| format!("bad step index in `{s}`")),
            _ => Err(format!("expected `query:<name>` or `step:<index>`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Static operation or constructor: `<endpoint>/<service>/<operation>`.
    Static { endpoint: String, service: String },
    /// Operation of the instance whose handle URL comes from `handle`.
    Instance { service: String, handle: Source },
}

impl Target {
    pub fn service(&self) -> &str {
        match self {
            Target::Static { service, .. } | Target::Instance { service, .. } => service,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub operation: String,
    pub target: Target,
    pub inputs: BTreeMap<String, Source>,
    /// Declared name of the step's result, if it produces one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Step {
    pub fn is_constructor(&self) -> bool {
        self.operation == CONSTRUCTOR && matches!(self.target, Target::Static { .. })
    }

    fn sources(&self) -> impl Iterator<Item = &Source> {
        let handle = match &self.target {
            Target::Instance { handle, .. } => Some(handle),
            Target::Static { .. } => None,
        };
        handle.into_iter().chain(self.inputs.values())
    }
}

/// A sequence of service invocations whose inputs bind to query inputs or to
/// results of earlier steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    pub steps: Vec<Step>,
}

impl Composition {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every step source refers to a query input or a strictly earlier step.
    pub fn validate(&self) -> Result<(), CompositionError> {
        for (i, step) in self.steps.iter().enumerate() {
            for s in step.sources() {
                if let Source::Step(j) = s {
                    if *j >= i {
                        return Err(CompositionError::ForwardReference { step: i, source_step: *j });
                    }
                }
            }
        }
        Ok(())
    }

    /// Query inputs the composition reads.
    pub fn query_inputs(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for step in &self.steps {
            for s in step.sources() {
                if let Source::Query(q) = s {
                    if !out.contains(q) {
                        out.push(q.clone());
                    }
                }
            }
        }
        out
    }

    /// Stable text form: steps in order, fields in declaration order, inputs sorted.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("composition serializes")
    }
}

/// The service composition problem: services, macros and a query.
#[derive(Debug, Clone)]
pub struct CompositionProblem {
    pub services: Vec<ServiceDescriptor>,
    pub macros: Vec<Macro>,
    pub query: ServiceQuery,
    pub theory: Theory,
}

impl CompositionProblem {
    pub fn translate(&self) -> Result<HtnProblem, CompositionError> {
        translate_to_htn(&self.services, &self.macros, &self.query, self.theory.clone())
    }

    pub fn service(&self, name: &str) -> Option<&ServiceDescriptor> {
        self.services.iter().find(|s| s.name == name)
    }
}

pub fn operator_name(service: &str, operation: &str) -> String {
    format!("{service}.{operation}")
}

fn resolve<'a>(services: &'a [ServiceDescriptor], operator: &str) -> Option<(&'a ServiceDescriptor, &'a ServiceOperation)> {
    let (svc, op) = operator.split_once('.')?;
    let service = services.iter().find(|s| s.name == svc)?;
    Some((service, service.operation(op)?))
}

/// One operator per service operation and one method per macro.
pub fn translate_to_htn(
    services: &[ServiceDescriptor],
    macros: &[Macro],
    query: &ServiceQuery,
    theory: Theory,
) -> Result<HtnProblem, CompositionError> {
    let mut operators = Vec::new();
    for s in services {
        s.validate()?;
        for op in &s.operations {
            let mut precondition = op.precondition.clone();
            let mut add_effects = op.add_effects.clone();
            if !op.is_static {
                precondition = Formula::And(vec![
                    Formula::Literal(Literal::new(
                        INSTANCE_OF,
                        vec![Term::var(HANDLE), Term::constant(&s.name)],
                        true,
                    )),
                    precondition,
                ]);
            }
            if op.is_constructor() {
                add_effects.push(ConditionalEffect::unconditional(vec![Literal::new(
                    INSTANCE_OF,
                    vec![Term::var(&op.outputs[0]), Term::constant(&s.name)],
                    true,
                )]));
            }
            operators.push(Operator {
                name: operator_name(&s.name, &op.name),
                inputs: op.inputs.clone(),
                outputs: op.outputs.clone(),
                precondition,
                add_effects,
                del_effects: op.del_effects.clone(),
            });
        }
    }
    let refines = |name: &str| macros.iter().any(|m| m.task.name == name);
    let known = |t: &Task| resolve(services, &t.name).is_some() || refines(&t.name);
    let mut methods = Vec::new();
    for m in macros {
        if m.body.is_empty() {
            return Err(CompositionError::EmptyMacro(m.name.clone()));
        }
        if let Some(t) = m.body.iter().find(|t| !known(t)) {
            return Err(CompositionError::Unresolved(t.name.clone()));
        }
        check_dataflow(services, m)?;
        methods.push(Method {
            name: m.name.clone(),
            task: m.task.clone(),
            inputs: m.inputs.clone(),
            outputs: m.outputs.clone(),
            precondition: m.precondition.clone(),
            network: TaskNetwork::new(m.body.clone()),
        });
    }
    if let Some(t) = query.network.tasks.iter().find(|t| !known(t)) {
        return Err(CompositionError::Unresolved(t.name.clone()));
    }
    Ok(HtnProblem::new(
        operators,
        methods,
        query.initial_facts.clone(),
        query.network.clone(),
        theory,
    )?)
}

/// Operation inputs must be macro inputs, task parameters or outputs of earlier
/// body steps. Arguments of nested task calls count as produced, since the refining
/// macro may bind them to an operation output.
fn check_dataflow(services: &[ServiceDescriptor], m: &Macro) -> Result<(), CompositionError> {
    let mut defined: Vec<&str> = m.inputs.iter().map(String::as_str).collect();
    defined.extend(m.task.args.iter().filter_map(|t| match t {
        Term::Var(v) => Some(v.as_str()),
        Term::Const(_) => None,
    }));
    for call in &m.body {
        let reads = match resolve(services, &call.name) {
            Some((_, op)) => op.inputs.len(),
            None => 0,
        };
        for (i, arg) in call.args.iter().enumerate() {
            if let Term::Var(v) = arg {
                if i < reads && !defined.contains(&v.as_str()) {
                    return Err(CompositionError::UninitializedRead {
                        name: m.name.clone(),
                        var: v.clone(),
                    });
                }
                defined.push(v);
            }
        }
    }
    Ok(())
}

/// Maps planning actions back to service invocations. Output constants become
/// step references; constants of the initial state become query inputs.
pub fn plan_to_composition(
    plan: &[Action],
    problem: &HtnProblem,
    services: &[ServiceDescriptor],
) -> Result<Composition, CompositionError> {
    let mut producers: HashMap<&str, usize> = HashMap::new();
    let query_constants = problem.initial_state().constants();
    let mut steps = Vec::with_capacity(plan.len());
    for (i, action) in plan.iter().enumerate() {
        let (service, op) = resolve(services, &action.operator).ok_or_else(|| CompositionError::Unresolved(action.operator.clone()))?;
        let source_of = |constant: &str| -> Result<Source, CompositionError> {
            if let Some(&j) = producers.get(constant) {
                Ok(Source::Step(j))
            } else if query_constants.contains(constant) {
                Ok(Source::Query(constant.to_string()))
            } else {
                Err(CompositionError::Unmappable {
                    step: i,
                    constant: constant.to_string(),
                })
            }
        };
        let (target, skip) = if op.is_static {
            (
                Target::Static {
                    endpoint: service.endpoint.clone(),
                    service: service.name.clone(),
                },
                0,
            )
        } else {
            let handle = &action.inputs[0];
            let discipline = || CompositionError::HandleDiscipline {
                step: i,
                handle: handle.clone(),
                service: service.name.clone(),
            };
            let j = *producers.get(handle.as_str()).ok_or_else(discipline)?;
            let producer: &Step = &steps[j];
            if !producer.is_constructor() || producer.target.service() != service.name {
                return Err(discipline());
            }
            (
                Target::Instance {
                    service: service.name.clone(),
                    handle: Source::Step(j),
                },
                1,
            )
        };
        let mut inputs = BTreeMap::new();
        for (name, constant) in op.inputs.iter().zip(&action.inputs).skip(skip) {
            inputs.insert(name.clone(), source_of(constant)?);
        }
        if let Some(out) = action.outputs.first() {
            producers.insert(out.as_str(), i);
        }
        steps.push(Step {
            operation: op.name.clone(),
            target,
            inputs,
            output: op.outputs.first().cloned(),
        });
    }
    let composition = Composition::new(steps);
    composition.validate()?;
    Ok(composition)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateTarget {
    /// Operation on the instance held by a template field.
    Field(String),
    Static { endpoint: String, service: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateStep {
    pub operation: String,
    pub target: TemplateTarget,
    pub inputs: BTreeMap<String, Source>,
}

/// A composed service whose operations are fixed but whose constructor is left open.
/// Field handles are passed to the fixed operations as query inputs named after
/// the field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceTemplate {
    pub name: String,
    pub fields: Vec<String>,
    pub operations: BTreeMap<String, Vec<TemplateStep>>,
}

/// A template with its constructor filled in; ready to deploy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposedService {
    pub name: String,
    pub constructor: Composition,
    /// Field → constructor step producing its handle.
    pub fields: BTreeMap<String, usize>,
    pub operations: BTreeMap<String, Composition>,
}

pub fn inject_into_template(template: &ServiceTemplate, constructor: Composition) -> Result<ComposedService, CompositionError> {
    constructor.validate()?;
    let mut fields = BTreeMap::new();
    for f in &template.fields {
        let step = constructor
            .steps
            .iter()
            .rposition(|s| s.is_constructor() && s.output.as_deref() == Some(f.as_str()))
            .ok_or_else(|| CompositionError::UncoveredField(f.clone()))?;
        fields.insert(f.clone(), step);
    }
    let mut operations = BTreeMap::new();
    for (name, steps) in &template.operations {
        let mut concrete = Vec::with_capacity(steps.len());
        for s in steps {
            let target = match &s.target {
                TemplateTarget::Field(f) => {
                    let &j = fields.get(f).ok_or_else(|| CompositionError::UnknownField {
                        operation: name.clone(),
                        field: f.clone(),
                    })?;
                    Target::Instance {
                        service: constructor.steps[j].target.service().to_string(),
                        handle: Source::Query(f.clone()),
                    }
                }
                TemplateTarget::Static { endpoint, service } => Target::Static {
                    endpoint: endpoint.clone(),
                    service: service.clone(),
                },
            };
            concrete.push(Step {
                operation: s.operation.clone(),
                target,
                inputs: s.inputs.clone(),
                output: None,
            });
        }
        let c = Composition::new(concrete);
        c.validate()?;
        operations.insert(name.clone(), c);
    }
    Ok(ComposedService {
        name: template.name.clone(),
        constructor,
        fields,
        operations,
    })
}
