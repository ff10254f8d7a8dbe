//! TOML domain-definition files.
//!
//! An HTN domain file has the sections `theory`, `operators`, `methods`,
//! `initialState` and `initialNetwork`. A composition file shares `theory` and adds
//! `endpoints`, `services`, `macros`, `query` and an optional `template`.
//! Formulas, literals and tasks are written in prefix notation; variables carry `?`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::composition::{
    CompositionError, CompositionProblem, Macro, ObjectiveRef, ServiceDescriptor, ServiceOperation, ServiceQuery,
    ServiceTemplate, Source, TemplateStep, TemplateTarget,
};
use crate::error::ParseError;
use crate::htn::{ConditionalEffect, DomainError, HtnProblem, Method, Operator, Task, TaskNetwork};
use crate::logic::{Formula, Literal, State, StateError, Theory, TheoryError};

#[derive(Debug, Error)]
pub enum DomainFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("parameter `{0}` must be a variable such as `?x`")]
    Parameter(String),
    #[error("service {service}: endpoint `{endpoint}` is neither a URL nor a key of [endpoints]")]
    Endpoint { service: String, endpoint: String },
    #[error("template step {operation}[{index}]: {reason}")]
    TemplateStep {
        operation: String,
        index: usize,
        reason: String,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TheorySpec {
    #[serde(default)]
    enabled: Vec<String>,
    #[serde(default)]
    sets: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectSpec {
    #[serde(default)]
    condition: Option<String>,
    literals: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct OperatorSpec {
    name: String,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default)]
    precondition: Option<String>,
    #[serde(default)]
    add_effects: Vec<EffectSpec>,
    #[serde(default)]
    del_effects: Vec<EffectSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MethodSpec {
    name: String,
    task: String,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default)]
    precondition: Option<String>,
    #[serde(default)]
    network: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSpec {
    #[serde(default)]
    constants: Vec<String>,
    #[serde(default)]
    literals: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct HtnFile {
    #[serde(default)]
    theory: TheorySpec,
    #[serde(default)]
    operators: Vec<OperatorSpec>,
    #[serde(default)]
    methods: Vec<MethodSpec>,
    #[serde(default)]
    initial_state: StateSpec,
    #[serde(default)]
    initial_network: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct OperationSpec {
    name: String,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default)]
    precondition: Option<String>,
    #[serde(default)]
    add_effects: Vec<EffectSpec>,
    #[serde(default)]
    del_effects: Vec<EffectSpec>,
    #[serde(default, rename = "static")]
    is_static: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServiceSpec {
    name: String,
    endpoint: String,
    #[serde(default)]
    portfolio: Option<String>,
    #[serde(default)]
    operations: Vec<OperationSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MacroSpec {
    name: String,
    task: String,
    #[serde(default)]
    inputs: Option<Vec<String>>,
    #[serde(default)]
    outputs: Option<Vec<String>>,
    #[serde(default)]
    precondition: Option<String>,
    body: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct QuerySpec {
    network: Vec<String>,
    #[serde(default)]
    initial_facts: StateSpec,
    #[serde(default)]
    objective: ObjectiveRef,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateStepSpec {
    operation: String,
    #[serde(default)]
    field: Option<String>,
    #[serde(default)]
    service: Option<String>,
    #[serde(default)]
    endpoint: Option<String>,
    #[serde(default)]
    inputs: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateSpec {
    name: String,
    #[serde(default)]
    fields: Vec<String>,
    #[serde(default)]
    operations: BTreeMap<String, Vec<TemplateStepSpec>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompositionFile {
    #[serde(default)]
    theory: TheorySpec,
    #[serde(default)]
    endpoints: BTreeMap<String, String>,
    #[serde(default)]
    services: Vec<ServiceSpec>,
    #[serde(default)]
    macros: Vec<MacroSpec>,
    query: QuerySpec,
    #[serde(default)]
    template: Option<TemplateSpec>,
}

/// A loaded composition file.
#[derive(Debug, Clone)]
pub struct CompositionDomain {
    pub problem: CompositionProblem,
    pub template: Option<ServiceTemplate>,
    /// Endpoint key → URL after overrides.
    pub endpoints: BTreeMap<String, String>,
    /// Service name → endpoint key it was declared with, when it used a key.
    pub service_endpoints: BTreeMap<String, String>,
    /// Service name → portfolio tag.
    pub portfolio: BTreeMap<String, String>,
}

fn read(path: &Path) -> Result<String, DomainFileError> {
    std::fs::read_to_string(path).map_err(|source| DomainFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_htn_file(path: &Path) -> Result<HtnProblem, DomainFileError> {
    parse_htn(&read(path)?)
}

pub fn parse_htn(text: &str) -> Result<HtnProblem, DomainFileError> {
    let file: HtnFile = toml::from_str(text)?;
    let operators = file
        .operators
        .into_iter()
        .map(|o| {
            Ok(Operator {
                name: o.name,
                inputs: params(&o.inputs)?,
                outputs: params(&o.outputs)?,
                precondition: formula(o.precondition.as_deref())?,
                add_effects: effects(&o.add_effects)?,
                del_effects: effects(&o.del_effects)?,
            })
        })
        .collect::<Result<Vec<_>, DomainFileError>>()?;
    let methods = file
        .methods
        .into_iter()
        .map(|m| {
            Ok(Method {
                name: m.name,
                task: Task::parse(&m.task)?,
                inputs: params(&m.inputs)?,
                outputs: params(&m.outputs)?,
                precondition: formula(m.precondition.as_deref())?,
                network: TaskNetwork::parse(&m.network)?,
            })
        })
        .collect::<Result<Vec<_>, DomainFileError>>()?;
    Ok(HtnProblem::new(
        operators,
        methods,
        state(&file.initial_state)?,
        TaskNetwork::parse(&file.initial_network)?,
        theory(&file.theory)?,
    )?)
}

pub fn load_composition_file(
    path: &Path,
    endpoint_overrides: &BTreeMap<String, String>,
) -> Result<CompositionDomain, DomainFileError> {
    parse_composition(&read(path)?, endpoint_overrides)
}

/// Parses a composition file. Endpoint keys in `endpoint_overrides` replace the
/// file's `[endpoints]` entries.
pub fn parse_composition(
    text: &str,
    endpoint_overrides: &BTreeMap<String, String>,
) -> Result<CompositionDomain, DomainFileError> {
    let file: CompositionFile = toml::from_str(text)?;
    let mut endpoints = file.endpoints;
    endpoints.extend(endpoint_overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
    let resolve = |service: &str, endpoint: &str| -> Result<String, DomainFileError> {
        if let Some(url) = endpoints.get(endpoint) {
            Ok(url.trim_end_matches('/').to_string())
        } else if endpoint.starts_with("http://") || endpoint.starts_with("https://") {
            Ok(endpoint.trim_end_matches('/').to_string())
        } else {
            Err(DomainFileError::Endpoint {
                service: service.to_string(),
                endpoint: endpoint.to_string(),
            })
        }
    };

    let mut services = Vec::new();
    let mut service_endpoints = BTreeMap::new();
    let mut portfolio = BTreeMap::new();
    for s in file.services {
        if endpoints.contains_key(&s.endpoint) {
            service_endpoints.insert(s.name.clone(), s.endpoint.clone());
        }
        if let Some(tag) = &s.portfolio {
            portfolio.insert(s.name.clone(), tag.clone());
        }
        let operations = s
            .operations
            .into_iter()
            .map(|o| {
                Ok(ServiceOperation {
                    name: o.name,
                    inputs: params(&o.inputs)?,
                    outputs: params(&o.outputs)?,
                    precondition: formula(o.precondition.as_deref())?,
                    add_effects: effects(&o.add_effects)?,
                    del_effects: effects(&o.del_effects)?,
                    is_static: o.is_static,
                })
            })
            .collect::<Result<Vec<_>, DomainFileError>>()?;
        services.push(ServiceDescriptor {
            endpoint: resolve(&s.name, &s.endpoint)?,
            name: s.name,
            operations,
        });
    }

    let mut macros = Vec::new();
    for m in file.macros {
        let task = Task::parse(&m.task)?;
        let precondition = formula(m.precondition.as_deref())?;
        let body = m.body.iter().map(|t| Task::parse(t)).collect::<Result<Vec<_>, _>>()?;
        let mut mac = Macro::inferred(m.name, task, precondition, body);
        if let Some(inputs) = &m.inputs {
            mac.inputs = params(inputs)?;
        }
        if let Some(outputs) = &m.outputs {
            mac.outputs = params(outputs)?;
        }
        macros.push(mac);
    }

    let query = ServiceQuery {
        network: TaskNetwork::parse(&file.query.network)?,
        initial_facts: state(&file.query.initial_facts)?,
        objective: file.query.objective,
    };

    let template = match file.template {
        None => None,
        Some(t) => {
            let mut operations = BTreeMap::new();
            for (name, steps) in t.operations {
                let mut out = Vec::new();
                for (index, s) in steps.into_iter().enumerate() {
                    let bad = |reason: String| DomainFileError::TemplateStep {
                        operation: name.clone(),
                        index,
                        reason,
                    };
                    let target = match (s.field, s.service) {
                        (Some(f), None) => TemplateTarget::Field(f),
                        (None, Some(service)) => {
                            let key = s.endpoint.ok_or_else(|| bad("static step needs an endpoint".into()))?;
                            TemplateTarget::Static {
                                endpoint: resolve(&service, &key)?,
                                service,
                            }
                        }
                        _ => return Err(bad("exactly one of `field` and `service` is required".into())),
                    };
                    let inputs = s
                        .inputs
                        .into_iter()
                        .map(|(k, v)| v.parse::<Source>().map(|src| (k, src)))
                        .collect::<Result<BTreeMap<_, _>, _>>()
                        .map_err(bad)?;
                    out.push(TemplateStep {
                        operation: s.operation,
                        target,
                        inputs,
                    });
                }
                operations.insert(name, out);
            }
            Some(ServiceTemplate {
                name: t.name,
                fields: t.fields,
                operations,
            })
        }
    };

    let problem = CompositionProblem {
        services,
        macros,
        query,
        theory: theory(&file.theory)?,
    };
    // surface translation errors at load time
    problem.translate()?;
    Ok(CompositionDomain {
        problem,
        template,
        endpoints,
        service_endpoints,
        portfolio,
    })
}

fn params(names: &[String]) -> Result<Vec<String>, DomainFileError> {
    names
        .iter()
        .map(|n| match n.strip_prefix('?') {
            Some(v) if !v.is_empty() => Ok(v.to_string()),
            _ => Err(DomainFileError::Parameter(n.clone())),
        })
        .collect()
}

fn formula(text: Option<&str>) -> Result<Formula, ParseError> {
    text.map_or(Ok(Formula::truth()), Formula::parse)
}

fn effects(specs: &[EffectSpec]) -> Result<Vec<ConditionalEffect>, ParseError> {
    specs
        .iter()
        .map(|e| {
            Ok(ConditionalEffect {
                condition: formula(e.condition.as_deref())?,
                literals: e.literals.iter().map(|l| Literal::parse(l)).collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

fn state(spec: &StateSpec) -> Result<State, DomainFileError> {
    let literals = spec.literals.iter().map(|l| Literal::parse(l)).collect::<Result<Vec<_>, _>>()?;
    Ok(State::new(literals, spec.constants.iter().cloned())?)
}

fn theory(spec: &TheorySpec) -> Result<Theory, TheoryError> {
    let mut t = Theory::empty();
    for name in &spec.enabled {
        t.enable_builtin(name)?;
    }
    for (name, members) in &spec.sets {
        t.define_set(name.clone(), members.iter().cloned());
    }
    Ok(t)
}
