//! The shipped pipeline domain and its portfolio filters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use svcplan_core::domain_file::{parse_composition, CompositionDomain, DomainFileError};
use svcplan_core::htn::HtnProblem;

pub const PIPELINE_DOMAIN: &str = include_str!("../domains/pipeline.toml");

/// Endpoint keys of the shipped domain, in `--endpoint` order.
pub const ENDPOINT_KEYS: [&str; 2] = ["a", "b"];

/// Name of the theory set the algorithm-choice macros test membership in.
pub const PORTFOLIO_SET: &str = "portfolio";

/// Services tagged with this are part of every portfolio.
pub const SHARED_TAG: &str = "shared";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Portfolio {
    #[default]
    All,
    A,
    B,
}

impl Portfolio {
    fn admits(self, tag: &str) -> bool {
        match self {
            Portfolio::All => true,
            Portfolio::A => tag == "a" || tag == SHARED_TAG,
            Portfolio::B => tag == "b" || tag == SHARED_TAG,
        }
    }
}

impl FromStr for Portfolio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Portfolio::All),
            "a" => Ok(Portfolio::A),
            "b" => Ok(Portfolio::B),
            other => Err(format!("unknown portfolio `{other}`, expected all, a or b")),
        }
    }
}

impl fmt::Display for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Portfolio::All => "all",
            Portfolio::A => "a",
            Portfolio::B => "b",
        })
    }
}

pub struct PipelineDomain {
    pub domain: CompositionDomain,
    pub problem: HtnProblem,
    /// Services admitted to the portfolio set, sorted.
    pub enabled: Vec<String>,
}

/// Loads a pipeline domain. The i-th endpoint replaces endpoint key
/// `ENDPOINT_KEYS[i]`; services on a key without an endpoint, and services the
/// portfolio filter rejects, are left out of the portfolio set.
pub fn pipeline_domain(text: &str, endpoints: &[String], portfolio: Portfolio) -> Result<PipelineDomain, DomainFileError> {
    let overrides: BTreeMap<String, String> = ENDPOINT_KEYS
        .iter()
        .zip(endpoints)
        .map(|(k, url)| (k.to_string(), url.clone()))
        .collect();
    let mut domain = parse_composition(text, &overrides)?;
    let configured = |service: &str| {
        domain
            .service_endpoints
            .get(service)
            .is_none_or(|key| overrides.contains_key(key))
    };
    let enabled: Vec<String> = domain
        .portfolio
        .iter()
        .filter(|(service, tag)| portfolio.admits(tag) && configured(service))
        .map(|(service, _)| service.clone())
        .collect();
    domain.problem.theory.define_set(PORTFOLIO_SET, enabled.iter().cloned());
    let problem = domain.problem.translate().map_err(DomainFileError::Composition)?;
    Ok(PipelineDomain { domain, problem, enabled })
}
