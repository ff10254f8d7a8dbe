//! End-to-end pipeline search: load data, split, plan over the pipeline domain and
//! benchmark candidates as composed services.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use svcplan_core::composition::{plan_to_composition, Composition};
use svcplan_core::search::{best_first_search, Direction, EvaluationRecord, RandomCompletion, SearchConfig, SearchResult};
use svcplan_gsm::{Client, ClientError, ObjectiveWrapper};
use thiserror::Error;
use tracing::info;

use crate::dataset::{stratified_split, Dataset, Split, SplitSpec};
use crate::domain::{pipeline_domain, Portfolio, PIPELINE_DOMAIN};
use crate::objective::{ObjectiveReport, ZeroOneLoss};

pub const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:8080";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub timeout: Duration,
    pub eval_timeout: Duration,
    pub seed: u64,
    pub k: usize,
    /// Primary GSM first; it also hosts the composed candidates.
    pub endpoints: Vec<String>,
    pub portfolio: Portfolio,
    pub parallelism: usize,
    /// Domain file replacing the shipped one.
    pub domain: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            timeout: Duration::from_secs(60),
            eval_timeout: Duration::from_secs(30),
            seed: 0,
            k: 3,
            endpoints: vec![DEFAULT_ENDPOINT.to_string()],
            portfolio: Portfolio::All,
            parallelism: 1,
            domain: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("search: {0}")]
    Search(#[from] svcplan_core::search::SearchError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BestPipeline {
    pub plan: Vec<String>,
    pub composition: Composition,
    pub report: ObjectiveReport,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub search: SearchResult,
    pub best: Option<BestPipeline>,
    pub split: Split,
    pub elapsed: Duration,
}

/// Probes every endpoint with `POST /`; any HTTP answer counts as healthy.
pub fn health_check(client: &Client, endpoints: &[String]) -> Result<(), RunError> {
    for url in endpoints {
        match client.post_raw(&format!("{}/", url.trim_end_matches('/')), "") {
            Ok(_) => {}
            Err(ClientError::Transport { message, .. }) => {
                return Err(RunError::Config(format!("endpoint {url} is not reachable: {message}")))
            }
            Err(e) => return Err(RunError::Config(format!("endpoint {url}: {e}"))),
        }
    }
    Ok(())
}

pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    if config.endpoints.is_empty() || config.endpoints.len() > 2 {
        return Err(RunError::Config("give one or two endpoints".into()));
    }
    if config.k == 0 {
        return Err(RunError::Config("k must be positive".into()));
    }
    let dataset = Dataset::load(&config.dataset).map_err(|e| RunError::Config(format!("{}: {e}", config.dataset.display())))?;
    let split = stratified_split(&dataset, &SplitSpec::new(config.seed)).map_err(|e| RunError::Config(e.to_string()))?;
    let (train, validation) = split.apply(&dataset);
    let text = match &config.domain {
        Some(p) => std::fs::read_to_string(p).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?,
        None => PIPELINE_DOMAIN.to_string(),
    };
    let domain = pipeline_domain(&text, &config.endpoints, config.portfolio).map_err(|e| RunError::Config(e.to_string()))?;
    let template = domain
        .domain
        .template
        .clone()
        .ok_or_else(|| RunError::Config("the domain has no template".into()))?;
    health_check(&Client::with_timeout(Duration::from_secs(5)), &config.endpoints)?;
    info!(
        dataset = %dataset.name,
        train = train.len(),
        validation = validation.len(),
        portfolio = ?domain.enabled,
        "starting search"
    );

    let routine = ZeroOneLoss::new(&train, &validation);
    let wrapper = ObjectiveWrapper::new(
        domain.problem.clone(),
        domain.domain.problem.services.clone(),
        template,
        config.endpoints[0].trim_end_matches('/'),
        routine.clone(),
    );
    let search_config = SearchConfig {
        direction: Direction::Maximize,
        overall_timeout: config.timeout.saturating_sub(started.elapsed()),
        per_evaluation_timeout: config.eval_timeout,
        k: config.k,
        seed: config.seed,
        parallelism: config.parallelism.max(1),
    };
    let evaluator = RandomCompletion {
        plan_evaluator: wrapper,
        k: config.k,
    };
    let search = best_first_search(&domain.problem, &evaluator, &search_config)?;
    let best = match &search.best_plan {
        Some(plan) => {
            let composition = plan_to_composition(plan, &domain.problem, &domain.domain.problem.services)
                .map_err(|e| RunError::Config(e.to_string()))?;
            routine.report(&composition).map(|report| BestPipeline {
                plan: plan.iter().map(|a| a.to_string()).collect(),
                composition,
                report,
            })
        }
        None => None,
    };
    Ok(RunOutcome {
        search,
        best,
        split,
        elapsed: started.elapsed(),
    })
}

/// One line of the JSONL trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "camelCase")]
pub enum TraceEvent {
    Evaluation(EvaluationRecord),
    #[serde(rename_all = "camelCase")]
    Solution { elapsed_ms: u64, loss: f64, plan: Vec<String> },
    #[serde(rename_all = "camelCase")]
    Best {
        elapsed_ms: u64,
        #[serde(default)]
        pipeline: Option<BestPipeline>,
    },
}

pub fn trace_events(outcome: &RunOutcome) -> Vec<TraceEvent> {
    let mut events: Vec<TraceEvent> = outcome.search.evaluations.iter().cloned().map(TraceEvent::Evaluation).collect();
    events.extend(outcome.search.solution_log.iter().map(|s| TraceEvent::Solution {
        elapsed_ms: s.elapsed.as_millis() as u64,
        loss: 1.0 - s.score,
        plan: s.plan.clone(),
    }));
    events.push(TraceEvent::Best {
        elapsed_ms: outcome.elapsed.as_millis() as u64,
        pipeline: outcome.best.clone(),
    });
    events
}

pub fn write_trace(path: &Path, outcome: &RunOutcome) -> io::Result<()> {
    let mut out = io::BufWriter::new(std::fs::File::create(path)?);
    for e in trace_events(outcome) {
        serde_json::to_writer(&mut out, &e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(path: &Path) -> io::Result<Vec<TraceEvent>> {
    let file = io::BufReader::new(std::fs::File::open(path)?);
    let mut events = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
        events.push(e);
    }
    Ok(events)
}

/// Best-so-far curve as `(seconds, loss, pipeline)` rows.
pub fn best_so_far(events: &[TraceEvent]) -> Vec<(f64, f64, String)> {
    events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Solution { elapsed_ms, loss, plan } => Some((*elapsed_ms as f64 / 1000.0, *loss, plan.join(" "))),
            _ => None,
        })
        .collect()
}

/// Short name of a pipeline constructor, e.g. `scaler+knn1`.
pub fn pipeline_name(composition: &Composition) -> String {
    composition
        .steps
        .iter()
        .map(|s| s.target.service())
        .collect::<Vec<_>>()
        .join("+")
}
