//! Best-first search over HTN search nodes with pluggable node evaluation.
//!
//! The search makes no assumption about node scores: an evaluator may run rollouts,
//! execute services or anything else. Every complete plan an evaluator scores is a
//! solution candidate and enters the anytime solution log when it improves on the
//! best seen so far.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::htn::{plan_key, Action, EnumerationError, HtnProblem, PlanningError, SearchNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }

    pub fn best(self, current: Option<f64>, candidate: f64) -> f64 {
        match current {
            Some(c) if !self.better(candidate, c) => c,
            _ => candidate,
        }
    }
}

/// Position in the open list: the score, then insertion order for ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeScore {
    pub value: f64,
    pub sequence: u64,
    direction: Direction,
}

impl NodeScore {
    pub fn new(value: f64, sequence: u64, direction: Direction) -> Self {
        Self {
            value,
            sequence,
            direction,
        }
    }

    fn rank(&self) -> f64 {
        match self.direction {
            Direction::Maximize => self.value,
            Direction::Minimize => -self.value,
        }
    }
}

impl Eq for NodeScore {}

impl Ord for NodeScore {
    /// Greater means "pop first".
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank()
            .total_cmp(&other.rank())
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

impl PartialOrd for NodeScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum EvalFailure {
    #[error("evaluation timed out")]
    Timeout,
    #[error("evaluation failed: {0}")]
    Failed(String),
}

/// Scores complete plans, respecting the given time budget.
pub trait PlanEvaluator: Sync {
    fn evaluate(&self, plan: &[Action], budget: Duration) -> Result<f64, EvalFailure>;
}

impl<F> PlanEvaluator for F
where
    F: Fn(&[Action], Duration) -> Result<f64, EvalFailure> + Sync,
{
    fn evaluate(&self, plan: &[Action], budget: Duration) -> Result<f64, EvalFailure> {
        self(plan, budget)
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error("exhaustive evaluation: {0}")]
    Oracle(#[from] EnumerationError),
    #[error("evaluator failed: {0}")]
    Evaluator(String),
}

#[derive(Debug, Clone)]
struct CachedOutcome {
    result: Result<f64, EvalFailure>,
    started: Duration,
    duration: Duration,
}

/// Plan scores keyed by canonical plan text; concurrent requests for the same plan
/// wait for a single evaluation.
struct ScoreCache {
    origin: Instant,
    entries: Mutex<HashMap<String, Arc<OnceLock<CachedOutcome>>>>,
}

impl ScoreCache {
    fn new(origin: Instant) -> Self {
        Self {
            origin,
            entries: Mutex::new(HashMap::new()),
        }
    }

    fn get_or_evaluate(&self, key: &str, compute: impl FnOnce() -> Result<f64, EvalFailure>) -> CachedOutcome {
        let cell = {
            let mut entries = self.entries.lock().expect("score cache poisoned");
            match entries.get(key) {
                Some(cell) => cell.clone(),
                None => entries.entry(key.to_string()).or_default().clone(),
            }
        };
        cell.get_or_init(|| {
            let started = self.origin.elapsed();
            let t = Instant::now();
            let result = match compute() {
                Ok(v) if v.is_nan() => Err(EvalFailure::Failed("score is NaN".into())),
                other => other,
            };
            CachedOutcome {
                result,
                started,
                duration: t.elapsed(),
            }
        })
        .clone()
    }

    fn outcomes(&self) -> Vec<CachedOutcome> {
        let entries = self.entries.lock().expect("score cache poisoned");
        entries.values().filter_map(|c| c.get().cloned()).collect()
    }
}

#[derive(Debug, Clone)]
struct Observation {
    key: String,
    plan: Vec<Action>,
    outcome: CachedOutcome,
}

/// Per-evaluation resources handed to a [`NodeEvaluator`].
pub struct EvalContext<'a> {
    rng: ChaCha8Rng,
    deadline: Instant,
    per_evaluation: Duration,
    direction: Direction,
    cache: &'a ScoreCache,
    observed: Vec<Observation>,
}

impl<'a> EvalContext<'a> {
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn expired(&self) -> bool {
        Instant::now() >= self.deadline
    }

    /// Scores a complete plan through the shared cache. `None` when the evaluation
    /// failed, timed out, or no time is left.
    pub fn score_plan(&mut self, evaluator: &dyn PlanEvaluator, plan: &[Action]) -> Option<f64> {
        let now = Instant::now();
        if now >= self.deadline {
            return None;
        }
        let budget = self.per_evaluation.min(self.deadline - now);
        let key = plan_key(plan);
        let outcome = self.cache.get_or_evaluate(&key, || evaluator.evaluate(plan, budget));
        let score = outcome.result.as_ref().ok().copied();
        self.observed.push(Observation {
            key,
            plan: plan.to_vec(),
            outcome,
        });
        score
    }
}

/// Scores a search node. `Ok(None)` means "unevaluable": the node is pruned.
pub trait NodeEvaluator: Sync {
    fn evaluate(&self, node: &SearchNode, problem: &HtnProblem, ctx: &mut EvalContext<'_>) -> Result<Option<f64>, SearchError>;
}

/// Draws one random root-to-goal completion beneath `node`, choosing uniformly among
/// successors at each step. `None` on a dead end.
pub fn random_completion<R: Rng>(problem: &HtnProblem, node: &SearchNode, rng: &mut R) -> Result<Option<SearchNode>, PlanningError> {
    let mut current = node.clone();
    loop {
        if current.is_goal() {
            return Ok(Some(current));
        }
        let mut expansions = problem.expansions(&current)?;
        if expansions.is_empty() {
            return Ok(None);
        }
        let pick = rng.gen_range(0..expansions.len());
        let mut plan = std::mem::take(&mut current.plan);
        current = problem.expand(&current, expansions.swap_remove(pick));
        plan.append(&mut current.plan);
        current.plan = plan;
    }
}

/// Scores a node by the best of `k` random completions. Dead ends are retried, for
/// at most `2k` attempts in total.
pub struct RandomCompletion<P> {
    pub plan_evaluator: P,
    pub k: usize,
}

impl<P: PlanEvaluator> NodeEvaluator for RandomCompletion<P> {
    fn evaluate(&self, node: &SearchNode, problem: &HtnProblem, ctx: &mut EvalContext<'_>) -> Result<Option<f64>, SearchError> {
        if node.is_goal() {
            return Ok(ctx.score_plan(&self.plan_evaluator, &node.plan));
        }
        let k = self.k.max(1);
        let direction = ctx.direction();
        let mut best = None;
        let mut completed = 0;
        let mut attempts = 0;
        while completed < k && attempts < 2 * k && !ctx.expired() {
            attempts += 1;
            let Some(goal) = random_completion(problem, node, ctx.rng())? else {
                continue;
            };
            completed += 1;
            if let Some(score) = ctx.score_plan(&self.plan_evaluator, &goal.plan) {
                best = Some(direction.best(best, score));
            }
        }
        Ok(best)
    }
}

/// Scores a node by the best over all completions. Only feasible on small subtrees;
/// more than `cap` generated nodes is an error.
pub struct Exhaustive<P> {
    pub plan_evaluator: P,
    pub cap: usize,
}

impl<P: PlanEvaluator> NodeEvaluator for Exhaustive<P> {
    fn evaluate(&self, node: &SearchNode, problem: &HtnProblem, ctx: &mut EvalContext<'_>) -> Result<Option<f64>, SearchError> {
        let direction = ctx.direction();
        let mut best = None;
        for goal in problem.enumerate_goals(node, self.cap)? {
            if let Some(score) = ctx.score_plan(&self.plan_evaluator, &goal.plan) {
                best = Some(direction.best(best, score));
            }
        }
        Ok(best)
    }
}

fn standalone<T>(direction: Direction, rng: ChaCha8Rng, run: impl FnOnce(&mut EvalContext<'_>) -> T) -> T {
    let cache = ScoreCache::new(Instant::now());
    let mut ctx = EvalContext {
        rng,
        deadline: Instant::now() + Duration::from_secs(365 * 24 * 3600),
        per_evaluation: Duration::from_secs(365 * 24 * 3600),
        direction,
        cache: &cache,
        observed: Vec::new(),
    };
    run(&mut ctx)
}

/// Random-completion score of a single node outside a search.
pub fn random_completion_evaluate(
    node: &SearchNode,
    problem: &HtnProblem,
    plan_evaluator: &dyn PlanEvaluator,
    k: usize,
    direction: Direction,
    seed: u64,
) -> Result<Option<f64>, SearchError> {
    let evaluator = RandomCompletion {
        plan_evaluator: Borrowed(plan_evaluator),
        k,
    };
    standalone(direction, ChaCha8Rng::seed_from_u64(seed), |ctx| evaluator.evaluate(node, problem, ctx))
}

/// Exact best score over every completion of `node`.
pub fn exhaustive_evaluate(
    node: &SearchNode,
    problem: &HtnProblem,
    plan_evaluator: &dyn PlanEvaluator,
    direction: Direction,
    cap: usize,
) -> Result<Option<f64>, SearchError> {
    let evaluator = Exhaustive {
        plan_evaluator: Borrowed(plan_evaluator),
        cap,
    };
    standalone(direction, ChaCha8Rng::seed_from_u64(0), |ctx| evaluator.evaluate(node, problem, ctx))
}

struct Borrowed<'a>(&'a dyn PlanEvaluator);

impl PlanEvaluator for Borrowed<'_> {
    fn evaluate(&self, plan: &[Action], budget: Duration) -> Result<f64, EvalFailure> {
        self.0.evaluate(plan, budget)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub direction: Direction,
    pub overall_timeout: Duration,
    pub per_evaluation_timeout: Duration,
    /// Completions per node for rollout evaluators.
    pub k: usize,
    pub seed: u64,
    /// Node evaluations run concurrently on up to this many threads.
    pub parallelism: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            direction: Direction::Maximize,
            overall_timeout: Duration::from_secs(60),
            per_evaluation_timeout: Duration::from_secs(30),
            k: 3,
            seed: 0,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedSolution {
    pub elapsed: Duration,
    pub plan: Vec<String>,
    pub score: f64,
}

/// One evaluated candidate, as written to the evaluation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub timestamp_ms: u64,
    pub plan: String,
    pub score: Option<f64>,
    pub duration_ms: u64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub failure: Option<EvalFailure>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub nodes_generated: usize,
    pub nodes_pruned: usize,
    pub evaluations_run: usize,
    pub evaluations_timed_out: usize,
    pub evaluations_failed: usize,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_plan: Option<Vec<Action>>,
    pub best_score: Option<f64>,
    pub solution_log: Vec<LoggedSolution>,
    pub evaluations: Vec<EvaluationRecord>,
    pub stats: SearchStats,
    pub elapsed: Duration,
}

struct OpenEntry {
    score: NodeScore,
    node: SearchNode,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.cmp(&other.score)
    }
}

struct Coordinator<'a> {
    problem: &'a HtnProblem,
    evaluator: &'a dyn NodeEvaluator,
    config: &'a SearchConfig,
    cache: ScoreCache,
    deadline: Instant,
    evaluations_submitted: u64,
    recorded: HashSet<String>,
    best: Option<(Vec<Action>, f64)>,
    log: Vec<LoggedSolution>,
    records: Vec<EvaluationRecord>,
    stats: SearchStats,
}

type BatchResult = (Result<Option<f64>, SearchError>, Vec<Observation>);

impl<'a> Coordinator<'a> {
    fn context(&self, submission: u64) -> EvalContext<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(submission);
        EvalContext {
            rng,
            deadline: self.deadline,
            per_evaluation: self.config.per_evaluation_timeout,
            direction: self.config.direction,
            cache: &self.cache,
            observed: Vec::new(),
        }
    }

    /// Evaluates `nodes` (possibly in parallel) and merges observations in
    /// submission order, so the outcome does not depend on thread scheduling.
    fn evaluate_batch(&mut self, nodes: &[SearchNode]) -> Vec<Result<Option<f64>, SearchError>> {
        let first = self.evaluations_submitted;
        self.evaluations_submitted += nodes.len() as u64;
        let workers = self.config.parallelism.max(1).min(nodes.len().max(1));
        let results: Vec<BatchResult> = if workers <= 1 {
            nodes
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let mut ctx = self.context(first + i as u64);
                    let r = self.evaluator.evaluate(n, self.problem, &mut ctx);
                    (r, ctx.observed)
                })
                .collect()
        } else {
            let this = &*self;
            let mut slots: Vec<Option<BatchResult>> = (0..nodes.len()).map(|_| None).collect();
            std::thread::scope(|scope| {
                let chunk = nodes.len().div_ceil(workers);
                let handles: Vec<_> = nodes
                    .chunks(chunk)
                    .enumerate()
                    .map(|(c, group)| {
                        scope.spawn(move || {
                            group
                                .iter()
                                .enumerate()
                                .map(|(j, n)| {
                                    let mut ctx = this.context(first + (c * chunk + j) as u64);
                                    let r = this.evaluator.evaluate(n, this.problem, &mut ctx);
                                    (r, ctx.observed)
                                })
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                for (c, h) in handles.into_iter().enumerate() {
                    for (j, r) in h.join().expect("evaluation thread panicked").into_iter().enumerate() {
                        slots[c * chunk + j] = Some(r);
                    }
                }
            });
            slots.into_iter().map(|s| s.expect("all slots filled")).collect()
        };
        results
            .into_iter()
            .map(|(r, observed)| {
                for obs in observed {
                    self.observe(obs);
                }
                r
            })
            .collect()
    }

    fn observe(&mut self, obs: Observation) {
        if !self.recorded.insert(obs.key.clone()) {
            return;
        }
        self.records.push(EvaluationRecord {
            timestamp_ms: obs.outcome.started.as_millis() as u64,
            plan: obs.key,
            score: obs.outcome.result.as_ref().ok().copied(),
            duration_ms: obs.outcome.duration.as_millis() as u64,
            failure: obs.outcome.result.as_ref().err().cloned(),
        });
        if let Ok(score) = obs.outcome.result {
            let improves = match &self.best {
                None => true,
                Some((_, b)) => self.config.direction.better(score, *b),
            };
            if improves {
                self.log.push(LoggedSolution {
                    elapsed: self.cache.origin.elapsed(),
                    plan: obs.plan.iter().map(|a| a.to_string()).collect(),
                    score,
                });
                self.best = Some((obs.plan, score));
            }
        }
    }
}

/// Anytime best-first search. Returns the best candidate found when the open list is
/// exhausted or the overall timeout elapses; the result is a candidate, not a
/// certified optimum.
pub fn best_first_search(
    problem: &HtnProblem,
    evaluator: &dyn NodeEvaluator,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let start = Instant::now();
    let mut co = Coordinator {
        problem,
        evaluator,
        config,
        cache: ScoreCache::new(start),
        deadline: start + config.overall_timeout,
        evaluations_submitted: 0,
        recorded: HashSet::new(),
        best: None,
        log: Vec::new(),
        records: Vec::new(),
        stats: SearchStats::default(),
    };
    let mut open = BinaryHeap::new();
    let mut sequence = 0u64;

    let root = problem.root();
    co.stats.nodes_generated = 1;
    let root_score = co.evaluate_batch(std::slice::from_ref(&root)).pop().expect("one result")?;
    match root_score {
        Some(v) => {
            open.push(OpenEntry {
                score: NodeScore::new(v, sequence, config.direction),
                node: root,
            });
            sequence += 1;
        }
        None => co.stats.nodes_pruned += 1,
    }

    while let Some(OpenEntry { node, .. }) = open.pop() {
        if Instant::now() >= co.deadline {
            break;
        }
        // goal nodes were benchmarked when they were generated
        if node.is_goal() {
            continue;
        }
        let children = problem.successors(&node)?;
        co.stats.nodes_expanded += 1;
        co.stats.nodes_generated += children.len();
        let scores = co.evaluate_batch(&children);
        for (child, score) in children.into_iter().zip(scores) {
            match score? {
                Some(v) => {
                    open.push(OpenEntry {
                        score: NodeScore::new(v, sequence, config.direction),
                        node: child,
                    });
                    sequence += 1;
                }
                None => co.stats.nodes_pruned += 1,
            }
        }
    }

    for outcome in co.cache.outcomes() {
        co.stats.evaluations_run += 1;
        match outcome.result {
            Err(EvalFailure::Timeout) => co.stats.evaluations_timed_out += 1,
            Err(EvalFailure::Failed(_)) => co.stats.evaluations_failed += 1,
            Ok(_) => {}
        }
    }
    let (best_plan, best_score) = match co.best {
        Some((p, s)) => (Some(p), Some(s)),
        None => (None, None),
    };
    Ok(SearchResult {
        best_plan,
        best_score,
        solution_log: co.log,
        evaluations: co.records,
        stats: co.stats,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::htn::{ConditionalEffect, Method, Operator, Task, TaskNetwork};
    use crate::logic::{Formula, Literal, State, Theory};

    fn choice_problem(options: &[&str]) -> HtnProblem {
        let ops: Vec<Operator> = options
            .iter()
            .map(|o| {
                Operator::new(format!("pick_{o}"), &[], &[])
                    .with_add(ConditionalEffect::unconditional(vec![Literal::fact::<&str>("picked", &[o])]))
            })
            .collect();
        let methods = options
            .iter()
            .map(|o| Method {
                name: format!("m_{o}"),
                task: Task::new("choose", vec![]),
                inputs: vec![],
                outputs: vec![],
                precondition: Formula::truth(),
                network: TaskNetwork::parse(&[format!("(pick_{o})")]).unwrap(),
            })
            .collect();
        HtnProblem::new(ops, methods, State::default(), TaskNetwork::parse(&["(choose)"]).unwrap(), Theory::empty()).unwrap()
    }

    fn table(scores: &'static [(&'static str, f64)]) -> impl Fn(&[Action], Duration) -> Result<f64, EvalFailure> + Sync {
        move |plan: &[Action], _| {
            let name = &plan[0].operator;
            Ok(scores.iter().find(|(n, _)| name.ends_with(n)).unwrap().1)
        }
    }

    #[test]
    fn score_ordering_and_fifo_ties() {
        let d = Direction::Maximize;
        assert!(NodeScore::new(0.9, 5, d) > NodeScore::new(0.5, 0, d));
        assert!(NodeScore::new(0.5, 0, d) > NodeScore::new(0.5, 1, d));
        let m = Direction::Minimize;
        assert!(NodeScore::new(0.1, 5, m) > NodeScore::new(0.5, 0, m));
    }

    #[test]
    fn single_chain_logs_one_solution() {
        let p = choice_problem(&["only"]);
        let eval = RandomCompletion {
            plan_evaluator: |_: &[Action], _| Ok(1.0),
            k: 3,
        };
        let r = best_first_search(&p, &eval, &SearchConfig::default()).unwrap();
        assert_eq!(r.best_plan.unwrap().len(), 1);
        assert_eq!(r.solution_log.len(), 1);
        assert_eq!(r.stats.evaluations_run, 1);
    }

    /// Scores nodes by their first remaining task and records every node it sees.
    struct Recording {
        seen: Mutex<Vec<String>>,
    }

    impl NodeEvaluator for Recording {
        fn evaluate(&self, node: &SearchNode, _: &HtnProblem, _: &mut EvalContext<'_>) -> Result<Option<f64>, SearchError> {
            self.seen.lock().unwrap().push(node.remaining.to_string());
            Ok(Some(match node.remaining.tasks.first().map(|t| t.name.as_str()) {
                Some("pick_hi") => 0.9,
                Some("pick_lo") => 0.5,
                _ => 0.0,
            }))
        }
    }

    #[test]
    fn better_child_expanded_first() {
        let p = choice_problem(&["lo", "hi"]);
        let eval = Recording {
            seen: Mutex::new(Vec::new()),
        };
        best_first_search(&p, &eval, &SearchConfig::default()).unwrap();
        let seen = eval.seen.into_inner().unwrap();
        // root, its two children in declaration order, then the grandchild of the
        // 0.9 child before that of the 0.5 child
        assert_eq!(seen, ["[(choose)]", "[(pick_lo)]", "[(pick_hi)]", "[]", "[]"]);
        let p2 = choice_problem(&["hi", "lo"]);
        let eval = Recording {
            seen: Mutex::new(Vec::new()),
        };
        let r = best_first_search(&p2, &eval, &SearchConfig::default()).unwrap();
        assert_eq!(r.stats.nodes_expanded, 3);
    }

    #[test]
    fn exhaustive_search_finds_best() {
        let p = choice_problem(&["lo", "hi", "mid"]);
        let eval = Exhaustive {
            plan_evaluator: table(&[("lo", 0.1), ("hi", 0.9), ("mid", 0.5)]),
            cap: 100,
        };
        let r = best_first_search(&p, &eval, &SearchConfig::default()).unwrap();
        assert_eq!(r.best_score, Some(0.9));
        assert_eq!(r.best_plan.unwrap()[0].operator, "pick_hi");
        // log is strictly improving and ends at the best
        assert!(r.solution_log.windows(2).all(|w| w[1].score > w[0].score));
        assert_eq!(r.solution_log.last().unwrap().score, 0.9);
    }

    #[test]
    fn random_completion_on_goal_evaluates_once() {
        let p = choice_problem(&["a"]);
        let root = p.root();
        let goal = p.enumerate_goals(&root, 100).unwrap().pop().unwrap();
        let calls = Mutex::new(0);
        let pe = |_: &[Action], _: Duration| {
            *calls.lock().unwrap() += 1;
            Ok(0.3)
        };
        let s = random_completion_evaluate(&goal, &p, &pe, 5, Direction::Maximize, 1).unwrap();
        assert_eq!(s, Some(0.3));
        assert_eq!(*calls.lock().unwrap(), 1);
    }

    #[test]
    fn random_completion_picks_best_of_four() {
        let p = choice_problem(&["a", "b", "c", "d"]);
        let pe = table(&[("a", 0.2), ("b", 0.5), ("c", 0.7), ("d", 0.9)]);
        let exact = exhaustive_evaluate(&p.root(), &p, &pe, Direction::Maximize, 100).unwrap();
        assert_eq!(exact, Some(0.9));
        let sampled = random_completion_evaluate(&p.root(), &p, &pe, 64, Direction::Maximize, 7).unwrap();
        assert_eq!(sampled, exact);
        let min = exhaustive_evaluate(&p.root(), &p, &pe, Direction::Minimize, 100).unwrap();
        assert_eq!(min, Some(0.2));
    }

    #[test]
    fn failed_samples_are_discarded() {
        let p = choice_problem(&["a"]);
        let pe = |_: &[Action], _: Duration| Err(EvalFailure::Timeout);
        assert_eq!(random_completion_evaluate(&p.root(), &p, &pe, 3, Direction::Maximize, 0).unwrap(), None);
        let eval = RandomCompletion { plan_evaluator: pe, k: 3 };
        let r = best_first_search(&p, &eval, &SearchConfig::default()).unwrap();
        assert!(r.best_plan.is_none());
        assert_eq!(r.stats.evaluations_timed_out, 1);
    }

    #[test]
    fn exhaustive_cap() {
        let p = choice_problem(&["a", "b", "c"]);
        let pe = |_: &[Action], _: Duration| Ok(0.0);
        assert!(matches!(
            exhaustive_evaluate(&p.root(), &p, &pe, Direction::Maximize, 2),
            Err(SearchError::Oracle(EnumerationError::CapExceeded(2)))
        ));
    }

    #[test]
    fn trace_record_serialization() {
        let ok = EvaluationRecord {
            timestamp_ms: 3,
            plan: "(a)".into(),
            score: Some(0.5),
            duration_ms: 1,
            failure: None,
        };
        let line = serde_json::to_string(&ok).unwrap();
        assert_eq!(line, r#"{"timestamp_ms":3,"plan":"(a)","score":0.5,"duration_ms":1}"#);
        let bad = EvaluationRecord {
            failure: Some(EvalFailure::Failed("boom".into())),
            score: None,
            ..ok
        };
        let line = serde_json::to_string(&bad).unwrap();
        assert!(line.contains(r#""status":"failed","reason":"boom""#), "{line}");
        assert_eq!(serde_json::from_str::<EvaluationRecord>(&line).unwrap(), bad);
    }
}
