//! HTN domain model and forward decomposition.
//!
//! Task networks are totally ordered. Expanding a node always refines its first
//! remaining task: primitive tasks are applied immediately, so a node is a goal
//! exactly when no tasks remain.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;
use tracing::warn;

use crate::error::ParseError;
use crate::logic::{satisfies_under, Formula, Literal, LogicError, State, StateError, Substitution, Term, Theory};
use crate::sexpr::{self, Sexpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{owner}: free variable ?{var} of {part} is not declared")]
    UndeclaredVariable {
        owner: String,
        var: String,
        part: &'static str,
    },
    #[error("operator {0}: inputs and outputs overlap")]
    OverlappingParameters(String),
    #[error("predicate `{predicate}` used with arity {found}, first used with {expected}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("task `{0}` is neither an operator nor refined by any method")]
    UnknownTask(String),
    #[error("task ({task}) has {found} arguments, operator expects {expected}")]
    TaskArity {
        task: String,
        expected: String,
        found: usize,
    },
    #[error("duplicate operator `{0}`")]
    DuplicateOperator(String),
    #[error("method {0} refines primitive task")]
    MethodForPrimitive(String),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanningError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("cannot expand a goal node")]
    ExpandGoal,
}

/// `condition → literals`, evaluated against the state before the action applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalEffect {
    pub condition: Formula,
    pub literals: Vec<Literal>,
}

impl ConditionalEffect {
    pub fn unconditional(literals: Vec<Literal>) -> Self {
        Self {
            condition: Formula::truth(),
            literals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub precondition: Formula,
    pub add_effects: Vec<ConditionalEffect>,
    pub del_effects: Vec<ConditionalEffect>,
}

impl Operator {
    pub fn new(name: impl Into<String>, inputs: &[&str], outputs: &[&str]) -> Self {
        Self {
            name: name.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            precondition: Formula::truth(),
            add_effects: Vec::new(),
            del_effects: Vec::new(),
        }
    }

    pub fn with_precondition(mut self, f: Formula) -> Self {
        self.precondition = f;
        self
    }

    pub fn with_add(mut self, effect: ConditionalEffect) -> Self {
        self.add_effects.push(effect);
        self
    }

    pub fn with_del(mut self, effect: ConditionalEffect) -> Self {
        self.del_effects.push(effect);
        self
    }

    pub fn arity(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    fn validate(&self) -> Result<(), DomainError> {
        if self.inputs.iter().any(|i| self.outputs.contains(i)) {
            return Err(DomainError::OverlappingParameters(self.name.clone()));
        }
        check_vars(&self.name, "precondition", &self.precondition.free_vars(), &[&self.inputs])?;
        for e in self.add_effects.iter().chain(&self.del_effects) {
            let mut vars = e.condition.free_vars();
            for l in &e.literals {
                for t in &l.args {
                    if let Term::Var(v) = t {
                        vars.push(v.clone());
                    }
                }
            }
            check_vars(&self.name, "effects", &vars, &[&self.inputs, &self.outputs])?;
        }
        Ok(())
    }

    /// Grounding of inputs and outputs for `action`.
    pub fn grounding(&self, action: &Action) -> Substitution {
        self.inputs
            .iter()
            .zip(&action.inputs)
            .chain(self.outputs.iter().zip(&action.outputs))
            .map(|(v, c)| (v.clone(), c.clone()))
            .collect()
    }
}

fn check_vars(owner: &str, part: &'static str, vars: &[String], allowed: &[&Vec<String>]) -> Result<(), DomainError> {
    for v in vars {
        if !allowed.iter().any(|set| set.contains(v)) {
            return Err(DomainError::UndeclaredVariable {
                owner: owner.to_string(),
                var: v.clone(),
                part,
            });
        }
    }
    Ok(())
}

/// A ground operator instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub operator: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.operator)?;
        for i in &self.inputs {
            write!(f, " {i}")?;
        }
        if !self.outputs.is_empty() {
            f.write_str(" ->")?;
            for o in &self.outputs {
                write!(f, " {o}")?;
            }
        }
        f.write_str(")")
    }
}

/// Canonical text for a plan; stable across runs, used as a cache key.
pub fn plan_key(plan: &[Action]) -> String {
    plan.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Task {
    pub name: String,
    pub args: Vec<Term>,
}

impl Task {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }

    pub fn parse(input: &str) -> Result<Self, ParseError> {
        let expr = sexpr::parse(input)?;
        let items = expr
            .as_list()
            .ok_or_else(|| ParseError::new(input, "task must be a list"))?;
        let name = items
            .first()
            .and_then(Sexpr::as_atom)
            .ok_or_else(|| ParseError::new(input, "task needs a name"))?;
        let args = items[1..]
            .iter()
            .map(|a| {
                a.as_atom()
                    .ok_or_else(|| ParseError::new(input, "task arguments must be atoms"))
                    .and_then(Term::parse)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::new(name, args))
    }

    pub fn substitute(&self, sub: &Substitution) -> Self {
        Self {
            name: self.name.clone(),
            args: self.args.iter().map(|t| sub.apply_term(t)).collect(),
        }
    }

    fn vars(&self) -> impl Iterator<Item = &String> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TaskNetwork {
    pub tasks: Vec<Task>,
}

impl TaskNetwork {
    pub fn new(tasks: Vec<Task>) -> Self {
        Self { tasks }
    }

    pub fn parse<S: AsRef<str>>(tasks: &[S]) -> Result<Self, ParseError> {
        Ok(Self::new(
            tasks.iter().map(|t| Task::parse(t.as_ref())).collect::<Result<_, _>>()?,
        ))
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }
}

impl fmt::Display for TaskNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ts: Vec<String> = self.tasks.iter().map(|t| t.to_string()).collect();
        write!(f, "[{}]", ts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Method {
    pub name: String,
    pub task: Task,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub precondition: Formula,
    pub network: TaskNetwork,
}

impl Method {
    fn validate(&self) -> Result<(), DomainError> {
        let pattern: Vec<String> = self.task.vars().cloned().collect();
        check_vars(
            &self.name,
            "precondition",
            &self.precondition.free_vars(),
            &[&self.inputs, &pattern, &self.outputs],
        )?;
        let net_vars: Vec<String> = self.network.tasks.iter().flat_map(|t| t.vars().cloned()).collect();
        check_vars(&self.name, "task network", &net_vars, &[&self.inputs, &self.outputs, &pattern])
    }
}

/// `⟨O, M, s0, N⟩` together with the theory used to interpret preconditions.
#[derive(Debug, Clone)]
pub struct HtnProblem {
    operators: Vec<Operator>,
    methods: Vec<Method>,
    initial_state: State,
    initial_network: TaskNetwork,
    theory: Theory,
    operator_index: HashMap<String, usize>,
    methods_by_task: HashMap<String, Vec<usize>>,
}

impl HtnProblem {
    pub fn new(
        operators: Vec<Operator>,
        methods: Vec<Method>,
        initial_state: State,
        initial_network: TaskNetwork,
        theory: Theory,
    ) -> Result<Self, DomainError> {
        let mut operator_index = HashMap::new();
        for (i, op) in operators.iter().enumerate() {
            op.validate()?;
            if operator_index.insert(op.name.clone(), i).is_some() {
                return Err(DomainError::DuplicateOperator(op.name.clone()));
            }
        }
        let mut methods_by_task: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, m) in methods.iter().enumerate() {
            m.validate()?;
            if operator_index.contains_key(&m.task.name) {
                return Err(DomainError::MethodForPrimitive(m.name.clone()));
            }
            methods_by_task.entry(m.task.name.clone()).or_default().push(i);
        }
        let problem = Self {
            operators,
            methods,
            initial_state,
            initial_network,
            theory,
            operator_index,
            methods_by_task,
        };
        problem.check_arities()?;
        problem.check_tasks()?;
        Ok(problem)
    }

    fn check_arities(&self) -> Result<(), DomainError> {
        let mut arity: HashMap<String, usize> = HashMap::new();
        let mut record = |pred: &str, n: usize| -> Result<(), DomainError> {
            let expected = self.theory.arity(pred).unwrap_or(n);
            match arity.get(pred) {
                Some(&e) if e != n => Err(DomainError::Arity {
                    predicate: pred.to_string(),
                    expected: e,
                    found: n,
                }),
                _ if expected != n => Err(DomainError::Arity {
                    predicate: pred.to_string(),
                    expected,
                    found: n,
                }),
                _ => {
                    arity.insert(pred.to_string(), n);
                    Ok(())
                }
            }
        };
        for l in self.initial_state.literals() {
            record(&l.predicate, l.args.len())?;
        }
        for op in &self.operators {
            for (p, n) in op.precondition.predicates() {
                record(&p, n)?;
            }
            for e in op.add_effects.iter().chain(&op.del_effects) {
                for (p, n) in e.condition.predicates() {
                    record(&p, n)?;
                }
                for l in &e.literals {
                    record(&l.predicate, l.args.len())?;
                }
            }
        }
        for m in &self.methods {
            for (p, n) in m.precondition.predicates() {
                record(&p, n)?;
            }
        }
        Ok(())
    }

    fn check_tasks(&self) -> Result<(), DomainError> {
        let check = |t: &Task| -> Result<(), DomainError> {
            if let Some(op) = self.operator(&t.name) {
                if t.args.len() != op.arity() && t.args.len() != op.inputs.len() {
                    return Err(DomainError::TaskArity {
                        task: t.to_string(),
                        expected: format!("{} or {}", op.inputs.len(), op.arity()),
                        found: t.args.len(),
                    });
                }
                Ok(())
            } else if self.methods_by_task.contains_key(&t.name) {
                Ok(())
            } else {
                Err(DomainError::UnknownTask(t.name.clone()))
            }
        };
        for t in &self.initial_network.tasks {
            check(t)?;
        }
        for m in &self.methods {
            for t in &m.network.tasks {
                check(t)?;
            }
        }
        // methods for tasks that no network mentions can never fire
        let mentioned: BTreeSet<&str> = self
            .initial_network
            .tasks
            .iter()
            .chain(self.methods.iter().flat_map(|m| &m.network.tasks))
            .map(|t| t.name.as_str())
            .collect();
        for m in &self.methods {
            if !mentioned.contains(m.task.name.as_str()) {
                warn!(method = %m.name, task = %m.task.name, "method refines a task that is never used");
            }
        }
        Ok(())
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn initial_state(&self) -> &State {
        &self.initial_state
    }

    pub fn initial_network(&self) -> &TaskNetwork {
        &self.initial_network
    }

    pub fn theory(&self) -> &Theory {
        &self.theory
    }

    pub fn operator(&self, name: &str) -> Option<&Operator> {
        self.operator_index.get(name).map(|&i| &self.operators[i])
    }

    pub fn is_primitive(&self, task: &Task) -> bool {
        self.operator_index.contains_key(&task.name)
    }

    pub fn methods_for(&self, task_name: &str) -> impl Iterator<Item = &Method> {
        self.methods_by_task
            .get(task_name)
            .into_iter()
            .flatten()
            .map(|&i| &self.methods[i])
    }

    pub fn root(&self) -> SearchNode {
        SearchNode {
            remaining: self.initial_network.clone(),
            state: self.initial_state.clone(),
            plan: Vec::new(),
            bindings: Substitution::new(),
            fresh_counter: 0,
        }
    }

    /// Replays `plan` from the initial state.
    pub fn validate_plan(&self, plan: &[Action]) -> Result<State, PlanFailure> {
        let mut state = self.initial_state.clone();
        for (index, action) in plan.iter().enumerate() {
            let fail = |reason: String| PlanFailure { index, reason };
            let op = self
                .operator(&action.operator)
                .ok_or_else(|| fail(format!("unknown operator {}", action.operator)))?;
            match action_applicable(&state, &self.theory, op, action) {
                Ok(true) => {}
                Ok(false) => return Err(fail(format!("{action} is not applicable"))),
                Err(e) => return Err(fail(e.to_string())),
            }
            state = apply_action(&state, &self.theory, op, action).map_err(|e| fail(e.to_string()))?;
        }
        Ok(state)
    }

    /// Every successor of `node`, in declaration order then lexicographic grounding order.
    pub fn successors(&self, node: &SearchNode) -> Result<Vec<SearchNode>, PlanningError> {
        let expansions = self.expansions(node)?;
        Ok(expansions.into_iter().map(|e| self.expand(node, e)).collect())
    }

    /// The applicable decompositions of the first task, in [`successors`](Self::successors)
    /// order, without building the child nodes.
    pub(crate) fn expansions(&self, node: &SearchNode) -> Result<Vec<Expansion<'_>>, PlanningError> {
        let Some(task) = node.remaining.tasks.first() else {
            return Err(PlanningError::ExpandGoal);
        };
        let task = task.substitute(&node.bindings);
        if let Some(op) = self.operator(&task.name) {
            self.primitive_expansions(node, op, &task)
        } else if self.methods_by_task.contains_key(&task.name) {
            self.method_expansions(node, &task)
        } else {
            Err(DomainError::UnknownTask(task.name.clone()).into())
        }
    }

    /// The child of `node` reached through `expansion`.
    pub(crate) fn expand(&self, node: &SearchNode, expansion: Expansion<'_>) -> SearchNode {
        let rest = &node.remaining.tasks[1..];
        match expansion {
            Expansion::Primitive {
                action,
                state,
                bindings,
                counter,
            } => {
                let mut plan = node.plan.clone();
                plan.push(action);
                SearchNode {
                    remaining: TaskNetwork::new(rest.iter().map(|t| t.substitute(&bindings)).collect()),
                    state,
                    plan,
                    bindings,
                    fresh_counter: counter,
                }
            }
            Expansion::Method {
                method,
                sub,
                bindings,
                counter,
            } => {
                let mut tasks: Vec<Task> = method.network.tasks.iter().map(|t| t.substitute(&sub)).collect();
                tasks.extend(rest.iter().map(|t| t.substitute(&bindings)));
                SearchNode {
                    remaining: TaskNetwork::new(tasks),
                    state: node.state.clone(),
                    plan: node.plan.clone(),
                    bindings,
                    fresh_counter: counter,
                }
            }
        }
    }

    fn primitive_expansions<'p>(&'p self, node: &SearchNode, op: &Operator, task: &Task) -> Result<Vec<Expansion<'p>>, PlanningError> {
        if task.args.len() != op.arity() && task.args.len() != op.inputs.len() {
            return Err(DomainError::TaskArity {
                task: task.to_string(),
                expected: op.arity().to_string(),
                found: task.args.len(),
            }
            .into());
        }
        let state = &node.state;
        let mut out = Vec::new();
        let free = unbound_vars(task.args.iter().take(op.inputs.len()));
        let constants: Vec<&String> = state.constants().iter().collect();
        for choice in Odometer::new(free.len(), constants.len()) {
            let mut bindings = node.bindings.clone();
            for (v, &c) in free.iter().zip(&choice) {
                bindings.bind(v.clone(), constants[c].clone());
            }
            let inputs: Vec<String> = task.args[..op.inputs.len()]
                .iter()
                .map(|t| match bindings.apply_term(t) {
                    Term::Const(c) => c,
                    Term::Var(_) => unreachable!("inputs are bound by enumeration"),
                })
                .collect();
            let mut counter = node.fresh_counter;
            let mut outputs = Vec::with_capacity(op.outputs.len());
            for j in 0..op.outputs.len() {
                match task.args.get(op.inputs.len() + j).map(|t| bindings.apply_term(t)) {
                    Some(Term::Const(c)) => outputs.push(c),
                    Some(Term::Var(v)) => {
                        let c = fresh_constant(&mut counter, state);
                        bindings.bind(v, c.clone());
                        outputs.push(c);
                    }
                    None => outputs.push(fresh_constant(&mut counter, state)),
                }
            }
            let action = Action {
                operator: op.name.clone(),
                inputs,
                outputs,
            };
            if !action_applicable(state, &self.theory, op, &action)? {
                continue;
            }
            let state = apply_action(state, &self.theory, op, &action)?;
            out.push(Expansion::Primitive {
                action,
                state,
                bindings,
                counter,
            });
        }
        Ok(out)
    }

    fn method_expansions<'p>(&'p self, node: &SearchNode, task: &Task) -> Result<Vec<Expansion<'p>>, PlanningError> {
        let state = &node.state;
        let constants: Vec<&String> = state.constants().iter().collect();
        let mut out = Vec::new();
        'methods: for m in self.methods_for(&task.name) {
            if m.task.args.len() != task.args.len() {
                continue;
            }
            // unify the method's task pattern with the (partially bound) task
            let mut fixed = Substitution::new();
            let mut outer = Substitution::new();
            let mut deferred: Vec<(String, String)> = Vec::new();
            for (p, a) in m.task.args.iter().zip(&task.args) {
                match (p, a) {
                    (Term::Const(c), Term::Const(d)) if c != d => continue 'methods,
                    (Term::Const(_), Term::Const(_)) => {}
                    (Term::Const(c), Term::Var(u)) => outer.bind(u.clone(), c.clone()),
                    (Term::Var(v), Term::Const(d)) => match fixed.get(v) {
                        Some(prev) if prev != d => continue 'methods,
                        _ => fixed.bind(v.clone(), d.clone()),
                    },
                    (Term::Var(v), Term::Var(u)) => deferred.push((u.clone(), v.clone())),
                }
            }
            let mut free: Vec<String> = Vec::new();
            for v in m.task.vars().chain(&m.inputs) {
                if !fixed.contains(v) && !m.outputs.contains(v) && !free.contains(v) {
                    free.push(v.clone());
                }
            }
            // output constants do not depend on how the free variables are chosen
            let mut sub = fixed;
            let mut counter = node.fresh_counter;
            for o in &m.outputs {
                if let Some(c) = sub.get(o) {
                    if state.has_constant(c) {
                        continue 'methods;
                    }
                } else {
                    let c = fresh_constant(&mut counter, state);
                    sub.bind(o.clone(), c);
                }
            }
            for choice in Odometer::new(free.len(), constants.len()) {
                for (v, &c) in free.iter().zip(&choice) {
                    sub.rebind(v, constants[c]);
                }
                if !satisfies_under(state, &self.theory, &m.precondition, &sub)? {
                    continue;
                }
                let sub = sub.clone();
                let mut bindings = node.bindings.clone();
                for (u, c) in outer.iter() {
                    bindings.bind(u, c);
                }
                for (u, v) in &deferred {
                    if let Some(c) = sub.get(v) {
                        bindings.bind(u.clone(), c);
                    }
                }
                out.push(Expansion::Method {
                    method: m,
                    sub,
                    bindings,
                    counter,
                });
            }
        }
        Ok(out)
    }

    /// All goal nodes beneath `node` by depth-first expansion, failing once more than
    /// `cap` nodes have been generated.
    pub fn enumerate_goals(&self, node: &SearchNode, cap: usize) -> Result<Vec<SearchNode>, EnumerationError> {
        let mut goals = Vec::new();
        let mut stack = vec![node.clone()];
        let mut generated = 1usize;
        while let Some(n) = stack.pop() {
            if n.is_goal() {
                goals.push(n);
                continue;
            }
            let children = self.successors(&n)?;
            generated += children.len();
            if generated > cap {
                return Err(EnumerationError::CapExceeded(cap));
            }
            stack.extend(children.into_iter().rev());
        }
        Ok(goals)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("subtree has more than {0} nodes")]
    CapExceeded(usize),
    #[error(transparent)]
    Planning(#[from] PlanningError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("plan fails at step {index}: {reason}")]
pub struct PlanFailure {
    pub index: usize,
    pub reason: String,
}

fn unbound_vars<'a>(terms: impl Iterator<Item = &'a Term>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in terms {
        if let Term::Var(v) = t {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    out
}

fn fresh_constant(counter: &mut u64, state: &State) -> String {
    loop {
        let name = format!("_c{counter}");
        *counter += 1;
        if !state.has_constant(&name) {
            return name;
        }
    }
}

/// Enumerates `[0, base)^digits` with the last digit varying fastest.
struct Odometer {
    digits: Vec<usize>,
    base: usize,
    done: bool,
}

impl Odometer {
    fn new(len: usize, base: usize) -> Self {
        Self {
            digits: vec![0; len],
            base,
            done: len > 0 && base == 0,
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.digits.clone();
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.base {
                break;
            }
            self.digits[i] = 0;
        }
        Some(current)
    }
}

/// `s, T ⊨ P_a` and no output constant of `action` already exists.
pub fn action_applicable(state: &State, theory: &Theory, op: &Operator, action: &Action) -> Result<bool, LogicError> {
    if action.inputs.len() != op.inputs.len() || action.outputs.len() != op.outputs.len() {
        return Ok(false);
    }
    let distinct: BTreeSet<&String> = action.outputs.iter().collect();
    if distinct.len() != action.outputs.len()
        || action.outputs.iter().any(|o| action.inputs.contains(o) || state.has_constant(o))
    {
        return Ok(false);
    }
    satisfies_under(state, theory, &op.precondition, &op.grounding(action))
}

/// Applies effects whose conditions hold in the pre-state: deletions first, then additions.
pub fn apply_action(state: &State, theory: &Theory, op: &Operator, action: &Action) -> Result<State, PlanningError> {
    let sub = op.grounding(action);
    let fire = |effects: &[ConditionalEffect]| -> Result<Vec<Literal>, LogicError> {
        let mut lits = Vec::new();
        for e in effects {
            if satisfies_under(state, theory, &e.condition, &sub)? {
                lits.extend(e.literals.iter().map(|l| l.substitute(&sub)));
            }
        }
        Ok(lits)
    };
    let adds = fire(&op.add_effects)?;
    let dels = fire(&op.del_effects)?;
    let next = state
        .remove_literals(&dels)
        .add_literals(adds)?
        .with_constants(action.outputs.iter().cloned());
    Ok(next)
}

/// One applicable decomposition of a node's first task.
pub(crate) enum Expansion<'p> {
    Primitive {
        action: Action,
        state: State,
        bindings: Substitution,
        counter: u64,
    },
    Method {
        method: &'p Method,
        sub: Substitution,
        bindings: Substitution,
        counter: u64,
    },
}

/// The rest problem: remaining tasks, current state and the plan that led here.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchNode {
    pub remaining: TaskNetwork,
    pub state: State,
    pub plan: Vec<Action>,
    /// Bindings for variables of the initial network.
    pub bindings: Substitution,
    pub fresh_counter: u64,
}

impl SearchNode {
    pub fn is_goal(&self) -> bool {
        self.remaining.is_empty()
    }
}
