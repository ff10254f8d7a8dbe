//! Random toy HTN domains, a synthetic objective and a brute-force reference
//! decomposer. Shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svcplan_core::htn::{Action, ConditionalEffect, HtnProblem, Method, Operator, Task, TaskNetwork};
use svcplan_core::logic::{satisfies, Formula, Literal, State, Substitution, Term, Theory};

fn f(s: &str) -> Formula {
    Formula::parse(s).unwrap()
}

fn lit(s: &str) -> Literal {
    Literal::parse(s).unwrap()
}

fn method(name: String, task: &str, inputs: &[&str], outputs: &[&str], pre: &str, body: &[String]) -> Method {
    Method {
        name,
        task: Task::parse(task).unwrap(),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        precondition: f(pre),
        network: TaskNetwork::parse(body).unwrap(),
    }
}

/// Domains with nesting, enumerated method inputs, fresh outputs, a toggled flag
/// with dead ends, and conditional effects.
struct General {
    rng: ChaCha8Rng,
    operators: Vec<Operator>,
    methods: Vec<Method>,
    constants: Vec<String>,
    tasks: usize,
}

impl General {
    fn pre(&mut self, var: Option<&str>) -> String {
        match (self.rng.gen_range(0..8), var) {
            (0, _) => "(flag)".into(),
            (1, _) => "(not (flag))".into(),
            (2, Some(v)) => format!("(ok ?{v})"),
            (3, Some(v)) => format!("(exists (?z) (and (ok ?z) (not (seen ?z)) (ok ?{v})))"),
            _ => "(and)".into(),
        }
    }

    fn primitive(&mut self, input: Option<&str>) -> String {
        let name = format!("p{}", self.operators.len());
        let inputs: Vec<&str> = input.map(|_| vec!["i"]).unwrap_or_default();
        let mut op = Operator::new(&name, &inputs, &[]).with_precondition(f(&self.pre(input.map(|_| "i"))));
        match self.rng.gen_range(0..4) {
            0 => {
                op = op
                    .with_add(ConditionalEffect::unconditional(vec![lit("(flag)")]))
                    .with_del(ConditionalEffect::unconditional(vec![lit("(not (flag))")]))
            }
            1 => {
                op = op
                    .with_add(ConditionalEffect::unconditional(vec![lit("(not (flag))")]))
                    .with_del(ConditionalEffect::unconditional(vec![lit("(flag)")]))
            }
            _ => {}
        }
        if input.is_some() && self.rng.gen_bool(0.5) {
            op = op.with_add(ConditionalEffect {
                condition: f("(ok ?i)"),
                literals: vec![lit("(seen ?i)")],
            });
        }
        self.operators.push(op);
        match input {
            Some(v) => format!("({name} {v})"),
            None => format!("({name})"),
        }
    }

    /// Returns the task name; arity is 0 or 1.
    fn compound(&mut self, depth: usize) -> (String, bool) {
        let name = format!("t{}", self.tasks);
        self.tasks += 1;
        let unary = self.rng.gen_bool(0.4);
        let pattern = if unary { format!("({name} ?a)") } else { format!("({name})") };
        for j in 0..self.rng.gen_range(1..=4) {
            let mut inputs: Vec<&str> = Vec::new();
            let mut vars: Vec<&str> = if unary { vec!["?a"] } else { vec![] };
            if self.rng.gen_bool(0.4) {
                inputs.push("x");
                vars.push("?x");
            }
            let pre = self.pre(inputs.first().copied());
            let mut body = Vec::new();
            let mut outputs: Vec<&str> = Vec::new();
            if self.rng.gen_bool(0.2) {
                // produce a fresh object, then consume it
                let mk = format!("mk{}", self.operators.len());
                self.operators.push(Operator::new(&mk, &[], &["o"]).with_add(ConditionalEffect::unconditional(vec![lit("(made ?o)")])));
                let use_ = format!("use{}", self.operators.len());
                self.operators.push(Operator::new(&use_, &["o"], &[]).with_precondition(f("(made ?o)")));
                body.push(format!("({mk} ?o)"));
                body.push(format!("({use_} ?o)"));
                outputs.push("o");
            }
            for _ in 0..self.rng.gen_range(1..=2) {
                let arg = if vars.is_empty() || self.rng.gen_bool(0.3) {
                    if self.rng.gen_bool(0.5) {
                        None
                    } else {
                        Some(self.constants[self.rng.gen_range(0..self.constants.len())].clone())
                    }
                } else {
                    Some(vars[self.rng.gen_range(0..vars.len())].to_string())
                };
                if depth < 2 && self.rng.gen_bool(0.35) {
                    let (sub, sub_unary) = self.compound(depth + 1);
                    body.push(match (sub_unary, arg) {
                        (true, Some(a)) => format!("({sub} {a})"),
                        (true, None) => format!("({sub} {})", self.constants[0]),
                        (false, _) => format!("({sub})"),
                    });
                } else {
                    let call = self.primitive(arg.as_deref());
                    body.push(call);
                }
            }
            self.methods.push(method(format!("{name}_m{j}"), &pattern, &inputs, &outputs, &pre, &body));
        }
        (name, unary)
    }
}

pub fn general_domain_once(seed: u64) -> HtnProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_constants = rng.gen_range(2..=4);
    let mut g = General {
        rng,
        operators: Vec::new(),
        methods: Vec::new(),
        constants: (0..n_constants).map(|i| format!("k{i}")).collect(),
        tasks: 0,
    };
    let mut network = Vec::new();
    for _ in 0..g.rng.gen_range(1..=3) {
        let (t, unary) = g.compound(0);
        network.push(if unary { format!("({t} k0)") } else { format!("({t})") });
    }
    let mut facts = vec![if g.rng.gen_bool(0.5) { lit("(flag)") } else { lit("(not (flag))") }];
    for c in g.constants.clone() {
        if g.rng.gen_bool(0.6) {
            facts.push(lit(&format!("(ok {c})")));
        } else {
            facts.push(lit(&format!("(not (ok {c}))")));
        }
        facts.push(lit(&format!("(not (seen {c}))")));
    }
    let state = State::new(facts, g.constants.clone()).unwrap();
    HtnProblem::new(g.operators, g.methods, state, TaskNetwork::parse(&network).unwrap(), Theory::empty()).unwrap()
}

/// A general domain whose goal-plan count lies in `goals`. Seeds are tried in
/// sequence from `seed`; the seed used is returned.
pub fn general_domain(seed: u64, goals: std::ops::RangeInclusive<usize>) -> (u64, HtnProblem) {
    (seed..)
        .map(|s| (s, general_domain_once(s.wrapping_mul(0x9e37_79b9).wrapping_add(17))))
        .find(|(_, p)| matches!(p.enumerate_goals(&p.root(), 20_000), Ok(g) if goals.contains(&g.len())))
        .unwrap()
}

/// Domains in which every decision's branching factor does not depend on earlier
/// choices and no branch dead-ends, so uniform random descent reaches every goal
/// plan beneath a node with equal probability.
pub fn uniform_domain(seed: u64, max_goals: usize) -> HtnProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut operators: Vec<Operator> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    let mut facts: Vec<Literal> = Vec::new();
    let mut constants: BTreeSet<String> = BTreeSet::new();
    let mut leaves = 1usize;
    let mut tasks = 0usize;

    fn build(
        rng: &mut ChaCha8Rng,
        depth: usize,
        leaves: &mut usize,
        max_goals: usize,
        tasks: &mut usize,
        operators: &mut Vec<Operator>,
        methods: &mut Vec<Method>,
        facts: &mut Vec<Literal>,
        constants: &mut BTreeSet<String>,
    ) -> String {
        let n = *tasks;
        *tasks += 1;
        let name = format!("u{n}");
        let tail = if depth < 2 && rng.gen_bool(0.4) {
            Some(build(rng, depth + 1, leaves, max_goals, tasks, operators, methods, facts, constants))
        } else {
            None
        };
        let mut width = rng.gen_range(if depth == 0 { 2 } else { 1 }..=4usize);
        while width > 1 && *leaves * width > max_goals {
            width -= 1;
        }
        *leaves *= width;
        let with_tail = |mut body: Vec<String>| {
            if let Some(t) = &tail {
                body.push(format!("({t})"));
            }
            body
        };
        if width > 1 && rng.gen_bool(0.5) {
            // one method whose input is enumerated over `width` admissible constants
            for i in 0..width {
                let c = format!("v{n}_{i}");
                facts.push(lit(&format!("(opt{n} {c})")));
                constants.insert(c);
            }
            operators.push(Operator::new(format!("q{n}"), &["i"], &[]).with_add(ConditionalEffect::unconditional(vec![lit("(used ?i)")])));
            methods.push(method(
                format!("{name}_pick"),
                &format!("({name})"),
                &["x"],
                &[],
                &format!("(opt{n} ?x)"),
                &with_tail(vec![format!("(q{n} ?x)")]),
            ));
        } else {
            for j in 0..width {
                let op = format!("p{n}_{j}");
                operators.push(Operator::new(&op, &[], &[]));
                methods.push(method(format!("{name}_m{j}"), &format!("({name})"), &[], &[], "(and)", &with_tail(vec![format!("({op})")])));
            }
        }
        name
    }

    let mut network = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let t = build(&mut rng, 0, &mut leaves, max_goals, &mut tasks, &mut operators, &mut methods, &mut facts, &mut constants);
        network.push(format!("({t})"));
    }
    let state = State::new(facts, constants).unwrap();
    HtnProblem::new(operators, methods, state, TaskNetwork::parse(&network).unwrap(), Theory::empty()).unwrap()
}

/// Renames planner-invented constants (`_c*`, `#*`) by order of first appearance.
pub fn canonical_key(plan: &[Action]) -> String {
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let mut rename = |c: &String| -> String {
        if c.starts_with("_c") || c.starts_with('#') {
            let next = format!("${}", names.len());
            names.entry(c.clone()).or_insert(next).clone()
        } else {
            c.clone()
        }
    };
    let mut out = String::new();
    for a in plan {
        out.push('(');
        out.push_str(&a.operator);
        for i in &a.inputs {
            out.push(' ');
            out.push_str(&rename(i));
        }
        for o in &a.outputs {
            out.push_str(" -> ");
            out.push_str(&rename(o));
        }
        out.push(')');
    }
    out
}

/// Deterministic pseudo-random score in [0, 1) of a plan.
pub fn synthetic_score(plan: &[Action]) -> f64 {
    let mut h = DefaultHasher::new();
    canonical_key(plan).hash(&mut h);
    (h.finish() >> 11) as f64 / (1u64 << 53) as f64
}

/// Every goal plan, by naive recursive decomposition. Invented constants are named
/// `#<n>`; compare through [`canonical_key`].
pub fn brute_force_plans(problem: &HtnProblem) -> Vec<Vec<Action>> {
    let mut out = Vec::new();
    let mut fresh = 0usize;
    decompose(
        problem,
        problem.initial_network().tasks.clone(),
        problem.initial_state().clone(),
        Vec::new(),
        &mut fresh,
        &mut out,
    );
    out
}

fn ground(t: &Term) -> String {
    match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => panic!("reference decomposer needs ground tasks, found ?{v}"),
    }
}

fn decompose(
    problem: &HtnProblem,
    tasks: Vec<Task>,
    state: State,
    plan: Vec<Action>,
    fresh: &mut usize,
    out: &mut Vec<Vec<Action>>,
) {
    let Some(task) = tasks.first() else {
        out.push(plan);
        return;
    };
    let rest = &tasks[1..];
    let theory = problem.theory();
    if let Some(op) = problem.operator(&task.name) {
        let inputs: Vec<String> = task.args[..op.inputs.len()].iter().map(ground).collect();
        let outputs: Vec<String> = (0..op.outputs.len())
            .map(|j| match task.args.get(op.inputs.len() + j) {
                Some(t) => ground(t),
                None => {
                    *fresh += 1;
                    format!("#{fresh}")
                }
            })
            .collect();
        if outputs.iter().any(|o| state.has_constant(o)) {
            return;
        }
        let mut sub = Substitution::new();
        for (v, c) in op.inputs.iter().zip(&inputs).chain(op.outputs.iter().zip(&outputs)) {
            sub.bind(v.clone(), c.clone());
        }
        if !satisfies(&state, theory, &op.precondition.substitute(&sub)).unwrap() {
            return;
        }
        let fired = |effects: &[ConditionalEffect]| -> Vec<Literal> {
            effects
                .iter()
                .filter(|e| satisfies(&state, theory, &e.condition.substitute(&sub)).unwrap())
                .flat_map(|e| e.literals.iter().map(|l| l.substitute(&sub)))
                .collect()
        };
        let (adds, dels) = (fired(&op.add_effects), fired(&op.del_effects));
        let next = state.remove_literals(&dels).add_literals(adds).unwrap().with_constants(outputs.clone());
        let mut plan = plan;
        plan.push(Action {
            operator: op.name.clone(),
            inputs,
            outputs,
        });
        decompose(problem, rest.to_vec(), next, plan, fresh, out);
        return;
    }
    let constants: Vec<String> = state.constants().iter().cloned().collect();
    for m in problem.methods_for(&task.name) {
        let mut base = Substitution::new();
        let mut ok = m.task.args.len() == task.args.len();
        for (p, a) in m.task.args.iter().zip(&task.args) {
            let a = ground(a);
            match p {
                Term::Const(c) => ok &= *c == a,
                Term::Var(v) => match base.get(v) {
                    Some(prev) => ok &= prev == a,
                    None => base.bind(v.clone(), a),
                },
            }
        }
        if !ok {
            continue;
        }
        let free: Vec<&String> = m.inputs.iter().filter(|v| !base.contains(v)).collect();
        for combo in cartesian(constants.len(), free.len()) {
            let mut sub = base.clone();
            for (v, &i) in free.iter().zip(&combo) {
                sub.bind((*v).clone(), constants[i].clone());
            }
            for o in &m.outputs {
                *fresh += 1;
                sub.bind(o.clone(), format!("#{fresh}"));
            }
            if !satisfies(&state, theory, &m.precondition.substitute(&sub)).unwrap() {
                continue;
            }
            let mut next: Vec<Task> = m.network.tasks.iter().map(|t| t.substitute(&sub)).collect();
            next.extend(rest.iter().cloned());
            decompose(problem, next, state.clone(), plan.clone(), fresh, out);
        }
    }
}

fn cartesian(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..base).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}
