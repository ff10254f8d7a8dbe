//! Terms, literals, formulas, states and theories.
//!
//! States are open-world: a ground atom can be known true (positive literal present),
//! known false (negative literal present) or unknown. Formulas are evaluated with
//! three-valued (Kleene) connectives and a formula is satisfied only when it evaluates
//! to true, so neither `(p a)` nor `(not (p a))` holds when the state says nothing
//! about `p(a)`.
//!
//! Variables are written with a leading `?` in all textual formats.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Bound;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::ParseError;
use crate::sexpr::{self, Sexpr};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    /// Stored without the `?` marker.
    Var(String),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    /// `?x` becomes a variable, anything else a constant.
    pub fn parse(token: &str) -> Result<Self, ParseError> {
        match token.strip_prefix('?') {
            Some("") => Err(ParseError::new(token, "empty variable name")),
            Some(v) => Ok(Term::Var(v.to_string())),
            None if token.is_empty() => Err(ParseError::new(token, "empty constant name")),
            None => Ok(Term::Const(token.to_string())),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub positive: bool,
}

impl Literal {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>, positive: bool) -> Self {
        Self {
            predicate: predicate.into(),
            args,
            positive,
        }
    }

    /// Positive ground literal from constant names.
    pub fn fact<S: AsRef<str>>(predicate: &str, args: &[S]) -> Self {
        Self::new(
            predicate,
            args.iter().map(|a| Term::constant(a.as_ref())).collect(),
            true,
        )
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn negated(&self) -> Self {
        Self {
            positive: !self.positive,
            ..self.clone()
        }
    }

    /// Accepts `(p a ?x)` and `(not (p a ?x))`.
    pub fn parse(input: &str) -> Result<Self, ParseError> {
        Self::from_sexpr(&sexpr::parse(input)?, input)
    }

    fn from_sexpr(expr: &Sexpr, src: &str) -> Result<Self, ParseError> {
        let items = expr
            .as_list()
            .ok_or_else(|| ParseError::new(src, "literal must be a list"))?;
        match items.first().and_then(Sexpr::as_atom) {
            Some("not") => {
                if items.len() != 2 {
                    return Err(ParseError::new(src, "`not` takes one literal"));
                }
                Ok(Self::from_sexpr(&items[1], src)?.negated())
            }
            Some(pred) if !is_reserved(pred) => {
                let args = items[1..]
                    .iter()
                    .map(|a| {
                        a.as_atom()
                            .ok_or_else(|| ParseError::new(src, "literal arguments must be atoms"))
                            .and_then(Term::parse)
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Self::new(pred, args, true))
            }
            _ => Err(ParseError::new(src, "expected a predicate name")),
        }
    }

    pub fn substitute(&self, sub: &Substitution) -> Self {
        Self {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| sub.apply_term(t)).collect(),
            positive: self.positive,
        }
    }

    fn atom_string(&self) -> String {
        let mut s = format!("({}", self.predicate);
        for a in &self.args {
            s.push(' ');
            s.push_str(&a.to_string());
        }
        s.push(')');
        s
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            f.write_str(&self.atom_string())
        } else {
            write!(f, "(not {})", self.atom_string())
        }
    }
}

fn is_reserved(head: &str) -> bool {
    matches!(head, "and" | "or" | "not" | "exists")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Literal(Literal),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    /// Variables (without `?`) bound over the state's constants.
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn truth() -> Self {
        Formula::And(Vec::new())
    }

    pub fn parse(input: &str) -> Result<Self, ParseError> {
        Self::from_sexpr(&sexpr::parse(input)?, input)
    }

    fn from_sexpr(expr: &Sexpr, src: &str) -> Result<Self, ParseError> {
        let items = expr
            .as_list()
            .ok_or_else(|| ParseError::new(src, "formula must be a list"))?;
        let sub = |items: &[Sexpr]| -> Result<Vec<Formula>, ParseError> {
            items.iter().map(|i| Self::from_sexpr(i, src)).collect()
        };
        match items.first().and_then(Sexpr::as_atom) {
            Some("and") => Ok(Formula::And(sub(&items[1..])?)),
            Some("or") => Ok(Formula::Or(sub(&items[1..])?)),
            Some("not") => {
                if items.len() != 2 {
                    return Err(ParseError::new(src, "`not` takes one formula"));
                }
                Ok(match Self::from_sexpr(&items[1], src)? {
                    Formula::Literal(l) => Formula::Literal(l.negated()),
                    other => Formula::Not(Box::new(other)),
                })
            }
            Some("exists") => {
                if items.len() != 3 {
                    return Err(ParseError::new(src, "`exists` takes a variable list and a body"));
                }
                let vars = items[1]
                    .as_list()
                    .ok_or_else(|| ParseError::new(src, "`exists` expects a variable list"))?
                    .iter()
                    .map(|v| match v.as_atom().map(Term::parse) {
                        Some(Ok(Term::Var(name))) => Ok(name),
                        _ => Err(ParseError::new(src, "quantified names must be variables")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Formula::Exists(vars, Box::new(Self::from_sexpr(&items[2], src)?)))
            }
            Some(_) => Ok(Formula::Literal(Literal::from_sexpr(expr, src)?)),
            None => Err(ParseError::new(src, "expected an operator or predicate")),
        }
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Formula::Literal(l) => {
                for t in &l.args {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) && !out.contains(v) {
                            out.push(v.clone());
                        }
                    }
                }
            }
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::Exists(vars, body) => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Predicates used with their arities, in visiting order.
    pub fn predicates(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit_literals(&mut |l| out.push((l.predicate.clone(), l.args.len())));
        out
    }

    fn visit_literals(&self, f: &mut impl FnMut(&Literal)) {
        match self {
            Formula::Literal(l) => f(l),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|x| x.visit_literals(f)),
            Formula::Not(x) | Formula::Exists(_, x) => x.visit_literals(f),
        }
    }

    /// Replaces free variables only; quantified variables shadow the substitution.
    pub fn substitute(&self, sub: &Substitution) -> Self {
        match self {
            Formula::Literal(l) => Formula::Literal(l.substitute(sub)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(sub)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute(sub)).collect()),
            Formula::Not(f) => Formula::Not(Box::new(f.substitute(sub))),
            Formula::Exists(vars, body) => {
                let inner = sub.without(vars);
                Formula::Exists(vars.clone(), Box::new(body.substitute(&inner)))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, fs: &[Formula]| {
            write!(f, "({head}")?;
            for x in fs {
                write!(f, " {x}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::Literal(l) => write!(f, "{l}"),
            Formula::And(fs) => list(f, "and", fs),
            Formula::Or(fs) => list(f, "or", fs),
            Formula::Not(x) => write!(f, "(not {x})"),
            Formula::Exists(vars, body) => {
                let vs: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
                write!(f, "(exists ({}) {body})", vs.join(" "))
            }
        }
    }
}

/// Variable → constant bindings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    bindings: BTreeMap<String, String>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: impl Into<String>, constant: impl Into<String>) {
        self.bindings.insert(var.into(), constant.into());
    }

    /// Like [`bind`](Self::bind), reusing the existing entry's buffers.
    pub(crate) fn rebind(&mut self, var: &str, constant: &str) {
        match self.bindings.get_mut(var) {
            Some(c) => c.replace_range(.., constant),
            None => {
                self.bindings.insert(var.to_string(), constant.to_string());
            }
        }
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.bindings.get(var).map(String::as_str)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.bindings.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn apply_term(&self, term: &Term) -> Term {
        match term {
            Term::Var(v) => match self.bindings.get(v) {
                Some(c) => Term::Const(c.clone()),
                None => term.clone(),
            },
            Term::Const(_) => term.clone(),
        }
    }

    fn without(&self, vars: &[String]) -> Self {
        let mut out = self.clone();
        for v in vars {
            out.bindings.remove(v);
        }
        out
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self {
            bindings: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("state would contain both {0} and its negation")]
    Contradiction(Literal),
    #[error("state literals must be ground, got {0}")]
    NonGround(Literal),
}

/// A set of ground literals plus the constants known to exist. Both sets are
/// shared between clones until one of them changes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct State {
    literals: Arc<BTreeSet<Arc<Literal>>>,
    constants: Arc<BTreeSet<String>>,
}

impl State {
    /// Constants mentioned by `literals` are registered alongside `constants`.
    pub fn new(
        literals: impl IntoIterator<Item = Literal>,
        constants: impl IntoIterator<Item = String>,
    ) -> Result<Self, StateError> {
        let mut constants: BTreeSet<String> = constants.into_iter().collect();
        let lits: Vec<Literal> = literals.into_iter().collect();
        for l in &lits {
            for t in &l.args {
                if let Term::Const(c) = t {
                    constants.insert(c.clone());
                }
            }
        }
        let empty = State {
            literals: Arc::default(),
            constants: Arc::new(constants),
        };
        empty.add_literals(lits)
    }

    /// In literal order.
    pub fn literals(&self) -> impl ExactSizeIterator<Item = &Literal> + '_ {
        self.literals.iter().map(|l| &**l)
    }

    pub fn constants(&self) -> &BTreeSet<String> {
        &self.constants
    }

    pub fn contains(&self, lit: &Literal) -> bool {
        self.literals.contains(lit)
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }

    pub fn with_constants(mut self, names: impl IntoIterator<Item = String>) -> Self {
        for n in names {
            if !self.constants.contains(&n) {
                Arc::make_mut(&mut self.constants).insert(n);
            }
        }
        self
    }

    pub fn add_literals(
        &self,
        lits: impl IntoIterator<Item = Literal>,
    ) -> Result<State, StateError> {
        let mut next = self.clone();
        let lits: Vec<Literal> = lits.into_iter().collect();
        for l in &lits {
            if !l.is_ground() {
                return Err(StateError::NonGround(l.clone()));
            }
        }
        for l in lits {
            if next.literals.contains(&l.negated()) {
                return Err(StateError::Contradiction(l));
            }
            if !next.literals.contains(&l) {
                Arc::make_mut(&mut next.literals).insert(Arc::new(l));
            }
        }
        Ok(next)
    }

    pub fn remove_literals<'a>(&self, lits: impl IntoIterator<Item = &'a Literal>) -> State {
        let mut next = self.clone();
        for l in lits {
            if next.literals.contains(l) {
                Arc::make_mut(&mut next.literals).remove(l);
            }
        }
        next
    }
}

impl State {
    /// Truth of the ground atom `(predicate args..)`.
    fn truth_of(&self, predicate: &str, args: &[&str]) -> Truth {
        let probe = Probe { predicate, args };
        // `(not p)` orders right before `p`, so one range scan finds either
        let from: &dyn AtomKey = &probe;
        let mut truth = Truth::Unknown;
        for l in self.literals.range::<dyn AtomKey, _>((Bound::Included(from), Bound::Unbounded)).take(2) {
            if l.predicate != predicate || l.args.len() != args.len() || l.args.iter().zip(args).any(|(t, a)| !matches!(t, Term::Const(c) if c == a)) {
                break;
            }
            truth = Truth::from_bool(l.positive);
        }
        truth
    }
}

/// Lets the literal set be searched without allocating a [`Literal`]; orders
/// exactly like `Literal`'s derived `Ord` on ground literals.
trait AtomKey {
    fn predicate(&self) -> &str;
    fn arity(&self) -> usize;
    fn arg(&self, i: usize) -> (u8, &str);
    fn positive(&self) -> bool;
}

impl AtomKey for Literal {
    fn predicate(&self) -> &str {
        &self.predicate
    }

    fn arity(&self) -> usize {
        self.args.len()
    }

    fn arg(&self, i: usize) -> (u8, &str) {
        match &self.args[i] {
            Term::Const(c) => (0, c),
            Term::Var(v) => (1, v),
        }
    }

    fn positive(&self) -> bool {
        self.positive
    }
}

/// The negative literal over a ground atom.
struct Probe<'s> {
    predicate: &'s str,
    args: &'s [&'s str],
}

impl AtomKey for Probe<'_> {
    fn predicate(&self) -> &str {
        self.predicate
    }

    fn arity(&self) -> usize {
        self.args.len()
    }

    fn arg(&self, i: usize) -> (u8, &str) {
        (0, self.args[i])
    }

    fn positive(&self) -> bool {
        false
    }
}

impl Ord for dyn AtomKey + '_ {
    fn cmp(&self, other: &Self) -> Ordering {
        self.predicate().cmp(other.predicate()).then_with(|| {
            let n = self.arity().min(other.arity());
            (0..n)
                .map(|i| self.arg(i).cmp(&other.arg(i)))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| self.arity().cmp(&other.arity()))
                .then_with(|| self.positive().cmp(&other.positive()))
        })
    }
}

impl PartialOrd for dyn AtomKey + '_ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for dyn AtomKey + '_ {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for dyn AtomKey + '_ {}

impl<'a> Borrow<dyn AtomKey + 'a> for Arc<Literal> {
    fn borrow(&self) -> &(dyn AtomKey + 'a) {
        &**self
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lits: Vec<String> = self.literals.iter().map(|l| l.to_string()).collect();
        write!(f, "{{{}}}", lits.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("interpreted predicate `{predicate}` failed: {reason}")]
pub struct TheoryError {
    pub predicate: String,
    pub reason: String,
}

type Decider = Arc<dyn Fn(&Theory, &[&str]) -> Result<bool, TheoryError> + Send + Sync>;

#[derive(Clone)]
struct Interpreted {
    arity: usize,
    decide: Decider,
}

/// Interpreted predicates and named constant sets.
#[derive(Clone, Default)]
pub struct Theory {
    predicates: HashMap<String, Interpreted>,
    sets: BTreeMap<String, BTreeSet<String>>,
}

impl fmt::Debug for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.predicates.keys().collect();
        names.sort();
        f.debug_struct("Theory")
            .field("predicates", &names)
            .field("sets", &self.sets)
            .finish()
    }
}

/// Integers are encoded as constants `n<k>`, e.g. `n5` or `n-2`.
pub fn decode_integer(constant: &str) -> Option<i64> {
    constant.strip_prefix('n')?.parse().ok()
}

pub fn encode_integer(value: i64) -> String {
    format!("n{value}")
}

impl Theory {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `lt`, `le`, `eq` over encoded integers and `member` over named sets.
    pub fn standard() -> Self {
        let mut t = Self::empty();
        for name in Self::builtin_names() {
            t.enable_builtin(name).expect("builtin");
        }
        t
    }

    pub fn builtin_names() -> [&'static str; 4] {
        ["lt", "le", "eq", "member"]
    }

    pub fn enable_builtin(&mut self, name: &str) -> Result<(), TheoryError> {
        fn cmp(f: fn(i64, i64) -> bool) -> Decider {
            Arc::new(move |_, args: &[&str]| {
                Ok(match (decode_integer(args[0]), decode_integer(args[1])) {
                    (Some(a), Some(b)) => f(a, b),
                    _ => false,
                })
            })
        }
        let decide: Decider = match name {
            "lt" => cmp(|a, b| a < b),
            "le" => cmp(|a, b| a <= b),
            "eq" => cmp(|a, b| a == b),
            "member" => Arc::new(|theory: &Theory, args: &[&str]| {
                Ok(theory
                    .sets
                    .get(args[1])
                    .is_some_and(|members| members.contains(args[0])))
            }),
            other => {
                return Err(TheoryError {
                    predicate: other.to_string(),
                    reason: "no such built-in predicate".into(),
                })
            }
        };
        self.predicates
            .insert(name.to_string(), Interpreted { arity: 2, decide });
        Ok(())
    }

    pub fn define_set(&mut self, name: impl Into<String>, members: impl IntoIterator<Item = String>) {
        self.sets.insert(name.into(), members.into_iter().collect());
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        arity: usize,
        decide: impl Fn(&[&str]) -> Result<bool, TheoryError> + Send + Sync + 'static,
    ) {
        self.predicates.insert(
            name.into(),
            Interpreted {
                arity,
                decide: Arc::new(move |_, args| decide(args)),
            },
        );
    }

    pub fn interprets(&self, predicate: &str) -> bool {
        self.predicates.contains_key(predicate)
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.predicates.get(predicate).map(|p| p.arity)
    }

    pub fn sets(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.sets
    }

    fn decide(&self, predicate: &str, args: &[&str]) -> Result<bool, LogicError> {
        let p = &self.predicates[predicate];
        if p.arity != args.len() {
            return Err(LogicError::Arity {
                predicate: predicate.to_string(),
                expected: p.arity,
                found: args.len(),
            });
        }
        Ok((p.decide)(self, args)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("predicate `{predicate}` expects {expected} arguments, got {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("variable ?{0} is not bound")]
    Unbound(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn not(self) -> Self {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// `s, T ⊨ formula`. The formula must be ground up to its own quantifiers.
pub fn satisfies(state: &State, theory: &Theory, formula: &Formula) -> Result<bool, LogicError> {
    satisfies_under(state, theory, formula, &Substitution::new())
}

/// `s, T ⊨ formula·sub`, without building the substituted formula.
pub fn satisfies_under(state: &State, theory: &Theory, formula: &Formula, sub: &Substitution) -> Result<bool, LogicError> {
    let mut env = Vec::new();
    Ok(evaluate(state, theory, formula, sub, &mut env)? == Truth::True)
}

fn evaluate<'a>(
    state: &'a State,
    theory: &Theory,
    formula: &'a Formula,
    sub: &'a Substitution,
    env: &mut Vec<(&'a str, &'a str)>,
) -> Result<Truth, LogicError> {
    match formula {
        Formula::Literal(lit) => {
            let mut args: Vec<&str> = Vec::with_capacity(lit.args.len());
            for t in &lit.args {
                match t {
                    Term::Const(c) => args.push(c),
                    Term::Var(v) => match env.iter().rev().find(|(name, _)| name == v) {
                        Some((_, c)) => args.push(c),
                        None => match sub.get(v) {
                            Some(c) => args.push(c),
                            None => return Err(LogicError::Unbound(v.clone())),
                        },
                    },
                }
            }
            let truth = if theory.interprets(&lit.predicate) {
                Truth::from_bool(theory.decide(&lit.predicate, &args)?)
            } else {
                state.truth_of(&lit.predicate, &args)
            };
            Ok(if lit.positive { truth } else { truth.not() })
        }
        Formula::And(fs) => {
            let mut acc = Truth::True;
            for f in fs {
                match evaluate(state, theory, f, sub, env)? {
                    Truth::False => return Ok(Truth::False),
                    Truth::Unknown => acc = Truth::Unknown,
                    Truth::True => {}
                }
            }
            Ok(acc)
        }
        Formula::Or(fs) => {
            let mut acc = Truth::False;
            for f in fs {
                match evaluate(state, theory, f, sub, env)? {
                    Truth::True => return Ok(Truth::True),
                    Truth::Unknown => acc = Truth::Unknown,
                    Truth::False => {}
                }
            }
            Ok(acc)
        }
        Formula::Not(f) => Ok(evaluate(state, theory, f, sub, env)?.not()),
        Formula::Exists(vars, body) => exists(state, theory, vars, body, sub, env),
    }
}

fn exists<'a>(
    state: &'a State,
    theory: &Theory,
    vars: &'a [String],
    body: &'a Formula,
    sub: &'a Substitution,
    env: &mut Vec<(&'a str, &'a str)>,
) -> Result<Truth, LogicError> {
    let Some((first, rest)) = vars.split_first() else {
        return evaluate(state, theory, body, sub, env);
    };
    let mut acc = Truth::False;
    for c in state.constants.iter() {
        env.push((first.as_str(), c.as_str()));
        let r = exists(state, theory, rest, body, sub, env);
        env.pop();
        match r? {
            Truth::True => return Ok(Truth::True),
            Truth::Unknown => acc = Truth::Unknown,
            Truth::False => {}
        }
    }
    Ok(acc)
}
