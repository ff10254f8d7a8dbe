#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svcplan_core::composition::{Composition, Source, Step, Target};
use svcplan_gsm::value::{Arguments, Value};

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Number,
    Handle,
}

fn stat(endpoint: &str, service: &str, operation: &str, inputs: &[(&str, Source)]) -> Step {
    Step {
        operation: operation.into(),
        target: Target::Static {
            endpoint: endpoint.into(),
            service: service.into(),
        },
        inputs: inputs.iter().map(|(k, s)| (k.to_string(), s.clone())).collect(),
        output: Some("r".into()),
    }
}

fn inst(handle: usize, operation: &str, inputs: &[(&str, Source)]) -> Step {
    Step {
        operation: operation.into(),
        target: Target::Instance {
            service: "accumulator".into(),
            handle: Source::Step(handle),
        },
        inputs: inputs.iter().map(|(k, s)| (k.to_string(), s.clone())).collect(),
        output: Some("r".into()),
    }
}

/// A random sequential composition over the echo, arith and accumulator test
/// services, spread over `endpoints`, ending in a numeric result; plus its query
/// inputs.
pub fn random_composition(seed: u64, endpoints: &[&str], max_steps: usize) -> (Composition, Arguments) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Arguments = ["a", "b", "c"]
        .iter()
        .map(|n| (n.to_string(), Value::Number(rng.gen_range(-9..=9) as f64)))
        .collect();
    let mut kinds: Vec<Kind> = Vec::new();
    let mut steps = Vec::new();
    let len = rng.gen_range(1..=max_steps);
    while steps.len() < len {
        let numbers: Vec<Source> = ["a", "b", "c"]
            .iter()
            .map(|n| Source::Query(n.to_string()))
            .chain(kinds.iter().enumerate().filter(|(_, k)| **k == Kind::Number).map(|(i, _)| Source::Step(i)))
            .collect();
        let handles: Vec<usize> = kinds.iter().enumerate().filter(|(_, k)| **k == Kind::Handle).map(|(i, _)| i).collect();
        let num = |rng: &mut ChaCha8Rng| numbers.choose(rng).unwrap().clone();
        let ep = *endpoints.choose(&mut rng).unwrap();
        let (step, kind) = match rng.gen_range(0..7) {
            0..=2 => {
                let op = ["add", "sub", "mul"][rng.gen_range(0..3)];
                let (a, b) = (num(&mut rng), num(&mut rng));
                (stat(ep, "arith", op, &[("a", a), ("b", b)]), Kind::Number)
            }
            3 => {
                let op = ["neg", "echo"][rng.gen_range(0..2)];
                let service = if op == "neg" { "arith" } else { "echo" };
                (stat(ep, service, op, &[("x", num(&mut rng))]), Kind::Number)
            }
            4 => {
                let start = if rng.gen_bool(0.5) { vec![("start", num(&mut rng))] } else { vec![] };
                (stat(ep, "accumulator", "new", &start), Kind::Handle)
            }
            _ if !handles.is_empty() => {
                let h = *handles.choose(&mut rng).unwrap();
                if rng.gen_bool(0.7) {
                    (inst(h, "add", &[("x", num(&mut rng))]), Kind::Number)
                } else {
                    (inst(h, "total", &[]), Kind::Number)
                }
            }
            _ => continue,
        };
        steps.push(step);
        kinds.push(kind);
    }
    if kinds.last() == Some(&Kind::Handle) {
        steps.push(inst(kinds.len() - 1, "total", &[]));
    }
    (Composition::new(steps), inputs)
}

pub fn number_args(pairs: &[(&str, f64)]) -> Arguments {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), Value::Number(*v)))
        .collect::<BTreeMap<_, _>>()
}
