use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use svcplan_core::composition::{inject_into_template, plan_to_composition};
use svcplan_core::domain_file::{parse_composition, CompositionDomain};
use svcplan_core::htn::{Action, HtnProblem};
use svcplan_core::search::{EvalFailure, PlanEvaluator};
use svcplan_gsm::composed::{self, deploy, Composed};
use svcplan_gsm::server::{start, GsmConfig, RunningGsm};
use svcplan_gsm::service::class;
use svcplan_gsm::testsvc;
use svcplan_gsm::value::{Arguments, Value};
use svcplan_gsm::{Client, Deployment, ObjectiveRoutine, ObjectiveWrapper, StepCount};
use tempfile::TempDir;

const DOMAIN: &str = r#"
[endpoints]
main = "http://unset"

[[services]]
name = "accumulator"
endpoint = "main"
operations = [
  { name = "new", inputs = [], outputs = ["?acc"], static = true },
  { name = "add", inputs = ["?handle", "?x"], outputs = ["?total"] },
  { name = "total", inputs = ["?handle"], outputs = ["?total"] },
]

[[services]]
name = "fail"
endpoint = "main"
operations = [{ name = "fail", inputs = [], outputs = [], static = true }]

[[macros]]
name = "plain"
task = "(setup)"
body = ["(accumulator.new ?acc)"]

[[macros]]
name = "one"
task = "(setup)"
body = ["(accumulator.new ?acc)", "(accumulator.add ?acc one ?t)"]

[[macros]]
name = "two"
task = "(setup)"
body = ["(accumulator.new ?acc)", "(accumulator.add ?acc one ?t)", "(accumulator.add ?acc one ?u)"]

[[macros]]
name = "broken"
task = "(setup)"
body = ["(accumulator.new ?acc)", "(fail.fail)"]

[query]
network = ["(setup)"]
initialFacts = { constants = ["one"] }
objective = { routine = "total" }

[template]
name = "counter"
fields = ["acc"]
[[template.operations.add]]
operation = "add"
field = "acc"
inputs = { x = "query:x" }
[[template.operations.total]]
operation = "total"
field = "acc"
"#;

struct Fixture {
    server: RunningGsm,
    _dir: TempDir,
    domain: CompositionDomain,
    problem: HtnProblem,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let config = GsmConfig {
        port: 0,
        store: dir.path().to_path_buf(),
        ..GsmConfig::default()
    };
    let server = start(&config, testsvc::registry().with(class::<Composed>())).unwrap();
    let overrides = BTreeMap::from([("main".to_string(), server.url().to_string())]);
    let domain = parse_composition(DOMAIN, &overrides).unwrap();
    let problem = domain.problem.translate().unwrap();
    Fixture {
        server,
        _dir: dir,
        domain,
        problem,
    }
}

fn inputs() -> Arguments {
    BTreeMap::from([("one".to_string(), Value::Number(1.0))])
}

fn is_broken(plan: &[Action]) -> bool {
    plan.iter().any(|a| a.operator == "fail.fail")
}

/// Goal plans of the working macros, by length.
fn plans(f: &Fixture) -> BTreeMap<usize, Vec<Action>> {
    let goals = all_plans(f);
    assert_eq!(goals.len(), 4);
    goals.into_iter().filter(|p| !is_broken(p)).map(|p| (p.len(), p)).collect()
}

fn all_plans(f: &Fixture) -> Vec<Vec<Action>> {
    f.problem
        .enumerate_goals(&f.problem.root(), 100)
        .unwrap()
        .into_iter()
        .map(|g| g.plan)
        .collect()
}

fn wrapper(f: &Fixture, routine: Arc<dyn ObjectiveRoutine>) -> ObjectiveWrapper {
    ObjectiveWrapper::new(
        f.problem.clone(),
        f.domain.problem.services.clone(),
        f.domain.template.clone().unwrap(),
        f.server.url(),
        routine,
    )
    .with_inputs(inputs())
}

fn total(d: &Deployment<'_>) -> Result<f64, String> {
    match d.client.invoke(&d.handle, "total", Arguments::new()).map_err(|e| e.to_string())? {
        Value::Number(n) => Ok(n),
        other => Err(format!("total returned {other:?}")),
    }
}

#[test]
fn step_count_matches_direct_count() {
    let f = fixture();
    let w = wrapper(&f, Arc::new(StepCount));
    for plan in all_plans(&f) {
        let direct = plan_to_composition(&plan, &f.problem, &f.domain.problem.services).unwrap().len();
        match w.evaluate(&plan, Duration::from_secs(30)) {
            Ok(score) => assert_eq!(score, direct as f64),
            Err(_) => assert!(is_broken(&plan)),
        }
    }
}

#[test]
fn scores_depend_on_the_injected_constructor_and_repeat() {
    let f = fixture();
    let w = wrapper(&f, Arc::new(total));
    let plans = plans(&f);
    for (len, expected) in [(1, 0.0), (2, 1.0), (3, 2.0)] {
        let plan = &plans[&len];
        assert_eq!(w.evaluate(plan, Duration::from_secs(30)).unwrap(), expected);
        assert_eq!(w.evaluate(plan, Duration::from_secs(30)).unwrap(), expected);
    }
}

#[test]
fn failing_service_is_an_evaluation_failure() {
    let f = fixture();
    let w = wrapper(&f, Arc::new(total));
    let broken = all_plans(&f).into_iter().find(|p| is_broken(p)).unwrap();
    match w.evaluate(&broken, Duration::from_secs(30)) {
        Err(EvalFailure::Failed(m)) => assert!(m.contains("step 1"), "{m}"),
        other => panic!("expected a failure, got {other:?}"),
    }
}

#[test]
fn non_finite_scores_fail() {
    let f = fixture();
    let w = wrapper(&f, Arc::new(|_: &Deployment<'_>| Ok(f64::NAN)));
    let plan = &plans(&f)[&1];
    assert!(matches!(w.evaluate(plan, Duration::from_secs(30)), Err(EvalFailure::Failed(_))));
}

#[test]
fn slow_routines_time_out() {
    let f = fixture();
    let w = wrapper(
        &f,
        Arc::new(|_: &Deployment<'_>| {
            std::thread::sleep(Duration::from_secs(3));
            Ok(1.0)
        }),
    );
    let plan = &plans(&f)[&1];
    let t = Instant::now();
    assert_eq!(w.evaluate(plan, Duration::from_millis(200)), Err(EvalFailure::Timeout));
    assert!(t.elapsed() < Duration::from_secs(1));
}

#[test]
fn composed_service_behaves_per_constructor() {
    let f = fixture();
    let client = Client::new();
    let template = f.domain.template.as_ref().unwrap();
    let plan = &plans(&f)[&3];
    let comp = plan_to_composition(plan, &f.problem, &f.domain.problem.services).unwrap();
    let service = inject_into_template(template, comp).unwrap();
    let handle = deploy(&client, f.server.url(), &service, inputs()).unwrap();
    assert!(handle.starts_with(&format!("{}/{}/", f.server.url(), composed::CLASS)));
    let add = client
        .invoke(&handle, "add", BTreeMap::from([("x".to_string(), Value::Number(10.0))]))
        .unwrap();
    assert_eq!(add, Value::Number(12.0));
    assert_eq!(client.invoke(&handle, "total", Arguments::new()).unwrap(), Value::Number(12.0));
    let err = client.invoke(&handle, "predict", Arguments::new()).unwrap_err();
    assert_eq!(err.status(), Some(404));

    // a second deployment gets fresh instances
    let other = deploy(&client, f.server.url(), &service, inputs()).unwrap();
    assert_ne!(other, handle);
    assert_eq!(client.invoke(&other, "total", Arguments::new()).unwrap(), Value::Number(2.0));
}

#[test]
fn bad_definitions_are_rejected() {
    let f = fixture();
    let args = BTreeMap::from([("definition".to_string(), Value::String("{}".into()))]);
    let err = Client::new()
        .create(&format!("{}/{}", f.server.url(), composed::CLASS), args)
        .unwrap_err();
    assert_eq!(err.status(), Some(400));
}
