//! The golden protocol corpus for the secondary GSM (`gnb`, `knn3`).
//!
//! It is recorded from this crate's own GSM serving [`secondary_registry`] on a
//! fresh store, and any other implementation must replay it with the same status
//! codes and equivalent bodies.
//!
//! [`secondary_registry`]: crate::learners::secondary_registry

use std::collections::BTreeMap;

use serde_json::{json, Value as Json};
use svcplan_core::composition::{Composition, Source, Step, Target};
use svcplan_gsm::conformance::{Corpus, Probe, BASE};

pub const GOLDEN: &str = include_str!("../conformance/secondary.json");

pub fn golden() -> Corpus {
    serde_json::from_str(GOLDEN).expect("the shipped corpus parses")
}

fn call(arguments: Json) -> String {
    json!({ "arguments": arguments }).to_string()
}

fn matrix(rows: &[&[f64]]) -> Json {
    json!({ "type": "matrix", "value": rows })
}

fn labels(ls: &[&str]) -> Json {
    json!({ "type": "labels", "value": ls })
}

fn handle(path: &str) -> Json {
    json!({ "type": "handle", "value": format!("{BASE}{path}") })
}

fn train_gnb() -> Json {
    json!({
        "X": matrix(&[&[0.1, 1.5], &[0.3, 1.1], &[0.2, 1.9], &[2.7, 0.4], &[3.1, 0.2], &[2.9, 0.9], &[1.2, 1.2]]),
        "y": labels(&["setosa", "setosa", "setosa", "virginica", "virginica", "virginica", "setosa"]),
    })
}

fn queries() -> Json {
    matrix(&[&[0.0, 1.0], &[3.0, 0.5], &[1.5, 1.0], &[1.9, 0.7], &[-4.0, 7.25]])
}

fn train_knn3() -> Json {
    json!({
        "X": matrix(&[&[0.0], &[1.0], &[2.0], &[4.0], &[4.0], &[7.5]]),
        "y": labels(&["c", "a", "b", "b", "a", "a"]),
    })
}

fn knn3_queries() -> Json {
    // exact distance ties at 0.5 and 4.0, and a three-way vote at 1.0
    matrix(&[&[0.5], &[1.0], &[4.0], &[6.0], &[100.0]])
}

/// Train then predict on the instance passed as `h`, entered at step 0.
fn choreography() -> Composition {
    let on_h = |operation: &str, inputs: &[(&str, Source)], output: Option<&str>| Step {
        operation: operation.into(),
        target: Target::Instance {
            service: "gnb".into(),
            handle: Source::Query("h".into()),
        },
        inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<BTreeMap<_, _>>(),
        output: output.map(str::to_string),
    };
    Composition {
        steps: vec![
            on_h("train", &[("X", Source::Query("X".into())), ("y", Source::Query("y".into()))], None),
            on_h("predict", &[("X", Source::Query("Q".into()))], Some("predicted")),
        ],
    }
}

fn choreography_body(step_index: usize) -> String {
    let mut arguments = train_gnb();
    arguments["h"] = handle("/gnb/1");
    arguments["Q"] = queries();
    json!({ "arguments": arguments, "composition": choreography(), "stepIndex": step_index }).to_string()
}

fn p(name: &str, path: &str, body: impl Into<String>) -> Probe {
    Probe::post(name, path, body)
}

/// The probes, in replay order.
pub fn probes() -> Vec<Probe> {
    let x = |rows: Json| call(json!({ "X": rows }));
    vec![
        p("create gnb with an empty body", "/gnb/new", ""),
        p("create a second gnb", "/gnb/new", call(json!({}))),
        p("create knn3", "/knn3/new", call(json!({}))),
        p("gnb predict before train", "/gnb/0/predict", x(queries())),
        p("knn3 predict before train", "/knn3/0/predict", x(knn3_queries())),
        p("gnb train", "/gnb/0/train", call(train_gnb())),
        p("gnb predict", "/gnb/0/predict", x(queries())),
        p("gnb predict single row", "/gnb/0/predict", x(matrix(&[&[1.3, 1.1]]))),
        p("knn3 train", "/knn3/0/train", call(train_knn3())),
        p("knn3 predict with ties", "/knn3/0/predict", x(knn3_queries())),
        p("gnb predict wrong width", "/gnb/0/predict", x(matrix(&[&[1.0, 2.0, 3.0]]))),
        p("gnb predict empty matrix", "/gnb/0/predict", x(matrix(&[]))),
        p("knn3 train without labels", "/knn3/0/train", x(matrix(&[&[1.0]]))),
        p(
            "knn3 train with a number for labels",
            "/knn3/0/train",
            call(json!({ "X": matrix(&[&[1.0]]), "y": { "type": "number", "value": 3 } })),
        ),
        p(
            "knn3 train ragged matrix",
            "/knn3/0/train",
            call(json!({ "X": matrix(&[&[1.0], &[1.0, 2.0]]), "y": labels(&["a", "b"]) })),
        ),
        p(
            "knn3 train row and label counts differ",
            "/knn3/0/train",
            call(json!({ "X": matrix(&[&[1.0], &[2.0]]), "y": labels(&["a"]) })),
        ),
        p("unknown value type", "/gnb/0/predict", call(json!({ "X": { "type": "tensor", "value": [] } }))),
        p("unknown body field", "/gnb/0/predict", json!({ "arguments": {}, "extra": 1 }).to_string()),
        p("body is not JSON", "/gnb/0/predict", "predict please"),
        p("unknown instance id", "/gnb/99/predict", x(queries())),
        p("unknown instance method", "/gnb/0/fit", x(queries())),
        p("unknown static method", "/gnb/predict", x(queries())),
        p("unknown class", "/svm/new", ""),
        p("root path", "/", ""),
        p("too many segments", "/gnb/0/predict/now", ""),
        p("non-numeric id", "/gnb/x0/predict", ""),
        Probe {
            name: "GET is not allowed".into(),
            method: "GET".into(),
            path: "/gnb/new".into(),
            body: String::new(),
        },
        p("state unchanged by failed calls", "/knn3/0/predict", x(knn3_queries())),
        p("choreographed train and predict", "/gnb/1/train", choreography_body(0)),
        p("choreography entered at the wrong route", "/knn3/0/train", choreography_body(0)),
        p("choreography step out of range", "/gnb/1/train", choreography_body(2)),
        p("choreography result persisted", "/gnb/1/predict", x(queries())),
        p("ids keep increasing", "/knn3/new", ""),
    ]
}
