mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use svcplan_automl::dataset::{stratified_split, Dataset, SplitSpec};
use svcplan_automl::learners::{Gnb, Knn1, Knn3, Scaler, Stump};
use svcplan_automl::objective::data_arguments;
use svcplan_gsm::value::{Arguments, Value};
use svcplan_gsm::Client;

use common::{brute_stump, gaussian_nb, gsm, iris, knn_vote, reference_predictions, secondary_gsm, synthetic};

fn dataset(rows: Vec<(Vec<f64>, u8)>) -> Dataset {
    Dataset {
        name: "p".into(),
        attributes: (0..rows[0].0.len()).map(|j| format!("x{j}")).collect(),
        features: rows.iter().map(|(r, _)| r.clone()).collect(),
        labels: rows.iter().map(|(_, l)| format!("l{l}")).collect(),
    }
}

fn rows() -> impl Strategy<Value = Vec<(Vec<f64>, u8)>> {
    (1usize..4).prop_flat_map(|d| {
        prop::collection::vec(
            (prop::collection::vec((-4i32..4).prop_map(|v| v as f64 / 2.0), d), 0u8..3),
            2..25,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stump_matches_brute_force(rows in rows()) {
        let ds = dataset(rows);
        let mut s = Stump::default();
        s.train(&ds.features, &ds.labels).unwrap();
        let model = s.model.clone().unwrap();
        match brute_stump(&ds.features, &ds.labels) {
            Some((j, t, l, r, correct)) => {
                prop_assert_eq!(model.attribute, Some(j));
                prop_assert_eq!(model.threshold, t);
                prop_assert_eq!((&model.left, &model.right), (&l, &r));
                prop_assert_eq!(model.training_accuracy, correct as f64 / ds.len() as f64);
            }
            None => prop_assert_eq!(model.attribute, None),
        }
    }

    #[test]
    fn in_process_learners_match_reference(rows in rows()) {
        let ds = dataset(rows);
        let (train, validation) = (ds.subset(&(0..ds.len() / 2 + 1).collect::<Vec<_>>()), ds.clone());
        let mut k = Knn1::default();
        k.train(&train.features, &train.labels).unwrap();
        prop_assert_eq!(k.predict(&validation.features).unwrap(), reference_predictions("identity", "knn1", &train, &validation));
        // scaled training data stays within the unit cube
        let mut sc = Scaler::default();
        sc.fit(&train.features).unwrap();
        for row in sc.transform(&train.features).unwrap() {
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn split_invariants(seed in any::<u64>(), n in 10usize..120, classes in 2usize..5) {
        let ds = synthetic(seed, n, 2, classes);
        let spec = SplitSpec::new(seed);
        let s = stratified_split(&ds, &spec).unwrap();
        prop_assert_eq!(&s, &stratified_split(&ds, &spec).unwrap());
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!s.train.is_empty() && !s.validation.is_empty());
        let (train, validation) = s.apply(&ds);
        for (class, count) in ds.classes() {
            let in_train = train.labels.iter().filter(|l| *l == class).count();
            prop_assert!((in_train as f64 - 0.7 * count as f64).abs() <= 1.0, "{} of {}", in_train, count);
            prop_assert!(validation.labels.iter().any(|l| l == class));
        }
    }
}

#[test]
fn iris_shape() {
    let ds = iris();
    assert_eq!((ds.len(), ds.dimension(), ds.classes().len()), (150, 4, 3));
    let s = stratified_split(&ds, &SplitSpec::new(0)).unwrap();
    assert_eq!((s.train.len(), s.validation.len()), (105, 45));
}

#[test]
fn served_predictions_equal_in_process_ones() {
    let (server, _dir) = gsm();
    let client = Client::new();
    let ds = iris();
    let (train, validation) = stratified_split(&ds, &SplitSpec::new(4)).unwrap().apply(&ds);
    for clf in ["knn1", "majority", "stump"] {
        let h = client.create(&format!("{}/{clf}", server.url()), Arguments::new()).unwrap();
        client.invoke(&h, "train", data_arguments(&train)).unwrap();
        let x = BTreeMap::from([("X".to_string(), Value::Matrix(validation.features.clone()))]);
        let served = client.invoke(&h, "predict", x).unwrap();
        assert_eq!(
            served,
            Value::Labels(reference_predictions("identity", clf, &train, &validation)),
            "{clf}"
        );
    }
}

#[test]
fn service_errors() {
    let (server, _dir) = gsm();
    let client = Client::new();
    let h = client.create(&format!("{}/knn1", server.url()), Arguments::new()).unwrap();
    let x = |rows: Vec<Vec<f64>>| BTreeMap::from([("X".to_string(), Value::Matrix(rows))]);
    let err = client.invoke(&h, "predict", x(vec![vec![1.0]])).unwrap_err();
    assert_eq!(err.status(), Some(409));
    let mut args = x(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
    args.insert("y".into(), Value::Labels(vec!["a".into(), "b".into()]));
    client.invoke(&h, "train", args).unwrap();
    let err = client.invoke(&h, "predict", x(vec![vec![1.0]])).unwrap_err();
    assert_eq!(err.status(), Some(400));
    let id = client
        .invoke(&format!("{}/identity", server.url()), "transform", x(vec![vec![7.0]]))
        .unwrap();
    assert_eq!(id, Value::Matrix(vec![vec![7.0]]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn secondary_learners_match_reference(seed in any::<u64>(), n in 4usize..40, classes in 2usize..4) {
        let ds = synthetic(seed, n, 3, classes);
        let (train, validation) = (ds.subset(&(0..n).step_by(2).collect::<Vec<_>>()), ds.subset(&(1..n).step_by(2).collect::<Vec<_>>()));
        let mut g = Gnb::default();
        g.train(&train.features, &train.labels).unwrap();
        prop_assert_eq!(g.predict(&validation.features).unwrap(), gaussian_nb(&train.features, &train.labels, &validation.features));
        let mut k = Knn3::default();
        k.train(&train.features, &train.labels).unwrap();
        prop_assert_eq!(k.predict(&validation.features).unwrap(), knn_vote(&train.features, &train.labels, &validation.features, 3));
    }
}

#[test]
fn secondary_gsm_serves_only_its_learners() {
    let (server, _dir) = secondary_gsm();
    let client = Client::new();
    let ds = iris();
    let (train, validation) = stratified_split(&ds, &SplitSpec::new(9)).unwrap().apply(&ds);
    let h = client.create(&format!("{}/gnb", server.url()), Arguments::new()).unwrap();
    assert!(h.ends_with("/gnb/0"));
    client.invoke(&h, "train", data_arguments(&train)).unwrap();
    let x = BTreeMap::from([("X".to_string(), Value::Matrix(validation.features.clone()))]);
    let served = client.invoke(&h, "predict", x).unwrap();
    assert_eq!(served, Value::Labels(gaussian_nb(&train.features, &train.labels, &validation.features)));
    let err = client.create(&format!("{}/knn1", server.url()), Arguments::new()).unwrap_err();
    assert_eq!(err.status(), Some(404));
}
