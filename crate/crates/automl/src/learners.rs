//! Toy learners and the loss metric, as servicified classes.
//!
//! Preprocessors: `new`, `fit(X)`, `transform(X) -> matrix`.
//! Classifiers: `new`, `train(X, y)`, `predict(X) -> labels`.
//! `metrics.zero_one_loss(predicted, actual) -> number` is static.
//!
//! `gnb` and `knn3` belong to the secondary endpoint; [`secondary_registry`]
//! serves them on their own as a stand-in for the second GSM.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use svcplan_gsm::service::{class, labels_arg, matrix_arg, Context, Registry, ServiceError, Servicified};
use svcplan_gsm::value::{Arguments, Value};

pub type Matrix = [Vec<f64>];

fn width(x: &Matrix) -> Result<usize, ServiceError> {
    match x.first() {
        Some(row) => Ok(row.len()),
        None => Err(ServiceError::BadRequest("empty matrix".into())),
    }
}

fn check_width(x: &Matrix, expected: usize) -> Result<(), ServiceError> {
    match x.iter().find(|r| r.len() != expected) {
        Some(r) => Err(ServiceError::BadRequest(format!(
            "dimension mismatch: fitted on {expected} attributes, got {}",
            r.len()
        ))),
        None => Ok(()),
    }
}

fn check_labels(x: &Matrix, y: &[String]) -> Result<(), ServiceError> {
    if x.len() != y.len() {
        return Err(ServiceError::BadRequest(format!("{} rows but {} labels", x.len(), y.len())));
    }
    width(x).map(|_| ())
}

fn not_trained(class: &str) -> ServiceError {
    ServiceError::NotTrained(format!("{class} must be fitted first"))
}

/// Most frequent label; ties go to the smallest label.
pub fn majority_label<'a>(labels: impl IntoIterator<Item = &'a String>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (l, c) in counts {
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((l, c));
        }
    }
    best.map(|(l, _)| l.to_string())
}

/// Min-max scaling to [0, 1] per attribute; constant attributes map to 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub ranges: Option<Vec<(f64, f64)>>,
}

impl Scaler {
    pub fn fit(&mut self, x: &Matrix) -> Result<(), ServiceError> {
        let d = width(x)?;
        check_width(x, d)?;
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for row in x {
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        self.ranges = Some(ranges);
        Ok(())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Vec<Vec<f64>>, ServiceError> {
        let ranges = self.ranges.as_ref().ok_or_else(|| not_trained("scaler"))?;
        check_width(x, ranges.len())?;
        Ok(x.iter()
            .map(|row| {
                row.iter()
                    .zip(ranges)
                    .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                    .collect()
            })
            .collect())
    }
}

/// Drops attributes that are constant on the fitted data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarSel {
    pub dimension: Option<usize>,
    pub keep: Vec<usize>,
}

impl VarSel {
    pub fn fit(&mut self, x: &Matrix) -> Result<(), ServiceError> {
        let d = width(x)?;
        check_width(x, d)?;
        self.keep = (0..d).filter(|&j| x.iter().any(|r| r[j] != x[0][j])).collect();
        self.dimension = Some(d);
        Ok(())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Vec<Vec<f64>>, ServiceError> {
        let d = self.dimension.ok_or_else(|| not_trained("varsel"))?;
        check_width(x, d)?;
        Ok(x.iter().map(|r| self.keep.iter().map(|&j| r[j]).collect()).collect())
    }
}

/// Passes data through unchanged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Identity {
    pub dimension: Option<usize>,
}

impl Identity {
    pub fn fit(&mut self, x: &Matrix) -> Result<(), ServiceError> {
        let d = width(x)?;
        check_width(x, d)?;
        self.dimension = Some(d);
        Ok(())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Vec<Vec<f64>>, ServiceError> {
        if let Some(d) = self.dimension {
            check_width(x, d)?;
        }
        Ok(x.to_vec())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Majority {
    pub dimension: Option<usize>,
    pub label: Option<String>,
}

impl Majority {
    pub fn train(&mut self, x: &Matrix, y: &[String]) -> Result<(), ServiceError> {
        check_labels(x, y)?;
        self.dimension = Some(width(x)?);
        self.label = majority_label(y);
        Ok(())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<String>, ServiceError> {
        let (Some(d), Some(label)) = (self.dimension, &self.label) else {
            return Err(not_trained("majority"));
        };
        check_width(x, d)?;
        Ok(vec![label.clone(); x.len()])
    }
}

/// 1-nearest neighbour under Euclidean distance; ties go to the lowest training
/// index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Knn1 {
    pub points: Option<Vec<Vec<f64>>>,
    pub labels: Vec<String>,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Knn1 {
    pub fn train(&mut self, x: &Matrix, y: &[String]) -> Result<(), ServiceError> {
        check_labels(x, y)?;
        check_width(x, width(x)?)?;
        self.points = Some(x.to_vec());
        self.labels = y.to_vec();
        Ok(())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<String>, ServiceError> {
        let points = self.points.as_ref().ok_or_else(|| not_trained("knn1"))?;
        check_width(x, points[0].len())?;
        Ok(x.iter()
            .map(|q| {
                let mut best = (f64::INFINITY, 0);
                for (i, p) in points.iter().enumerate() {
                    let d = squared_distance(p, q);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                self.labels[best.1].clone()
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpModel {
    pub dimension: usize,
    /// `None` when no attribute can be split; `left` is then predicted everywhere.
    pub attribute: Option<usize>,
    pub threshold: f64,
    /// Label for `x[attribute] <= threshold`.
    pub left: String,
    pub right: String,
    pub training_accuracy: f64,
}

/// Best single-attribute threshold by training accuracy. Candidate thresholds are
/// midpoints between consecutive distinct values; each side predicts its majority
/// label. Ties go to the lowest attribute, then the lowest threshold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub model: Option<StumpModel>,
}

impl Stump {
    pub fn train(&mut self, x: &Matrix, y: &[String]) -> Result<(), ServiceError> {
        check_labels(x, y)?;
        let d = width(x)?;
        check_width(x, d)?;
        let overall = majority_label(y).expect("labels are non-empty");
        let overall_correct = y.iter().filter(|l| **l == overall).count();
        let mut best = StumpModel {
            dimension: d,
            attribute: None,
            threshold: 0.0,
            left: overall.clone(),
            right: overall,
            training_accuracy: overall_correct as f64 / y.len() as f64,
        };
        let mut best_correct = 0;
        for j in 0..d {
            let mut order: Vec<usize> = (0..x.len()).collect();
            order.sort_by(|&a, &b| x[a][j].total_cmp(&x[b][j]).then(a.cmp(&b)));
            // label counts on each side as the threshold sweeps upwards
            let mut left: BTreeMap<&str, usize> = BTreeMap::new();
            let mut right: BTreeMap<&str, usize> = BTreeMap::new();
            for l in y {
                *right.entry(l).or_insert(0) += 1;
            }
            for w in 0..order.len() - 1 {
                let (i, next) = (order[w], order[w + 1]);
                *left.entry(&y[i]).or_insert(0) += 1;
                *right.get_mut(y[i].as_str()).expect("counted") -= 1;
                if x[i][j] == x[next][j] {
                    continue;
                }
                let (ll, lc) = side_majority(&left);
                let (rl, rc) = side_majority(&right);
                if lc + rc > best_correct {
                    best_correct = lc + rc;
                    best = StumpModel {
                        dimension: d,
                        attribute: Some(j),
                        threshold: (x[i][j] + x[next][j]) / 2.0,
                        left: ll.to_string(),
                        right: rl.to_string(),
                        training_accuracy: (lc + rc) as f64 / y.len() as f64,
                    };
                }
            }
        }
        self.model = Some(best);
        Ok(())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<String>, ServiceError> {
        let m = self.model.as_ref().ok_or_else(|| not_trained("stump"))?;
        check_width(x, m.dimension)?;
        Ok(x.iter()
            .map(|r| match m.attribute {
                Some(j) if r[j] > m.threshold => m.right.clone(),
                _ => m.left.clone(),
            })
            .collect())
    }
}

/// Gaussian naive Bayes. Per class and attribute: `mean = sum / n_c` and
/// `var = max(sum((x - mean)^2) / n_c, 1e-9)`, sums taken in row order. A query is
/// scored per class as `ln(n_c / n) + sum_j (-0.5 * ln(2 * pi * var) - (x - mean)^2 / (2 * var))`;
/// the highest score wins, ties going to the smallest label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Gnb {
    pub classes: Option<Vec<GnbClass>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbClass {
    pub label: String,
    pub prior: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

pub const VARIANCE_FLOOR: f64 = 1e-9;

impl Gnb {
    pub fn train(&mut self, x: &Matrix, y: &[String]) -> Result<(), ServiceError> {
        check_labels(x, y)?;
        let d = width(x)?;
        check_width(x, d)?;
        let mut rows: BTreeMap<&str, Vec<&Vec<f64>>> = BTreeMap::new();
        for (r, l) in x.iter().zip(y) {
            rows.entry(l).or_default().push(r);
        }
        let classes = rows
            .into_iter()
            .map(|(label, rs)| {
                let n = rs.len() as f64;
                let mean: Vec<f64> = (0..d).map(|j| rs.iter().fold(0.0, |s, r| s + r[j]) / n).collect();
                let var = (0..d)
                    .map(|j| {
                        let ss = rs.iter().fold(0.0, |s, r| s + (r[j] - mean[j]) * (r[j] - mean[j]));
                        (ss / n).max(VARIANCE_FLOOR)
                    })
                    .collect();
                GnbClass {
                    label: label.to_string(),
                    prior: n / x.len() as f64,
                    mean,
                    var,
                }
            })
            .collect();
        self.classes = Some(classes);
        Ok(())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<String>, ServiceError> {
        let classes = self.classes.as_ref().ok_or_else(|| not_trained("gnb"))?;
        check_width(x, classes[0].mean.len())?;
        Ok(x.iter()
            .map(|q| {
                let mut best: Option<(f64, &str)> = None;
                for c in classes {
                    let mut score = c.prior.ln();
                    for ((v, m), s) in q.iter().zip(&c.mean).zip(&c.var) {
                        score += -0.5 * (2.0 * std::f64::consts::PI * s).ln() - (v - m) * (v - m) / (2.0 * s);
                    }
                    if best.is_none_or(|(b, _)| score > b) {
                        best = Some((score, &c.label));
                    }
                }
                best.expect("at least one class").1.to_string()
            })
            .collect())
    }
}

/// 3-nearest neighbours with a majority vote. Neighbours are ordered by squared
/// Euclidean distance, then training index. A tied vote goes to the tied label
/// whose nearest neighbour comes first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Knn3 {
    pub points: Option<Vec<Vec<f64>>>,
    pub labels: Vec<String>,
}

impl Knn3 {
    pub fn train(&mut self, x: &Matrix, y: &[String]) -> Result<(), ServiceError> {
        check_labels(x, y)?;
        check_width(x, width(x)?)?;
        self.points = Some(x.to_vec());
        self.labels = y.to_vec();
        Ok(())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<String>, ServiceError> {
        let points = self.points.as_ref().ok_or_else(|| not_trained("knn3"))?;
        check_width(x, points[0].len())?;
        Ok(x.iter()
            .map(|q| {
                let mut order: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (squared_distance(p, q), i)).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let neighbours: Vec<&String> = order.iter().take(3).map(|&(_, i)| &self.labels[i]).collect();
                let votes = |l: &String| neighbours.iter().filter(|n| **n == l).count();
                let top = neighbours.iter().map(|l| votes(l)).max().expect("trained on at least one point");
                neighbours.iter().find(|l| votes(l) == top).expect("a label has the top vote").to_string()
            })
            .collect())
    }
}

fn side_majority<'a>(counts: &BTreeMap<&'a str, usize>) -> (&'a str, usize) {
    let mut best = ("", 0);
    for (&l, &c) in counts {
        if c > best.1 {
            best = (l, c);
        }
    }
    best
}

pub fn zero_one_loss(predicted: &[String], actual: &[String]) -> Result<f64, ServiceError> {
    if predicted.len() != actual.len() {
        return Err(ServiceError::BadRequest(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(ServiceError::BadRequest("no labels to compare".into()));
    }
    let wrong = predicted.iter().zip(actual).filter(|(p, a)| p != a).count();
    Ok(wrong as f64 / actual.len() as f64)
}

macro_rules! preprocessor {
    ($ty:ty, $name:literal) => {
        preprocessor!($ty, $name, |method: &str, _: &Arguments| Err(ServiceError::UnknownMethod(method.into())));
    };
    ($ty:ty, $name:literal, $static:expr) => {
        impl Servicified for $ty {
            const CLASS: &'static str = $name;

            fn construct(_: &Arguments, _: &Context<'_>) -> Result<Self, ServiceError> {
                Ok(Self::default())
            }

            fn call(&mut self, method: &str, args: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
                match method {
                    "fit" => self.fit(matrix_arg(args, "X")?).map(|_| Value::Null),
                    "transform" => self.transform(matrix_arg(args, "X")?).map(Value::Matrix),
                    _ => Err(ServiceError::UnknownMethod(method.into())),
                }
            }

            fn call_static(method: &str, args: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
                let f: fn(&str, &Arguments) -> Result<Value, ServiceError> = $static;
                f(method, args)
            }
        }
    };
}

macro_rules! classifier {
    ($ty:ty, $name:literal) => {
        impl Servicified for $ty {
            const CLASS: &'static str = $name;

            fn construct(_: &Arguments, _: &Context<'_>) -> Result<Self, ServiceError> {
                Ok(Self::default())
            }

            fn call(&mut self, method: &str, args: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
                match method {
                    "train" => self
                        .train(matrix_arg(args, "X")?, labels_arg(args, "y")?)
                        .map(|_| Value::Null),
                    "predict" => self.predict(matrix_arg(args, "X")?).map(Value::Labels),
                    _ => Err(ServiceError::UnknownMethod(method.into())),
                }
            }
        }
    };
}

preprocessor!(Scaler, "scaler");
preprocessor!(VarSel, "varsel");
preprocessor!(Identity, "identity", |method: &str, args: &Arguments| match method {
    "transform" => Ok(Value::Matrix(matrix_arg(args, "X")?.to_vec())),
    _ => Err(ServiceError::UnknownMethod(method.into())),
});
classifier!(Majority, "majority");
classifier!(Knn1, "knn1");
classifier!(Stump, "stump");
classifier!(Gnb, "gnb");
classifier!(Knn3, "knn3");

#[derive(Debug, Serialize, Deserialize)]
pub struct Metrics;

impl Servicified for Metrics {
    const CLASS: &'static str = "metrics";
    const CONSTRUCTIBLE: bool = false;

    fn construct(_: &Arguments, _: &Context<'_>) -> Result<Self, ServiceError> {
        Ok(Metrics)
    }

    fn call(&mut self, method: &str, _: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        Err(ServiceError::UnknownMethod(method.into()))
    }

    fn call_static(method: &str, args: &Arguments, _: &Context<'_>) -> Result<Value, ServiceError> {
        match method {
            "zero_one_loss" => zero_one_loss(labels_arg(args, "predicted")?, labels_arg(args, "actual")?).map(Value::Number),
            _ => Err(ServiceError::UnknownMethod(method.into())),
        }
    }
}

/// The learners of the secondary endpoint, served on their own.
pub fn secondary_registry() -> Registry {
    Registry::new().with(class::<Gnb>()).with(class::<Knn3>())
}

/// The toy portfolio, the metric and the composed-service class.
pub fn registry() -> Registry {
    Registry::new()
        .with(class::<Scaler>())
        .with(class::<VarSel>())
        .with(class::<Identity>())
        .with(class::<Majority>())
        .with(class::<Knn1>())
        .with(class::<Stump>())
        .with(class::<Metrics>())
        .with(class::<svcplan_gsm::composed::Composed>())
}
