#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svcplan_automl::dataset::Dataset;
use svcplan_automl::learners;
use svcplan_gsm::server::{start, GsmConfig, RunningGsm};
use tempfile::TempDir;

pub fn iris_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv")
}

pub fn iris() -> Dataset {
    Dataset::load(&iris_path()).unwrap()
}

pub fn gsm() -> (RunningGsm, TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let config = GsmConfig {
        port: 0,
        store: dir.path().to_path_buf(),
        ..GsmConfig::default()
    };
    (start(&config, learners::registry()).unwrap(), dir)
}

/// A GSM serving only the secondary learners.
pub fn secondary_gsm() -> (RunningGsm, TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let config = GsmConfig {
        port: 0,
        store: dir.path().to_path_buf(),
        ..GsmConfig::default()
    };
    (start(&config, learners::secondary_registry()).unwrap(), dir)
}

/// Gaussian-ish blobs, one per class, with a few duplicated and constant columns.
pub fn synthetic(seed: u64, n: usize, d: usize, classes: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        let row: Vec<f64> = (0..d)
            .map(|j| {
                if j == d - 1 && d > 1 {
                    3.0
                } else {
                    (c * (j + 1)) as f64 + rng.gen_range(-1.5..1.5f64).round() * 0.5
                }
            })
            .collect();
        features.push(row);
        labels.push(format!("c{c}"));
    }
    Dataset {
        name: format!("synthetic{seed}"),
        attributes: (0..d).map(|j| format!("x{j}")).collect(),
        features,
        labels,
    }
}

// Reference learners, written independently of the served implementations.

fn minmax(train: &[Vec<f64>], data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = train[0].len();
    let lo: Vec<f64> = (0..d).map(|j| train.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|j| train.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    data.iter()
        .map(|r| {
            (0..d)
                .map(|j| if hi[j] > lo[j] { (r[j] - lo[j]) / (hi[j] - lo[j]) } else { 0.0 })
                .collect()
        })
        .collect()
}

fn drop_constant(train: &[Vec<f64>], data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let keep: Vec<usize> = (0..train[0].len())
        .filter(|&j| train.iter().map(|r| r[j]).any(|v| v != train[0][j]))
        .collect();
    data.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect()
}

fn most_common(labels: &[&String]) -> String {
    let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let max = *counts.values().max().unwrap();
    counts.into_iter().find(|(_, c)| *c == max).unwrap().0.clone()
}

fn nearest(train: &[Vec<f64>], y: &[String], q: &[f64]) -> String {
    let dist = |p: &Vec<f64>| -> f64 { p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum() };
    let (best, _) = train
        .iter()
        .enumerate()
        .map(|(i, p)| (i, dist(p)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .unwrap();
    y[best].clone()
}

/// Brute-force decision stump: `(attribute, threshold, left, right, correct)`.
pub fn brute_stump(x: &[Vec<f64>], y: &[String]) -> Option<(usize, f64, String, String, usize)> {
    let mut best: Option<(usize, f64, String, String, usize)> = None;
    for j in 0..x[0].len() {
        let mut values: Vec<f64> = x.iter().map(|r| r[j]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<&String> = x.iter().zip(y).filter(|(r, _)| r[j] <= t).map(|(_, l)| l).collect();
            let right: Vec<&String> = x.iter().zip(y).filter(|(r, _)| r[j] > t).map(|(_, l)| l).collect();
            let (ll, rl) = (most_common(&left), most_common(&right));
            let correct = left.iter().filter(|l| ***l == ll).count() + right.iter().filter(|l| ***l == rl).count();
            if best.as_ref().is_none_or(|b| correct > b.4) {
                best = Some((j, t, ll, rl, correct));
            }
        }
    }
    best
}

/// Naive Bayes with Gaussian densities, picking the largest prior-weighted
/// log-likelihood.
pub fn gaussian_nb(train: &[Vec<f64>], y: &[String], queries: &[Vec<f64>]) -> Vec<String> {
    let mut labels: Vec<&String> = y.iter().collect();
    labels.sort();
    labels.dedup();
    let stats: Vec<(&String, f64, Vec<(f64, f64)>)> = labels
        .into_iter()
        .map(|l| {
            let rows: Vec<&Vec<f64>> = train.iter().zip(y).filter(|(_, c)| *c == l).map(|(r, _)| r).collect();
            let n = rows.len() as f64;
            let moments = (0..train[0].len())
                .map(|j| {
                    let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                    let v = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
                    (m, v.max(1e-9))
                })
                .collect();
            (l, n / train.len() as f64, moments)
        })
        .collect();
    queries
        .iter()
        .map(|q| {
            let score = |(_, prior, moments): &(&String, f64, Vec<(f64, f64)>)| -> f64 {
                prior.ln()
                    + q.iter()
                        .zip(moments)
                        .map(|(x, (m, v))| -((x - m).powi(2) / v + (2.0 * std::f64::consts::PI * v).ln()) / 2.0)
                        .sum::<f64>()
            };
            let best = stats.iter().map(score).fold(f64::NEG_INFINITY, f64::max);
            stats.iter().find(|s| score(s) == best).unwrap().0.clone()
        })
        .collect()
}

/// k nearest neighbours by (distance, index) with a vote; tied votes go to the
/// label seen first among the neighbours.
pub fn knn_vote(train: &[Vec<f64>], y: &[String], queries: &[Vec<f64>], k: usize) -> Vec<String> {
    queries
        .iter()
        .map(|q| {
            let mut idx: Vec<usize> = (0..train.len()).collect();
            let dist = |i: usize| -> f64 { train[i].iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum() };
            idx.sort_by(|&a, &b| dist(a).partial_cmp(&dist(b)).unwrap().then(a.cmp(&b)));
            idx.truncate(k);
            let mut tally: Vec<(&String, usize)> = Vec::new();
            for &i in &idx {
                match tally.iter_mut().find(|(l, _)| *l == &y[i]) {
                    Some(t) => t.1 += 1,
                    None => tally.push((&y[i], 1)),
                }
            }
            let top = tally.iter().map(|t| t.1).max().unwrap();
            tally.iter().find(|t| t.1 == top).unwrap().0.clone()
        })
        .collect()
}

pub fn reference_predictions(pre: &str, clf: &str, train: &Dataset, validation: &Dataset) -> Vec<String> {
    let (xt, xv) = match pre {
        "identity" => (train.features.clone(), validation.features.clone()),
        "scaler" => (minmax(&train.features, &train.features), minmax(&train.features, &validation.features)),
        "varsel" => (
            drop_constant(&train.features, &train.features),
            drop_constant(&train.features, &validation.features),
        ),
        other => panic!("no reference for {other}"),
    };
    let y = &train.labels;
    match clf {
        "majority" => vec![most_common(&y.iter().collect::<Vec<_>>()); xv.len()],
        "knn1" => xv.iter().map(|q| nearest(&xt, y, q)).collect(),
        "gnb" => gaussian_nb(&xt, y, &xv),
        "knn3" => knn_vote(&xt, y, &xv, 3),
        "stump" => match brute_stump(&xt, y) {
            Some((j, t, l, r, _)) => xv.iter().map(|q| if q[j] <= t { l.clone() } else { r.clone() }).collect(),
            None => vec![most_common(&y.iter().collect::<Vec<_>>()); xv.len()],
        },
        other => panic!("no reference for {other}"),
    }
}

pub fn reference_loss(pre: &str, clf: &str, train: &Dataset, validation: &Dataset) -> f64 {
    let predicted = reference_predictions(pre, clf, train, validation);
    let wrong = predicted.iter().zip(&validation.labels).filter(|(p, a)| p != a).count();
    wrong as f64 / validation.len() as f64
}

pub const PREPROCESSORS: [&str; 3] = ["identity", "scaler", "varsel"];
pub const CLASSIFIERS: [&str; 3] = ["knn1", "majority", "stump"];
