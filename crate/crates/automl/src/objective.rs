//! Validation 0-1 loss of a deployed pipeline.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use svcplan_core::composition::Composition;
use svcplan_gsm::value::{Arguments, Value};
use svcplan_gsm::{Deployment, ObjectiveRoutine};

use crate::dataset::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectiveReport {
    pub zero_one_loss: f64,
    pub train_duration: Duration,
    pub composition: Composition,
}

pub fn data_arguments(ds: &Dataset) -> Arguments {
    Arguments::from([
        ("X".to_string(), Value::Matrix(ds.features.clone())),
        ("y".to_string(), Value::Labels(ds.labels.clone())),
    ])
}

/// Trains on the training part and scores `1 - loss` on the validation part.
/// Reports are kept per constructor composition.
pub struct ZeroOneLoss {
    train: Arguments,
    validation: Arguments,
    reports: Mutex<BTreeMap<String, ObjectiveReport>>,
}

impl ZeroOneLoss {
    pub fn new(train: &Dataset, validation: &Dataset) -> Arc<Self> {
        Arc::new(Self {
            train: data_arguments(train),
            validation: data_arguments(validation),
            reports: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn report(&self, constructor: &Composition) -> Option<ObjectiveReport> {
        let reports = self.reports.lock().unwrap_or_else(|e| e.into_inner());
        reports.get(&constructor.canonical()).cloned()
    }
}

impl ObjectiveRoutine for ZeroOneLoss {
    fn run(&self, d: &Deployment<'_>) -> Result<f64, String> {
        let started = Instant::now();
        d.client
            .invoke(&d.handle, "train", self.train.clone())
            .map_err(|e| format!("train: {e}"))?;
        let train_duration = started.elapsed();
        let loss = match d.client.invoke(&d.handle, "evaluate", self.validation.clone()) {
            Ok(Value::Number(l)) if (0.0..=1.0).contains(&l) => l,
            Ok(other) => return Err(format!("evaluate returned {other:?}")),
            Err(e) => return Err(format!("evaluate: {e}")),
        };
        let mut reports = self.reports.lock().unwrap_or_else(|e| e.into_inner());
        reports.insert(
            d.service.constructor.canonical(),
            ObjectiveReport {
                zero_one_loss: loss,
                train_duration,
                composition: d.service.constructor.clone(),
            },
        );
        Ok(1.0 - loss)
    }
}
