//! CSV datasets (header row, numeric attributes, label in the last column) and the
//! stratified train/validation split.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    /// Row numbers count data rows from 1; columns count from 1.
    #[error("row {row}, column {column}: `{cell}` is not a number")]
    NotNumeric { row: usize, column: usize, cell: String },
    #[error("row {row}, column {column}: missing value")]
    Missing { row: usize, column: usize },
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("need a header, at least one attribute column and a label column")]
    NoColumns,
    #[error("need at least 2 instances, found {0}")]
    TooSmall(usize),
    #[error("all instances have the label `{0}`")]
    SingleClass(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("class `{class}` has {count} instance(s); a stratified split needs at least 2")]
    ClassTooSmall { class: String, count: usize },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub attributes: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl Dataset {
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
        Self::from_reader(name, file)
    }

    pub fn from_reader(name: impl Into<String>, reader: impl Read) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 {
            return Err(DatasetError::NoColumns);
        }
        let d = header.len() - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 1;
            if record.len() != header.len() {
                return Err(DatasetError::Ragged {
                    row,
                    found: record.len(),
                    expected: header.len(),
                });
            }
            let mut x = Vec::with_capacity(d);
            for (j, cell) in record.iter().take(d).enumerate() {
                if cell.is_empty() || cell == "?" {
                    return Err(DatasetError::Missing { row, column: j + 1 });
                }
                let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| DatasetError::NotNumeric {
                    row,
                    column: j + 1,
                    cell: cell.to_string(),
                })?;
                x.push(v);
            }
            let label = &record[d];
            if label.is_empty() {
                return Err(DatasetError::Missing { row, column: d + 1 });
            }
            features.push(x);
            labels.push(label.to_string());
        }
        let ds = Dataset {
            name: name.into(),
            attributes: header[..d].to_vec(),
            features,
            labels,
        };
        if ds.len() < 2 {
            return Err(DatasetError::TooSmall(ds.len()));
        }
        if ds.classes().len() < 2 {
            return Err(DatasetError::SingleClass(ds.labels[0].clone()));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.attributes.len()
    }

    /// Class → instance count, ordered by class label.
    pub fn classes(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for l in &self.labels {
            *counts.entry(l.as_str()).or_insert(0) += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            attributes: self.attributes.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self { train_fraction: 0.7, seed }
    }
}

/// Sorted index sets of a split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Split {
    pub fn apply(&self, ds: &Dataset) -> (Dataset, Dataset) {
        (ds.subset(&self.train), ds.subset(&self.validation))
    }
}

/// Each class contributes `round(fraction · n_c)` instances to the training part,
/// kept within `1..=n_c - 1` so both parts see every class. Classes are shuffled
/// independently, in label order, from one seeded stream.
pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<Split, SplitError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(SplitError::Fraction(spec.train_fraction));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in ds.labels.iter().enumerate() {
        by_class.entry(l.as_str()).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < 2) {
        return Err(SplitError::ClassTooSmall {
            class: class.to_string(),
            count: members.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = Split {
        train: Vec::new(),
        validation: Vec::new(),
    };
    for mut members in by_class.into_values() {
        let n = members.len();
        let take = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        members.shuffle(&mut rng);
        split.train.extend_from_slice(&members[..take]);
        split.validation.extend_from_slice(&members[take..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset, DatasetError> {
        Dataset::from_reader("t", text.as_bytes())
    }

    #[test]
    fn small_file() {
        let ds = parse("a,b,class\n1,2,x\n3,4,y\n5,6,x\n7,8,y\n").unwrap();
        assert_eq!((ds.len(), ds.dimension(), ds.classes().len()), (4, 2, 2));
    }

    #[test]
    fn malformed_cell_is_located() {
        let err = parse("a,b,class\n1,2,x\n3,oops,y\n").unwrap_err();
        assert!(matches!(err, DatasetError::NotNumeric { row: 2, column: 2, .. }), "{err}");
        assert!(matches!(parse("a,b,class\n1,,x\n3,4,y\n"), Err(DatasetError::Missing { row: 1, column: 2 })));
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(parse("a,class\n1,x\n2,x\n"), Err(DatasetError::SingleClass(_))));
    }

    #[test]
    fn ten_balanced() {
        let text: String = std::iter::once("a,class\n".to_string())
            .chain((0..10).map(|i| format!("{i},{}\n", if i < 5 { "p" } else { "q" })))
            .collect();
        let ds = parse(&text).unwrap();
        let s = stratified_split(&ds, &SplitSpec::new(3)).unwrap();
        // round(3.5) = 4 per class
        assert_eq!(s.train.len(), 8);
        assert_eq!(s.validation.len(), 2);
        assert_eq!(s, stratified_split(&ds, &SplitSpec::new(3)).unwrap());
    }

    #[test]
    fn singleton_class_cannot_be_split() {
        let ds = parse("a,class\n1,x\n2,x\n3,y\n").unwrap();
        assert_eq!(
            stratified_split(&ds, &SplitSpec::new(0)),
            Err(SplitError::ClassTooSmall {
                class: "y".into(),
                count: 1
            })
        );
    }
}
