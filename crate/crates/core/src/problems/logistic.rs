//! Logistic regression as an optimization problem.
//!
//! With `z = w₀ + Σ xᵢwᵢ` and `h = 1/(1 + e^{−z})`, the per-instance cost is
//! `−log h` for label 1 and `−log(1 − h)` for label 0. Both are evaluated as
//! softplus terms so the loss stays finite for any finite weights.

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;

use super::ProblemSpec;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::rng::SeededRng;

pub const PIMA_PROBLEM: &str = "pima-logistic";
const PIMA_COLUMNS: usize = 9;

/// Feature rows with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        let m = features.first().map_or(0, Vec::len);
        for (i, row) in features.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Ingestion {
                    row: i + 1,
                    message: format!("expected {m} features, found {}", row.len()),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Ingestion {
                    row: i + 1,
                    message: "non-finite feature".into(),
                });
            }
        }
        if let Some(i) = labels.iter().position(|l| *l > 1) {
            return Err(Error::Ingestion {
                row: i + 1,
                message: format!("label {} is not 0 or 1", labels[i]),
            });
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: indices.iter().map(|i| self.features[*i].clone()).collect(),
            labels: indices.iter().map(|i| self.labels[*i]).collect(),
        }
    }

    /// Rescales every column to zero mean and unit (population) variance.
    /// Constant columns become all zeros.
    pub fn standardize(&mut self) {
        let n = self.rows() as f64;
        for j in 0..self.feature_count() {
            let mean = self.features.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = self.features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for row in &mut self.features {
                row[j] = if sd > 0.0 { (row[j] - mean) / sd } else { 0.0 };
            }
        }
    }

    fn check_weights(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.feature_count() + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count() + 1,
                got: w.len(),
            });
        }
        Ok(())
    }
}

fn linear(w: &[f64], x: &[f64]) -> f64 {
    w[0] + w[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

/// `log(1 + e^z)` without overflow or loss of tiny values.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Summed cross-entropy of the weights `w = (w₀, w₁, …, w_m)` on `data`.
pub fn logistic_loss(w: &[f64], data: &LabeledDataset) -> Result<f64> {
    data.check_weights(w)?;
    Ok(data
        .features
        .iter()
        .zip(&data.labels)
        .map(|(x, y)| {
            let z = linear(w, x);
            if *y == 1 {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum())
}

/// `Σᵢ (h(xᵢ) − yᵢ)·(1, xᵢ)`.
pub fn logistic_gradient(w: &[f64], data: &LabeledDataset) -> Result<Vec<f64>> {
    data.check_weights(w)?;
    let mut g = vec![0.0; w.len()];
    for (x, y) in data.features.iter().zip(&data.labels) {
        let r = sigmoid(linear(w, x)) - f64::from(*y);
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(x) {
            *gj += r * xj;
        }
    }
    Ok(g)
}

/// Fraction of rows where `h(x) ≥ ½` agrees with the label.
pub fn accuracy(w: &[f64], test: &LabeledDataset) -> Result<f64> {
    test.check_weights(w)?;
    if test.rows() == 0 {
        return Err(Error::InvalidArgument("accuracy of an empty test set".into()));
    }
    let hits = test
        .features
        .iter()
        .zip(&test.labels)
        .filter(|(x, y)| u8::from(linear(w, x) >= 0.0) == **y)
        .count();
    Ok(hits as f64 / test.rows() as f64)
}

/// Parses comma-separated rows of `columns` numbers, the last one a 0/1
/// label. A first row that does not parse as numbers is taken as a header.
/// A leading byte-order mark is ignored. Errors name the 1-based line.
pub fn parse_labeled_csv(text: &str, columns: usize) -> Result<LabeledDataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Ingestion {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(j, c)| c.parse::<f64>().map_err(|_| j))
            .collect();
        let is_first = std::mem::replace(&mut first, false);
        let values = match parsed {
            Ok(v) => v,
            Err(_) if is_first => continue,
            Err(j) => {
                return Err(Error::Ingestion {
                    row,
                    message: format!("column {} is not numeric: {:?}", j + 1, &record[j]),
                })
            }
        };
        if values.len() != columns {
            return Err(Error::Ingestion {
                row,
                message: format!("expected {columns} columns, found {}", values.len()),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Ingestion {
                row,
                message: format!("column {} is not finite", j + 1),
            });
        }
        let label = values[columns - 1];
        let label = if label == 0.0 {
            0
        } else if label == 1.0 {
            1
        } else {
            return Err(Error::Ingestion {
                row,
                message: format!("label {label} is not 0 or 1"),
            });
        };
        features.push(values[..columns - 1].to_vec());
        labels.push(label);
    }
    LabeledDataset::new(features, labels)
}

/// Reads the Pima diabetes CSV (8 features and a label per row) and
/// standardizes the features.
pub fn load_pima(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut data = parse_labeled_csv(&text, PIMA_COLUMNS)?;
    data.standardize();
    Ok(data)
}

/// Seeded 90/10 shuffle split. The test set holds `round(n/10)` rows
/// (at least one), so 768 rows split 691/77.
pub fn split_train_test(
    data: &LabeledDataset,
    rng: &mut SeededRng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let n = data.rows();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two rows to split".into()));
    }
    let test_size = ((n as f64 / 10.0).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (test_idx, train_idx) = order.split_at(test_size);
    Ok((data.subset(train_idx), data.subset(test_idx)))
}

/// The training loss as an [`Objective`] over the weights.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    data: Arc<LabeledDataset>,
}

impl LogisticObjective {
    pub fn new(data: Arc<LabeledDataset>) -> Self {
        LogisticObjective { data }
    }
}

impl Objective for LogisticObjective {
    fn dimension(&self) -> usize {
        self.data.feature_count() + 1
    }

    fn value(&self, w: &[f64]) -> f64 {
        logistic_loss(w, &self.data).unwrap_or(f64::NAN)
    }

    fn gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        logistic_gradient(w, &self.data).ok()
    }
}

/// Train/test data plus the weight box `W`.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    pub train: Arc<LabeledDataset>,
    pub test: Arc<LabeledDataset>,
    pub domain: BoxDomain,
}

impl LogisticProblem {
    /// `W = [−bound, bound]^(m+1)`.
    pub fn new(train: LabeledDataset, test: LabeledDataset, bound: f64) -> Result<Self> {
        if train.feature_count() != test.feature_count() {
            return Err(Error::DimensionMismatch {
                expected: train.feature_count(),
                got: test.feature_count(),
            });
        }
        let domain = BoxDomain::cube(train.feature_count() + 1, -bound, bound)?;
        Ok(LogisticProblem {
            train: Arc::new(train),
            test: Arc::new(test),
            domain,
        })
    }

    /// Loads, standardizes and splits the Pima data; `W = [−10, 10]⁹`.
    pub fn pima(path: impl AsRef<Path>, split_seed: u64) -> Result<Self> {
        let data = load_pima(path)?;
        let (train, test) = split_train_test(&data, &mut SeededRng::new(split_seed))?;
        LogisticProblem::new(train, test, 10.0)
    }

    pub fn objective(&self) -> LogisticObjective {
        LogisticObjective::new(Arc::clone(&self.train))
    }

    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            name: PIMA_PROBLEM.to_string(),
            domain: self.domain.clone(),
            objective: Arc::new(self.objective()),
            known_minimum: None,
            table_minimum: None,
            target_source: None,
            minimizers: Vec::new(),
        }
    }
}
