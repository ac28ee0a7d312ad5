//! Accuracy and confusion counts.

use serde::{Deserialize, Serialize};

use super::data::LabeledSet;
use super::mlp::{argmax, MlpHead, Scalar};
use super::train::TrainHistory;
use crate::{Error, Result};

/// Anything that maps a feature vector to class probabilities.
pub trait Classifier {
    fn input_dim(&self) -> usize;

    fn n_classes(&self) -> usize;

    fn predict_proba(&self, x: &[f32]) -> Result<Vec<f32>>;

    /// Argmax of [`Classifier::predict_proba`], ties to the lowest index.
    fn predict(&self, x: &[f32]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    /// Predictions for `n` row-major inputs.
    fn predict_batch(&self, x: &[f32], n: usize) -> Result<Vec<usize>> {
        let d = self.input_dim();
        if x.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                actual: x.len(),
            });
        }
        x.chunks(d).map(|row| self.predict(row)).collect()
    }
}

impl<T: Scalar> Classifier for MlpHead<T> {
    fn input_dim(&self) -> usize {
        MlpHead::input_dim(self)
    }

    fn n_classes(&self) -> usize {
        MlpHead::n_classes(self)
    }

    fn predict_proba(&self, x: &[f32]) -> Result<Vec<f32>> {
        let converted: Vec<T> = x.iter().map(|&v| T::from(v).expect("f32 fits")).collect();
        Ok(self
            .forward(&converted)?
            .into_iter()
            .map(|p| p.to_f32().unwrap_or(f32::NAN))
            .collect())
    }

    fn predict_batch(&self, x: &[f32], n: usize) -> Result<Vec<usize>> {
        let converted: Vec<T> = x.iter().map(|&v| T::from(v).expect("f32 fits")).collect();
        let logits = self.logits_batch(&converted, n)?;
        Ok(logits.chunks(MlpHead::n_classes(self)).map(argmax).collect())
    }
}

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, actual: usize, predicted: usize) {
        self.counts[actual][predicted] += 1;
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub classification_accuracy: f64,
    pub highest_validation_accuracy: Option<f64>,
    pub confusion: ConfusionMatrix,
}

impl Metrics {
    pub fn with_history(mut self, history: &TrainHistory) -> Self {
        self.highest_validation_accuracy = history.highest_validation_accuracy();
        self
    }
}

/// Argmax predictions over `set` (ties to the lowest class index) scored against its labels.
pub fn evaluate<C: Classifier + ?Sized>(classifier: &C, set: &LabeledSet) -> Result<Metrics> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = classifier.n_classes();
    if let Some(max) = set.max_label() {
        if max >= k {
            return Err(Error::InvalidParameter(format!("label {max} outside 0..{k}")));
        }
    }
    let predictions = classifier.predict_batch(set.features(), set.len())?;
    let mut confusion = ConfusionMatrix::new(k);
    for (&actual, &predicted) in set.labels().iter().zip(&predictions) {
        confusion.record(actual, predicted);
    }
    Ok(Metrics {
        classification_accuracy: confusion.accuracy(),
        highest_validation_accuracy: None,
        confusion,
    })
}
