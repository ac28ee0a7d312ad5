//! Labeled feature sets and input standardization.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    dim: usize,
    features: Vec<f32>,
    labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(dim: usize, features: Vec<f32>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("feature dimension must be >= 1".into()));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * labels.len(),
                actual: features.len(),
            });
        }
        Ok(Self { dim, features, labels })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f32], label: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        self.features.extend_from_slice(x);
        self.labels.push(label);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn max_label(&self) -> Option<usize> {
        self.labels.iter().copied().max()
    }
}

/// Per-dimension `(x - mean) / std`, fitted on training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f32>,
    pub scale: Vec<f32>,
}

impl Standardizer {
    /// Dimensions with (near) zero spread keep a unit scale.
    pub fn fit(set: &LabeledSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = set.len() as f64;
        let mut mean = vec![0.0f64; set.dim()];
        let mut sq = vec![0.0f64; set.dim()];
        for i in 0..set.len() {
            for (m, &v) in mean.iter_mut().zip(set.row(i)) {
                *m += v as f64;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for i in 0..set.len() {
            for ((s, &v), m) in sq.iter_mut().zip(set.row(i)).zip(&mean) {
                *s += (v as f64 - m).powi(2);
            }
        }
        let scale = sq
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-8 {
                    sd as f32
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            mean: mean.into_iter().map(|m| m as f32).collect(),
            scale,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f32]) -> Result<Vec<f32>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn apply_set(&self, set: &LabeledSet) -> Result<LabeledSet> {
        let mut features = Vec::with_capacity(set.features().len());
        for i in 0..set.len() {
            features.extend(self.apply(set.row(i))?);
        }
        LabeledSet::new(set.dim(), features, set.labels().to_vec())
    }
}
