use serde::{Deserialize, Serialize};

use super::SpectrogramMatrix;
use crate::{Error, Result};

/// Per-mel-bin mean over frames followed by per-mel-bin population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    pub fn stds(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }
}

pub fn pool_features(spec: &SpectrogramMatrix) -> Result<FeatureVector> {
    let m = &spec.values;
    if m.cols() == 0 {
        return Err(Error::InvalidParameter("cannot pool a spectrogram with no frames".into()));
    }
    let n = m.cols() as f64;
    let mut means = Vec::with_capacity(m.rows());
    let mut stds = Vec::with_capacity(m.rows());
    for r in 0..m.rows() {
        let row = m.row(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    means.extend(stds);
    Ok(FeatureVector { values: means })
}
