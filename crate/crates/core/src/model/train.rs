//! Mini-batch SGD for [`MlpHead`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::LabeledSet;
use super::metrics::evaluate;
use super::mlp::{Gradients, MlpHead, Scalar};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the batch order.
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    /// Splits each batch into this many pieces whose gradients are computed in parallel
    /// and summed in a fixed order. `1` is the serial path.
    pub grad_chunks: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 32,
            seed: 0,
            shuffle_each_epoch: true,
            grad_chunks: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.grad_chunks == 0 {
            return Err(Error::Config("grad_chunks must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's batches, weighted by batch size.
    pub train_loss: f64,
    /// Accuracy on the training set after the epoch.
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn highest_validation_accuracy(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.val_acc).reduce(f64::max)
    }

    /// First epoch reaching the highest validation accuracy.
    pub fn best_epoch(&self) -> Option<usize> {
        let best = self.highest_validation_accuracy()?;
        self.epochs.iter().find(|e| e.val_acc == best).map(|e| e.epoch)
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHead<T = f32> {
    pub final_head: MlpHead<T>,
    /// Parameters at [`TrainHistory::best_epoch`].
    pub best_head: MlpHead<T>,
    pub history: TrainHistory,
}

fn batch_loss_and_grad<T: Scalar>(
    head: &MlpHead<T>,
    set: &LabeledSet,
    idx: &[usize],
    chunks: usize,
) -> Result<(f64, Gradients<T>)> {
    let gather = |ids: &[usize]| -> (Vec<T>, Vec<usize>) {
        let mut x = Vec::with_capacity(ids.len() * set.dim());
        for &i in ids {
            x.extend(set.row(i).iter().map(|&v| T::from(v).expect("f32 fits")));
        }
        (x, ids.iter().map(|&i| set.labels()[i]).collect())
    };
    if chunks <= 1 || idx.len() < 2 {
        let (x, y) = gather(idx);
        return head.loss_and_grad(&x, &y);
    }
    let piece = idx.len().div_ceil(chunks);
    let parts: Vec<Result<(f64, Gradients<T>, usize)>> = idx
        .par_chunks(piece)
        .map(|ids| {
            let (x, y) = gather(ids);
            head.loss_and_grad(&x, &y).map(|(l, g)| (l, g, ids.len()))
        })
        .collect();
    let n = idx.len() as f64;
    let mut loss = 0.0;
    let mut total: Option<Gradients<T>> = None;
    for part in parts {
        let (l, g, len) = part?;
        let w = len as f64 / n;
        loss += w * l;
        let w = T::from(w).expect("finite");
        match &mut total {
            None => {
                let mut first = g;
                first.scale(w);
                total = Some(first);
            }
            Some(t) => t.add_scaled(&g, w),
        }
    }
    Ok((loss, total.expect("at least one chunk")))
}

/// Runs `cfg.epochs` epochs of plain SGD (no momentum), recording metrics after each.
pub fn train<T: Scalar>(
    mut head: MlpHead<T>,
    train_set: &LabeledSet,
    val_set: &LabeledSet,
    cfg: &TrainConfig,
) -> Result<TrainedHead<T>> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for set in [train_set, val_set] {
        if set.dim() != head.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: head.input_dim(),
                actual: set.dim(),
            });
        }
    }
    let lr = T::from(cfg.learning_rate).expect("finite learning rate");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = TrainHistory::default();
    let mut best_head = head.clone();
    let mut best_val = f64::NEG_INFINITY;

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0f64;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = batch_loss_and_grad(&head, train_set, batch, cfg.grad_chunks)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss * batch.len() as f64;
            head.sgd_step(&grads, lr);
        }
        if !head.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: evaluate(&head, train_set)?.classification_accuracy,
            val_acc: evaluate(&head, val_set)?.classification_accuracy,
        };
        log::debug!(
            "epoch {epoch}: loss {:.4} train {:.4} val {:.4}",
            record.train_loss,
            record.train_acc,
            record.val_acc
        );
        if record.val_acc > best_val {
            best_val = record.val_acc;
            best_head = head.clone();
        }
        history.epochs.push(record);
    }
    Ok(TrainedHead {
        final_head: head,
        best_head,
        history,
    })
}
