use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::adam_step;
use super::config::TrainConfig;
use super::model::{loss_grad_predictions, predict_batch, Model};
use crate::error::{Error, Result};
use crate::imgio::ImageTensor;

/// Borrowed images with their labels.
#[derive(Debug, Clone, Default)]
pub struct DataView<'a> {
    pub images: Vec<&'a ImageTensor>,
    pub labels: Vec<usize>,
}

impl<'a> DataView<'a> {
    pub fn new(images: Vec<&'a ImageTensor>, labels: Vec<usize>) -> Self {
        assert_eq!(images.len(), labels.len(), "one label per image");
        DataView { images, labels }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the per-batch losses, weighted by batch size.
    pub train_loss: f64,
    /// Accuracy of the in-epoch predictions (made before each update).
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

/// Accuracy of the model's predictions on `view`, batched to bound memory.
pub fn accuracy(model: &Model, view: &DataView<'_>) -> Result<f64> {
    if view.is_empty() {
        return Err(Error::InvalidTrainConfig("accuracy of an empty view".into()));
    }
    let mut correct = 0usize;
    for (imgs, labels) in view.images.chunks(64).zip(view.labels.chunks(64)) {
        let preds = predict_batch(model, imgs)?;
        correct += preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    }
    Ok(correct as f64 / view.len() as f64)
}

/// Runs `tc.epochs` passes over a seeded shuffle of `train`. The final
/// weights are kept (no early stopping); `val` only feeds the history.
pub fn train_model(
    model: &mut Model,
    train: &DataView<'_>,
    val: &DataView<'_>,
    tc: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    tc.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidTrainConfig("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(tc.batch_size) {
            let images: Vec<&ImageTensor> = batch.iter().map(|&i| train.images[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train.labels[i]).collect();
            let (loss, grads, preds) = loss_grad_predictions(model, &images, &labels)?;
            loss_sum += loss * batch.len() as f64;
            correct += preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
            adam_step(model, &grads, tc)?;
        }
        let train_loss = loss_sum / train.len() as f64;
        if !train_loss.is_finite() || !model.all_finite() {
            return Err(Error::NonFinite(format!("training epoch {epoch}")));
        }
        let val_accuracy = if val.is_empty() {
            None
        } else {
            Some(accuracy(model, val)?)
        };
        log::debug!("epoch {epoch}: loss {train_loss:.5} val {val_accuracy:?}");
        history.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy: correct as f64 / train.len() as f64,
            val_accuracy,
        });
    }
    Ok(history)
}
