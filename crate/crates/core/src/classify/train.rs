use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::model::{adam_step, argmax, loss_grad, AdamState, Init, LinearModel, ADAM_LEARNING_RATE};
use super::FeatureSet;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 512,
            learning_rate: ADAM_LEARNING_RATE,
            seed: 0,
            init: Init::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub split: String,
    pub accuracy: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters after the epoch with the highest validation accuracy
    /// (earliest on ties).
    pub model: LinearModel,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub history: Vec<HistoryRow>,
}

impl TrainOutcome {
    /// Validation accuracy after `epoch` (1-based).
    pub fn val_accuracy(&self, epoch: usize) -> Option<f64> {
        self.history
            .iter()
            .find(|r| r.epoch == epoch && r.split == "val")
            .map(|r| r.accuracy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(model: &LinearModel, set: &FeatureSet) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::Empty("evaluation split".into()));
    }
    if set.dim != model.dim || set.classes > model.classes {
        return Err(Error::ShapeMismatch(format!(
            "{}-class model of dimension {} on {}-class features of dimension {}",
            model.classes, model.dim, set.classes, set.dim
        )));
    }
    let mut confusion = vec![vec![0usize; model.classes]; model.classes];
    let mut loss = 0.0;
    for i in 0..set.len() {
        let z = model.logits(set.sample(i));
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += log_norm - z[set.labels[i]];
        confusion[set.labels[i]][argmax(&z)] += 1;
    }
    let correct: usize = (0..model.classes).map(|c| confusion[c][c]).sum();
    Ok(Evaluation {
        accuracy: correct as f64 / set.len() as f64,
        loss: loss / set.len() as f64,
        confusion,
    })
}

/// Mini-batch Adam on the softmax cross-entropy. All randomness (weight
/// initialization, per-epoch shuffles) comes from one ChaCha8 stream seeded
/// with `config.seed`.
pub fn train(train_set: &FeatureSet, val_set: &FeatureSet, config: &TrainConfig) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::Empty("training split".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Empty("validation split".into()));
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(Error::OutOfRange("epochs and batch size must be positive".into()));
    }
    if val_set.dim != train_set.dim {
        return Err(Error::ShapeMismatch(format!(
            "validation dimension {} vs training dimension {}",
            val_set.dim, train_set.dim
        )));
    }
    let classes = train_set.classes.max(val_set.classes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LinearModel::init(classes, train_set.dim, config.init, &mut rng);
    let mut adam = AdamState::new(&model, config.learning_rate);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(2 * config.epochs);
    let mut best: Option<(usize, f64, LinearModel)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let (loss, grads) = loss_grad(&model, train_set, batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    step,
                    detail: format!("loss {loss} on a batch of {}", batch.len()),
                });
            }
            adam_step(&mut model, &mut adam, &grads)?;
            if !model.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    step,
                    detail: "parameters diverged after the Adam update".into(),
                });
            }
        }
        for (split, set) in [("train", train_set), ("val", val_set)] {
            let e = evaluate(&model, set)?;
            history.push(HistoryRow {
                epoch,
                split: split.into(),
                accuracy: e.accuracy,
                loss: e.loss,
            });
        }
        let val = history.last().expect("just pushed").accuracy;
        if best.as_ref().is_none_or(|(_, acc, _)| val > *acc) {
            best = Some((epoch, val, model.clone()));
        }
    }
    let (best_epoch, best_val_accuracy, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_val_accuracy,
        history,
    })
}

pub fn write_history_csv<W: Write>(history: &[HistoryRow], mut w: W) -> Result<()> {
    writeln!(w, "epoch,split,accuracy,loss")?;
    for r in history {
        writeln!(w, "{},{},{:.16e},{:.16e}", r.epoch, r.split, r.accuracy, r.loss)?;
    }
    w.flush()?;
    Ok(())
}
