use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{argmax, Workspace};
use super::{Gradients, TrainedModel, DEFAULT_INPUT_SIDE};
use crate::dataset::Taxonomy;
use crate::objectives::{self, dm_schedule, NmwStrictness, ObjectiveKind, Surrogate};
use crate::util::{mix_seed, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub input_side: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Upper bound on the L2 norm of each batch-mean gradient; 0 disables clipping.
    pub max_grad_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            input_side: DEFAULT_INPUT_SIDE,
            batch_size: 32,
            epochs: 64,
            learning_rate: 0.01,
            momentum: 0.9,
            max_grad_norm: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_side == 0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidParam(
                "input_side, batch_size and epochs must be positive".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParam("learning_rate must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParam("momentum must be in [0,1)".into()));
        }
        if !(self.max_grad_norm >= 0.0 && self.max_grad_norm.is_finite()) {
            return Err(Error::InvalidParam("max_grad_norm must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Decoded, resized images (HWC, values in [0,1]) with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    side: usize,
    data: Vec<f64>,
    labels: Vec<usize>,
}

impl ImageSet {
    pub fn new(side: usize, data: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if data.len() != side * side * 3 * labels.len() {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{} images of {side}x{side}x3", labels.len()),
                got: alloc::format!("{} values", data.len()),
            });
        }
        Ok(ImageSet { side, data, labels })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let n = self.side * self.side * 3;
        &self.data[i * n..(i + 1) * n]
    }
}

/// Validation metrics after one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub accuracy: f64,
    pub nmw: f64,
}

/// Mini-batch SGD with momentum under `objective`.
///
/// Each epoch reshuffles the training set from the config seed, steps every
/// batch with the objective's surrogate (DM alternates CCE and NMW by global
/// batch index) and records validation accuracy and the NMW indicator rate.
/// The returned weights are rounded to `f32` precision.
pub fn train(
    mut model: TrainedModel,
    train_set: &ImageSet,
    val_set: &ImageSet,
    tax: &Taxonomy,
    objective: ObjectiveKind,
    cfg: &TrainConfig,
) -> Result<(TrainedModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    model.check_objective(objective, tax)?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if val_set.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    for set in [train_set, val_set] {
        if set.side() != model.input_side() {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{0}x{0} images", model.input_side()),
                got: alloc::format!("{0}x{0}", set.side()),
            });
        }
        if let Some(&bad) = set.labels().iter().find(|&&l| l >= tax.len()) {
            return Err(Error::CategoryIndex(bad));
        }
    }

    let mut ws = Workspace::new(&model);
    let mut grads = Gradients::zeros_like(&model);
    let mut velocity = Gradients::zeros_like(&model);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = rng(mix_seed(cfg.seed, 0x7472_6169_6e));
    let mut step: u64 = 0;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let surrogate = match objective {
                ObjectiveKind::Cce => Surrogate::Cce,
                ObjectiveKind::Nmw(s) => Surrogate::Nmw(s),
                ObjectiveKind::Dm => dm_schedule(step),
            };
            grads.clear();
            for &i in batch {
                loss_sum += model.accumulate(
                    train_set.image(i),
                    train_set.labels()[i],
                    surrogate,
                    tax,
                    &mut ws,
                    &mut grads,
                )?;
            }
            let mut scale = cfg.learning_rate / batch.len() as f64;
            if cfg.max_grad_norm > 0.0 {
                let norm = libm::sqrt(grads.squared_norm()) / batch.len() as f64;
                if norm > cfg.max_grad_norm {
                    scale *= cfg.max_grad_norm / norm;
                }
            }
            let params = model.weights.iter_mut().chain(model.biases.iter_mut());
            let vels = velocity.weights.iter_mut().chain(velocity.biases.iter_mut());
            let gs = grads.weights.iter().chain(grads.biases.iter());
            for ((p, v), g) in params.zip(vels).zip(gs) {
                for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = cfg.momentum * *v - scale * g;
                    *p += *v;
                }
            }
            step += 1;
        }

        let preds: Vec<usize> = (0..val_set.len())
            .map(|i| argmax(&model.forward_sample(val_set.image(i), &mut ws)))
            .collect();
        let accuracy = objectives::accuracy(val_set.labels(), &preds)?;
        let nmw = objectives::nmw_indicator(val_set.labels(), &preds, tax, NmwStrictness::TextIff)?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            accuracy,
            nmw: nmw.iter().filter(|&&b| b).count() as f64 / nmw.len() as f64,
        });
    }

    model.snap_to_f32();
    model.meta.objective = Some(objective);
    model.meta.epochs = cfg.epochs;
    model.meta.seed = cfg.seed;
    Ok((model, history))
}
