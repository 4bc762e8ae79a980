use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::layers::{
    conv_backward, conv_forward, dense_backward, dense_forward, pool_backward, pool_forward,
};
use super::{Genotype, LayerSpec, Tensor, PARAM_BUDGET};
use crate::dataset::Taxonomy;
use crate::objectives::{softmax_backward, surrogate_loss, ObjectiveKind, Surrogate};
use crate::util::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// `None` for an untrained model.
    pub objective: Option<ObjectiveKind>,
    pub epochs: usize,
    pub seed: u64,
}

/// A realized network: genotype, head size and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    genotype: Genotype,
    input_side: usize,
    head_classes: usize,
    specs: Vec<LayerSpec>,
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) biases: Vec<Vec<f64>>,
    pub meta: TrainingMeta,
}

/// Gradient buffers shaped like a model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &TrainedModel) -> Self {
        Gradients {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.fill(0.0);
        }
    }

    /// Flattened in parameter order: per layer, weights then biases.
    pub fn squared_norm(&self) -> f64 {
        self.weights.iter().chain(&self.biases).flatten().map(|g| g * g).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Trainable scalar count of `genotype` realized with `head_classes` outputs.
pub fn param_count(genotype: &Genotype, head_classes: usize, input_side: usize) -> Result<usize> {
    genotype.param_count(input_side, head_classes)
}

/// Builds an untrained model with He-uniform weights and zero biases.
///
/// Initial weights are rounded to `f32` precision.
pub fn realize(
    genotype: &Genotype,
    head_classes: usize,
    input_side: usize,
    seed: u64,
) -> Result<TrainedModel> {
    let specs = check_realizable(genotype, head_classes, input_side)?;
    let mut r = rng(seed);
    let mut weights = Vec::with_capacity(specs.len());
    let mut biases = Vec::with_capacity(specs.len());
    for spec in &specs {
        let n = spec.weight_len();
        let w = if n == 0 {
            Vec::new()
        } else {
            let limit = libm::sqrt(6.0 / spec.fan_in() as f64);
            let dist = Uniform::new_inclusive(-limit, limit);
            (0..n).map(|_| f64::from(dist.sample(&mut r) as f32)).collect()
        };
        weights.push(w);
        biases.push(vec![0.0; spec.bias_len()]);
    }
    Ok(TrainedModel {
        genotype: genotype.clone(),
        input_side,
        head_classes,
        specs,
        weights,
        biases,
        meta: TrainingMeta {
            objective: None,
            epochs: 0,
            seed,
        },
    })
}

fn check_realizable(genotype: &Genotype, head_classes: usize, input_side: usize) -> Result<Vec<LayerSpec>> {
    genotype.validate()?;
    if head_classes < 2 {
        return Err(Error::InvalidParam(alloc::format!(
            "head needs at least 2 classes, got {head_classes}"
        )));
    }
    let specs = genotype.layers(input_side, head_classes)?;
    let count: usize = specs.iter().map(|l| l.weight_len() + l.bias_len()).sum();
    if count > PARAM_BUDGET {
        return Err(Error::BudgetExceeded {
            count,
            limit: PARAM_BUDGET,
        });
    }
    Ok(specs)
}

/// Scratch buffers for one forward/backward pass.
pub(crate) struct Workspace {
    acts: Vec<Vec<f64>>,
    argmax: Vec<Vec<u32>>,
    patches: Vec<f64>,
    dpatches: Vec<f64>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(model: &TrainedModel) -> Self {
        let first = model.specs.first().map_or(0, |s| s.input_len());
        let mut acts = vec![vec![0.0; first]];
        let mut argmax = Vec::new();
        let mut patch = 0;
        let mut widest = first;
        for s in &model.specs {
            acts.push(vec![0.0; s.output_len()]);
            widest = widest.max(s.output_len());
            argmax.push(match s {
                LayerSpec::MaxPool { .. } => vec![0u32; s.output_len()],
                _ => Vec::new(),
            });
            if let LayerSpec::Conv { side, .. } = *s {
                patch = patch.max(side * side * s.fan_in());
            }
        }
        Workspace {
            acts,
            argmax,
            patches: vec![0.0; patch],
            dpatches: vec![0.0; patch],
            grad_a: vec![0.0; widest],
            grad_b: vec![0.0; widest],
        }
    }
}

impl TrainedModel {
    /// Assembles a model from stored parameters, checking every shape.
    pub fn from_parts(
        genotype: Genotype,
        input_side: usize,
        head_classes: usize,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        meta: TrainingMeta,
    ) -> Result<Self> {
        let specs = check_realizable(&genotype, head_classes, input_side)?;
        if weights.len() != specs.len() || biases.len() != specs.len() {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{} layers", specs.len()),
                got: alloc::format!("{} weight / {} bias tensors", weights.len(), biases.len()),
            });
        }
        for (i, s) in specs.iter().enumerate() {
            if weights[i].len() != s.weight_len() || biases[i].len() != s.bias_len() {
                return Err(Error::ShapeMismatch {
                    expected: alloc::format!("layer {i}: {} + {}", s.weight_len(), s.bias_len()),
                    got: alloc::format!("{} + {}", weights[i].len(), biases[i].len()),
                });
            }
        }
        Ok(TrainedModel {
            genotype,
            input_side,
            head_classes,
            specs,
            weights,
            biases,
            meta,
        })
    }

    pub fn genotype(&self) -> &Genotype {
        &self.genotype
    }

    pub fn input_side(&self) -> usize {
        self.input_side
    }

    pub fn head_classes(&self) -> usize {
        self.head_classes
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn input_len(&self) -> usize {
        self.input_side * self.input_side * 3
    }

    /// Sum of realized parameter tensor sizes.
    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    /// Mutable access to every parameter, flattened in the same order as
    /// [`Gradients::flat`].
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    /// Rounds every parameter to the nearest `f32`.
    pub fn snap_to_f32(&mut self) {
        for p in self.params_mut() {
            *p = f64::from(*p as f32);
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{}x{}x3 input", self.input_side, self.input_side),
                got: alloc::format!("{} values", x.len()),
            });
        }
        Ok(())
    }

    /// Batched inference: `(N, side, side, 3)` in, `(N, head_classes)` probabilities out.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let s = self.input_side;
        if batch.shape().len() != 4 || batch.shape()[1..] != [s, s, 3] {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("(N, {s}, {s}, 3)"),
                got: alloc::format!("{:?}", batch.shape()),
            });
        }
        let n = batch.shape()[0];
        let mut ws = Workspace::new(self);
        let mut out = Vec::with_capacity(n * self.head_classes);
        for i in 0..n {
            out.extend(self.forward_sample(batch.row(i), &mut ws));
        }
        Tensor::new(vec![n, self.head_classes], out)
    }

    /// Class probabilities for one HWC input.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward_sample(x, &mut Workspace::new(self)))
    }

    /// Argmax class per input; ties go to the lowest index.
    pub fn predict(&self, inputs: &[f64]) -> Result<Vec<usize>> {
        let len = self.input_len();
        if inputs.len() % len != 0 {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("multiple of {len} values"),
                got: alloc::format!("{}", inputs.len()),
            });
        }
        let mut ws = Workspace::new(self);
        Ok(inputs
            .chunks_exact(len)
            .map(|x| argmax(&self.forward_sample(x, &mut ws)))
            .collect())
    }

    pub(crate) fn forward_sample(&self, x: &[f64], ws: &mut Workspace) -> Vec<f64> {
        ws.acts[0].copy_from_slice(x);
        for (i, spec) in self.specs.iter().enumerate() {
            let (before, after) = ws.acts.split_at_mut(i + 1);
            let input = &before[i];
            let out = &mut after[0];
            match spec {
                LayerSpec::Conv { .. } => conv_forward(
                    spec,
                    &self.weights[i],
                    &self.biases[i],
                    input,
                    out,
                    &mut ws.patches,
                ),
                LayerSpec::MaxPool { .. } => pool_forward(spec, input, out, &mut ws.argmax[i]),
                LayerSpec::Dense { .. } => {
                    dense_forward(spec, &self.weights[i], &self.biases[i], input, out)
                }
            }
        }
        softmax(ws.acts.last().expect("at least one layer"))
    }

    /// Loss of one sample under `surrogate`; gradients are added into `grads`.
    pub fn loss_and_grad(
        &self,
        x: &[f64],
        truth: usize,
        surrogate: Surrogate,
        tax: &Taxonomy,
        grads: &mut Gradients,
    ) -> Result<f64> {
        self.check_input(x)?;
        self.accumulate(x, truth, surrogate, tax, &mut Workspace::new(self), grads)
    }

    pub(crate) fn accumulate(
        &self,
        x: &[f64],
        truth: usize,
        surrogate: Surrogate,
        tax: &Taxonomy,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let probs = self.forward_sample(x, ws);
        let (loss, gp) = surrogate_loss(surrogate, &probs, truth, tax)?;
        if gp.iter().all(|&g| g == 0.0) {
            return Ok(loss);
        }
        let dlogits = softmax_backward(&probs, &gp);
        let n = dlogits.len();
        ws.grad_a[..n].copy_from_slice(&dlogits);

        for i in (0..self.specs.len()).rev() {
            let spec = &self.specs[i];
            let out_len = spec.output_len();
            let in_len = spec.input_len();
            let want_input = i > 0;
            let (dout_buf, din_buf) = (&mut ws.grad_a, &mut ws.grad_b);
            let dout = &mut dout_buf[..out_len];
            let din = if want_input {
                Some(&mut din_buf[..in_len])
            } else {
                None
            };
            match spec {
                LayerSpec::Conv { .. } => conv_backward(
                    spec,
                    &self.weights[i],
                    &ws.acts[i],
                    &ws.acts[i + 1],
                    dout,
                    &mut grads.weights[i],
                    &mut grads.biases[i],
                    din,
                    &mut ws.patches,
                    &mut ws.dpatches,
                ),
                LayerSpec::MaxPool { .. } => {
                    if let Some(din) = din {
                        pool_backward(dout, &ws.argmax[i], din);
                    }
                }
                LayerSpec::Dense { .. } => dense_backward(
                    spec,
                    &self.weights[i],
                    &ws.acts[i],
                    &ws.acts[i + 1],
                    dout,
                    &mut grads.weights[i],
                    &mut grads.biases[i],
                    din,
                ),
            }
            core::mem::swap(&mut ws.grad_a, &mut ws.grad_b);
        }
        Ok(loss)
    }

    /// Checks that the objective matches the head size for this taxonomy.
    pub fn check_objective(&self, objective: ObjectiveKind, tax: &Taxonomy) -> Result<()> {
        let expected = objective.head_classes(tax);
        if self.head_classes != expected {
            return Err(Error::HeadMismatch {
                objective: objective.name(),
                expected,
                got: self.head_classes,
            });
        }
        Ok(())
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = z.iter().map(|v| libm::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    for v in &mut e {
        *v /= s;
    }
    e
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}
