//! Dense feed-forward networks, their losses, and the client optimizers.

mod batch;
mod checkpoint;
mod optim;

pub use batch::{BatchCache, MlpBatch};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use optim::{combine, sgd_step, AdamConfig, AdamState};

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Scalar, Tape, Var};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sin,
    Relu,
}

impl Activation {
    pub fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sin => z.sin(),
            Activation::Relu => z.relu(),
        }
    }

    /// Derivative given the pre-activation `z` and the activation `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sin => z.cos(),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn id(self) -> u32 {
        match self {
            Activation::Tanh => 0,
            Activation::Sin => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        match id {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Sin),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Architecture of a dense network: `[input, hidden..., output]` widths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation, seed: u64) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(Error::usage("a network needs at least an input and an output layer"));
        }
        if layer_widths.contains(&0) {
            return Err(Error::usage("layer widths must be at least 1"));
        }
        Ok(MlpSpec { layer_widths, activation, seed })
    }

    /// `input → [width; depth] → output`.
    pub fn uniform(input: usize, width: usize, depth: usize, output: usize, activation: Activation, seed: u64) -> Result<Self> {
        let mut w = vec![input];
        w.extend(std::iter::repeat(width).take(depth));
        w.push(output);
        Self::new(w, activation, seed)
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    /// Number of affine layers.
    pub fn layer_count(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.layer_widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Offsets of `(weights, bias)` for layer `l` in the flat vector.
    /// Weights are stored row-major with shape `(out, in)`.
    pub fn layer_ranges(&self, l: usize) -> (Range<usize>, Range<usize>) {
        let start: usize = self.layer_widths[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let (fan_in, fan_out) = (self.layer_widths[l], self.layer_widths[l + 1]);
        let w_end = start + fan_in * fan_out;
        (start..w_end, w_end..w_end + fan_out)
    }

    pub fn layout(&self, prefix: &str) -> ParamLayout {
        let mut layout = ParamLayout::default();
        for l in 0..self.layer_count() {
            let (w, b) = self.layer_ranges(l);
            layout.push(format!("{prefix}layer{l}"), w.start..b.end);
        }
        layout
    }
}

/// Named contiguous blocks of a flat parameter vector (one per affine layer
/// for plain networks). Used for per-layer weight divergence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub blocks: Vec<(String, Range<usize>)>,
}

impl ParamLayout {
    pub fn push(&mut self, name: String, range: Range<usize>) {
        self.blocks.push((name, range));
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|(_, r)| r.end).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of `other` with every range shifted by `offset`.
    pub fn extend_shifted(&mut self, other: &ParamLayout, offset: usize) {
        for (name, r) in &other.blocks {
            self.blocks.push((name.clone(), r.start + offset..r.end + offset));
        }
    }
}

/// Network weights as one flat vector, laid out per [`MlpSpec::layer_ranges`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    spec: MlpSpec,
    data: Vec<f64>,
}

impl MlpParams {
    pub fn from_flat(spec: MlpSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.num_params() {
            return Err(Error::usage(format!(
                "expected {} parameters for {:?}, got {}",
                spec.num_params(),
                spec.layer_widths,
                data.len()
            )));
        }
        Ok(MlpParams { spec, data })
    }

    pub fn zeros(spec: MlpSpec) -> Self {
        let n = spec.num_params();
        MlpParams { spec, data: vec![0.0; n] }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn layer_count(&self) -> usize {
        self.spec.layer_count()
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        &self.data[self.spec.layer_ranges(l).0]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        &self.data[self.spec.layer_ranges(l).1]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward(&self.spec, &self.data, x)
    }

    /// Records the forward pass on `tape` with every weight as a leaf.
    /// Returns `(parameter leaves, outputs)`.
    pub fn forward_tape<'t>(&self, tape: &'t Tape, x: &[Var<'t>]) -> Result<(Vec<Var<'t>>, Vec<Var<'t>>)> {
        let params = tape.vars(&self.data);
        let out = forward(&self.spec, &params, x)?;
        Ok((params, out))
    }
}

/// Glorot-uniform weights from the counter-based stream `(spec.seed, Init,
/// layer)`; biases zero.
pub fn init_glorot(spec: &MlpSpec) -> MlpParams {
    let mut params = MlpParams::zeros(spec.clone());
    for l in 0..spec.layer_count() {
        let (fan_in, fan_out) = (spec.layer_widths[l], spec.layer_widths[l + 1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut rng = rng::stream(spec.seed, Stream::Init, l as u32);
        let (w, _) = spec.layer_ranges(l);
        for v in &mut params.data[w] {
            *v = rng.gen_range(-bound..=bound);
        }
    }
    params
}

/// Affine + activation on hidden layers, linear output layer.
pub fn forward<S: Scalar>(spec: &MlpSpec, params: &[S], x: &[S]) -> Result<Vec<S>> {
    if x.len() != spec.input_width() {
        return Err(Error::usage(format!(
            "network expects {} inputs, got {}",
            spec.input_width(),
            x.len()
        )));
    }
    if params.len() != spec.num_params() {
        return Err(Error::usage(format!(
            "network expects {} parameters, got {}",
            spec.num_params(),
            params.len()
        )));
    }
    let mut act: Vec<S> = x.to_vec();
    let last = spec.layer_count() - 1;
    for l in 0..=last {
        let (wr, br) = spec.layer_ranges(l);
        let fan_in = spec.layer_widths[l];
        let w = &params[wr];
        let b = &params[br];
        let next: Vec<S> = (0..spec.layer_widths[l + 1])
            .map(|j| {
                let z = S::affine(&w[j * fan_in..(j + 1) * fan_in], &act, b[j]);
                if l < last {
                    spec.activation.apply(z)
                } else {
                    z
                }
            })
            .collect();
        act = next;
    }
    Ok(act)
}

/// `(1/N)·Σ (pred − target)²`.
pub fn mse_loss<S: Scalar>(preds: &[S], targets: &[f64]) -> Result<S> {
    if preds.is_empty() {
        return Err(Error::usage("mean squared error of an empty set"));
    }
    if preds.len() != targets.len() {
        return Err(Error::usage(format!(
            "{} predictions vs {} targets",
            preds.len(),
            targets.len()
        )));
    }
    let mut acc: Option<S> = None;
    for (p, &t) in preds.iter().zip(targets) {
        let d = *p - t;
        let sq = d * d;
        acc = Some(match acc {
            None => sq,
            Some(a) => a + sq,
        });
    }
    Ok(acc.unwrap() / preds.len() as f64)
}
