use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::layers::{self, ConvShape};
use crate::error::{Error, Result};
use crate::imgio::ImageTensor;

/// One weight or bias array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamArray {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ParamArray {
    fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        ParamArray {
            shape,
            values: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub(crate) fn zeroed(params: &[ParamArray]) -> Self {
        AdamState {
            m: params.iter().map(|p| vec![0.0; p.values.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.values.len()]).collect(),
            step: 0,
        }
    }
}

/// Gradients laid out exactly like [`Model::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Gradients(model.params.iter().map(|p| vec![0.0; p.values.len()]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layer {
    /// Conv + ReLU; weights at `param`, bias at `param + 1`.
    Conv { shape: ConvShape, param: usize },
    Pool { h: usize, w: usize, c: usize },
    Dense { inputs: usize, outputs: usize, relu: bool, param: usize },
}

impl Layer {
    fn output_len(&self) -> usize {
        match *self {
            Layer::Conv { shape, .. } => shape.h * shape.w * shape.out_c,
            Layer::Pool { h, w, c } => (h / 2) * (w / 2) * c,
            Layer::Dense { outputs, .. } => outputs,
        }
    }
}

/// Layer sequence and parameter shapes implied by a config.
pub(crate) fn plan(config: &ModelConfig) -> (Vec<Layer>, Vec<Vec<usize>>) {
    let mut layers = Vec::new();
    let mut shapes = Vec::new();
    let (mut h, mut w, mut c) = (config.input_h, config.input_w, config.input_c);
    for block in &config.blocks {
        for _ in 0..block.convs {
            let shape = ConvShape { h, w, in_c: c, out_c: block.filters };
            layers.push(Layer::Conv { shape, param: shapes.len() });
            shapes.push(vec![3, 3, c, block.filters]);
            shapes.push(vec![block.filters]);
            c = block.filters;
        }
        layers.push(Layer::Pool { h, w, c });
        h /= 2;
        w /= 2;
    }
    let mut inputs = h * w * c;
    let widths = config.dense_widths.iter().map(|&n| (n, true));
    for (outputs, relu) in widths.chain(std::iter::once((config.num_classes, false))) {
        layers.push(Layer::Dense { inputs, outputs, relu, param: shapes.len() });
        shapes.push(vec![inputs, outputs]);
        shapes.push(vec![outputs]);
        inputs = outputs;
    }
    (layers, shapes)
}

/// Fan-in of a weight array (biases have none).
fn fan_in(shape: &[usize]) -> Option<usize> {
    match shape {
        [kh, kw, c, _] => Some(kh * kw * c),
        [inputs, _] => Some(*inputs),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Vec<ParamArray>,
    pub adam: AdamState,
    layers: Vec<Layer>,
}

/// Activations recorded during a forward pass for reuse in backward.
struct Trace {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Vec<f64>>,
    argmax: Vec<Vec<usize>>,
}

impl Model {
    /// Model with all parameters zero.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let (layers, shapes) = plan(config);
        let params: Vec<ParamArray> = shapes.into_iter().map(ParamArray::zeros).collect();
        Ok(Model {
            config: config.clone(),
            adam: AdamState::zeroed(&params),
            params,
            layers,
        })
    }

    /// Rebuilds a model from stored parameter arrays, checking their shapes.
    pub fn from_params(config: &ModelConfig, params: Vec<ParamArray>) -> Result<Self> {
        let mut model = Model::zeros(config)?;
        if params.len() != model.params.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameter arrays", model.params.len()),
                found: format!("{}", params.len()),
            });
        }
        for (slot, p) in model.params.iter_mut().zip(params) {
            if slot.shape != p.shape || p.values.len() != slot.values.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{:?}", slot.shape),
                    found: format!("{:?}", p.shape),
                });
            }
            *slot = p;
        }
        Ok(model)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.values.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, img: &ImageTensor) -> Result<()> {
        let c = &self.config;
        if (img.height(), img.width(), img.channels()) != (c.input_h, c.input_w, c.input_c) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}x{}", c.input_h, c.input_w, c.input_c),
                found: format!("{}x{}x{}", img.height(), img.width(), img.channels()),
            });
        }
        Ok(())
    }

    fn forward_trace(&self, img: &ImageTensor) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut argmax = Vec::new();
        acts.push(img.data().to_vec());
        for layer in &self.layers {
            let input = acts.last().expect("input activation");
            let mut out = vec![0.0; layer.output_len()];
            match *layer {
                Layer::Conv { shape, param } => {
                    layers::conv3x3_forward(
                        shape,
                        input,
                        &self.params[param].values,
                        &self.params[param + 1].values,
                        &mut out,
                    );
                    layers::relu_inplace(&mut out);
                }
                Layer::Pool { h, w, c } => {
                    let mut idx = vec![0; out.len()];
                    layers::maxpool2_forward(h, w, c, input, &mut out, &mut idx);
                    argmax.push(idx);
                }
                Layer::Dense { relu, param, .. } => {
                    layers::dense_forward(
                        input,
                        &self.params[param].values,
                        &self.params[param + 1].values,
                        &mut out,
                    );
                    if relu {
                        layers::relu_inplace(&mut out);
                    }
                }
            }
            acts.push(out);
        }
        Trace { acts, argmax }
    }

    /// Accumulates `d loss / d params` into `grads`, given the gradient with
    /// respect to the logits.
    fn backward(&self, trace: &Trace, grad_logits: Vec<f64>, grads: &mut Gradients) {
        let mut grad = grad_logits;
        let mut pool_idx = trace.argmax.len();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.acts[i];
            let output = &trace.acts[i + 1];
            let need_input_grad = i > 0;
            let mut grad_in = vec![0.0; if need_input_grad { input.len() } else { 0 }];
            match *layer {
                Layer::Conv { shape, param } => {
                    layers::relu_backward(output, &mut grad);
                    let (gw, rest) = grads.0[param..].split_at_mut(1);
                    layers::conv3x3_backward(
                        shape,
                        input,
                        &self.params[param].values,
                        &grad,
                        &mut gw[0],
                        &mut rest[0],
                        need_input_grad.then_some(grad_in.as_mut_slice()),
                    );
                }
                Layer::Pool { .. } => {
                    pool_idx -= 1;
                    layers::maxpool2_backward(&trace.argmax[pool_idx], &grad, &mut grad_in);
                }
                Layer::Dense { relu, param, .. } => {
                    if relu {
                        layers::relu_backward(output, &mut grad);
                    }
                    let (gw, rest) = grads.0[param..].split_at_mut(1);
                    layers::dense_backward(
                        input,
                        &self.params[param].values,
                        &grad,
                        &mut gw[0],
                        &mut rest[0],
                        need_input_grad.then_some(grad_in.as_mut_slice()),
                    );
                }
            }
            grad = grad_in;
        }
    }
}

pub fn init_model(config: &ModelConfig, seed: u64) -> Result<Model> {
    let mut model = Model::zeros(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in &mut model.params {
        if let Some(fan) = fan_in(&p.shape) {
            let normal = Normal::new(0.0, (2.0 / fan as f64).sqrt())
                .map_err(|e| Error::InvalidModelConfig(e.to_string()))?;
            for v in &mut p.values {
                *v = normal.sample(&mut rng);
            }
        }
    }
    Ok(model)
}

/// Raw logits, one row per image.
pub fn forward(model: &Model, batch: &[&ImageTensor]) -> Result<Vec<Vec<f64>>> {
    batch
        .iter()
        .map(|img| {
            model.check_input(img)?;
            let mut trace = model.forward_trace(img);
            Ok(trace.acts.pop().expect("logits"))
        })
        .collect()
}

/// Mean softmax cross-entropy over the batch and its parameter gradients.
pub fn loss_and_grad(model: &Model, batch: &[&ImageTensor], labels: &[usize]) -> Result<(f64, Gradients)> {
    let (loss, grads, _) = loss_grad_predictions(model, batch, labels)?;
    Ok((loss, grads))
}

/// As [`loss_and_grad`], also returning the batch predictions.
pub(crate) fn loss_grad_predictions(
    model: &Model,
    batch: &[&ImageTensor],
    labels: &[usize],
) -> Result<(f64, Gradients, Vec<usize>)> {
    if batch.is_empty() || batch.len() != labels.len() {
        return Err(Error::LengthMismatch {
            predictions: batch.len(),
            labels: labels.len(),
        });
    }
    let k = model.config.num_classes;
    let scale = 1.0 / batch.len() as f64;
    let mut grads = Gradients::zeros_like(model);
    let mut total = 0.0;
    let mut predictions = Vec::with_capacity(batch.len());
    for (img, &label) in batch.iter().zip(labels) {
        if label >= k {
            return Err(Error::InvalidLabel { label, classes: k });
        }
        model.check_input(img)?;
        let trace = model.forward_trace(img);
        let logits = trace.acts.last().expect("logits");
        predictions.push(layers::argmax(logits));
        let (loss, mut grad) = layers::softmax_cross_entropy(logits, label);
        total += loss;
        grad.iter_mut().for_each(|g| *g *= scale);
        model.backward(&trace, grad, &mut grads);
    }
    Ok((total * scale, grads, predictions))
}

pub fn predict_batch(model: &Model, batch: &[&ImageTensor]) -> Result<Vec<usize>> {
    Ok(forward(model, batch)?
        .iter()
        .map(|logits| layers::argmax(logits))
        .collect())
}
