//! Feedforward ReLU regressor trained with Adam on mean squared error.
//!
//! Hidden layers use He-normal initialization and ReLU; the output layer is
//! linear with Glorot-uniform initialization. Biases start at zero.

use std::path::Path;

use rand::Rng;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, ScalingParams};
use crate::error::{Error, Result};
use crate::predictor::{check_schema, feature_matrix, Predictor};
use crate::rng::{seeded, Stream};

pub const MODEL_FORMAT: &str = "hypotest-mlp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    /// Widths of every layer after the input; the last must be 1.
    pub layer_widths: Vec<usize>,
    /// Inverted dropout on hidden activations during training.
    pub dropout_rate: f64,
    /// Max-norm bound on each unit's incoming weight vector.
    pub max_norm: Option<f64>,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for MlpConfig {
    /// Three hidden layers of fifty units, dropout 0.001, max-norm 5, fifty epochs.
    fn default() -> Self {
        Self {
            layer_widths: vec![50, 50, 50, 1],
            dropout_rate: 0.001,
            max_norm: Some(5.0),
            l2_lambda: 0.0,
            epochs: 50,
            batch_size: 128,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.layer_widths.is_empty() || self.layer_widths.contains(&0) {
            return bad("layer widths must be nonempty and positive");
        }
        if self.layer_widths.last() != Some(&1) {
            return bad("final layer width must be 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must lie in [0, 1)");
        }
        if matches!(self.max_norm, Some(c) if !(c > 0.0 && c.is_finite())) {
            return bad("max-norm bound must be positive");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2 lambda must be nonnegative");
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && a.epsilon > 0.0)
        {
            return bad("invalid Adam hyperparameters");
        }
        Ok(())
    }
}

/// Dense layer. `weights[i * n_out + o]` connects input `i` to unit `o`.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    n_in: usize,
    n_out: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    /// `out[b] = bias + x[b] · W` for a row-major batch.
    fn forward(&self, x: &[f64], batch: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(batch * self.n_out);
        for b in 0..batch {
            out.extend_from_slice(&self.biases);
            let row = &x[b * self.n_in..(b + 1) * self.n_in];
            let z = &mut out[b * self.n_out..];
            for (i, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let w = &self.weights[i * self.n_out..(i + 1) * self.n_out];
                for (zo, wo) in z.iter_mut().zip(w) {
                    *zo += a * wo;
                }
            }
        }
    }

    fn incoming_norm(&self, unit: usize) -> f64 {
        (0..self.n_in)
            .map(|i| self.weights[i * self.n_out + unit].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn apply_max_norm(&mut self, bound: f64) {
        for o in 0..self.n_out {
            let norm = self.incoming_norm(o);
            if norm > bound {
                let s = bound / norm;
                for i in 0..self.n_in {
                    self.weights[i * self.n_out + o] *= s;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Gradients in the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(layers: &[Layer]) -> Self {
        Self {
            weights: layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    /// Flattened in [`TrainedModel::parameter`] order.
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

struct Adam {
    cfg: AdamConfig,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    fn new(cfg: AdamConfig, layers: &[Layer]) -> Self {
        Self {
            cfg,
            step: 0,
            m: Gradients::zeros_like(layers),
            v: Gradients::zeros_like(layers),
        }
    }

    fn update(&mut self, layers: &mut [Layer], grads: &Gradients) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        let apply = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        };
        for (l, layer) in layers.iter_mut().enumerate() {
            apply(
                &mut layer.weights,
                &grads.weights[l],
                &mut self.m.weights[l],
                &mut self.v.weights[l],
            );
            apply(
                &mut layer.biases,
                &grads.biases[l],
                &mut self.m.biases[l],
                &mut self.v.biases[l],
            );
        }
    }
}

/// A feedforward network with its training provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    features: Vec<String>,
    layers: Vec<Layer>,
    config: MlpConfig,
    loss_trace: Vec<f64>,
    scaling: Option<ScalingParams>,
}

/// Per-batch buffers reused across training steps.
struct Scratch {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl TrainedModel {
    /// Freshly initialized, untrained network.
    pub fn init<R: Rng + ?Sized>(
        config: &MlpConfig,
        features: Vec<String>,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if features.is_empty() {
            return Err(Error::InvalidConfig("at least one feature required".into()));
        }
        let mut layers = Vec::with_capacity(config.layer_widths.len());
        let mut n_in = features.len();
        let last = config.layer_widths.len() - 1;
        for (l, &n_out) in config.layer_widths.iter().enumerate() {
            let mut layer = Layer::zeros(n_in, n_out);
            if l == last {
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
                layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
            } else {
                let dist = Normal::new(0.0, (2.0 / n_in as f64).sqrt()).expect("positive sd");
                layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
            }
            layers.push(layer);
            n_in = n_out;
        }
        Ok(Self {
            features,
            layers,
            config: config.clone(),
            loss_trace: Vec::new(),
            scaling: None,
        })
    }

    /// All weights and biases zero.
    pub fn zeroed(config: &MlpConfig, features: Vec<String>) -> Result<Self> {
        let mut m = Self::init(config, features, &mut seeded(0))?;
        for l in &mut m.layers {
            l.weights.fill(0.0);
        }
        Ok(m)
    }

    /// Initializes from `config.seed` and trains on `table`.
    pub fn fit(table: &DataTable, config: &MlpConfig) -> Result<Self> {
        let mut rng = seeded(config.seed);
        let model = Self::init(config, table.feature_names(), &mut rng)?;
        model.train(table, &mut rng)
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn scaling(&self) -> Option<&ScalingParams> {
        self.scaling.as_ref()
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.n_in, l.n_out)).collect()
    }

    /// Incoming weights of `unit` in layer `layer`.
    pub fn incoming_weights(&self, layer: usize, unit: usize) -> Vec<f64> {
        let l = &self.layers[layer];
        (0..l.n_in).map(|i| l.weights[i * l.n_out + unit]).collect()
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.layers[layer].biases
    }

    /// Severs input `feature` from the network by zeroing its outgoing weights.
    pub fn zero_input(&mut self, feature: &str) -> Result<()> {
        let i = self
            .features
            .iter()
            .position(|f| f == feature)
            .ok_or_else(|| Error::UnknownColumn(feature.to_string()))?;
        let first = &mut self.layers[0];
        first.weights[i * first.n_out..(i + 1) * first.n_out].fill(0.0);
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn parameter_slot(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                return &mut l.biases[idx];
            }
            idx -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `idx` in flattened order: layer by layer, weights then biases.
    pub fn parameter(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.weights.len() {
                return l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                return l.biases[idx];
            }
            idx -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_parameter(&mut self, idx: usize, value: f64) {
        *self.parameter_slot(idx) = value;
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| &l.weights)
            .map(|w| w * w)
            .sum()
    }

    fn forward_inference(&self, rows: &[f64], n_rows: usize) -> Vec<f64> {
        const BLOCK: usize = 512;
        let p = self.features.len();
        let mut out = Vec::with_capacity(n_rows);
        let mut a = Vec::new();
        let mut z = Vec::new();
        for start in (0..n_rows).step_by(BLOCK) {
            let batch = BLOCK.min(n_rows - start);
            a.clear();
            a.extend_from_slice(&rows[start * p..(start + batch) * p]);
            for (l, layer) in self.layers.iter().enumerate() {
                layer.forward(&a, batch, &mut z);
                if l + 1 < self.layers.len() {
                    z.iter_mut().for_each(|v| *v = v.max(0.0));
                }
                std::mem::swap(&mut a, &mut z);
            }
            out.extend_from_slice(&a);
        }
        out
    }

    /// Forward pass retaining activations; `dropout` holds the stream and rate.
    fn forward_train(
        &self,
        x: &[f64],
        batch: usize,
        scratch: &mut Scratch,
        mut dropout: Option<(&mut Stream, f64)>,
    ) {
        scratch.acts.resize_with(self.layers.len() + 1, Vec::new);
        scratch.acts[0].clear();
        scratch.acts[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = scratch.acts.split_at_mut(l + 1);
            let out = &mut tail[0];
            layer.forward(&head[l], batch, out);
            if l + 1 < self.layers.len() {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
                if let Some((rng, rate)) = dropout.as_mut() {
                    let keep = 1.0 / (1.0 - *rate);
                    for v in out.iter_mut() {
                        if rng.random::<f64>() < *rate {
                            *v = 0.0;
                        } else {
                            *v *= keep;
                        }
                    }
                }
            }
        }
    }

    /// Backpropagates the batch MSE. Returns the data loss.
    fn backward(
        &self,
        targets: &[f64],
        batch: usize,
        scratch: &mut Scratch,
        grads: &mut Gradients,
        dropout_rate: f64,
    ) -> f64 {
        let n_layers = self.layers.len();
        let preds = &scratch.acts[n_layers];
        let mut loss = 0.0;
        scratch.delta.clear();
        for (p, y) in preds.iter().zip(targets) {
            let r = p - y;
            loss += r * r;
            scratch.delta.push(2.0 * r / batch as f64);
        }
        loss /= batch as f64;
        let keep = 1.0 / (1.0 - dropout_rate);

        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let (n_in, n_out) = (layer.n_in, layer.n_out);
            let a_in = &scratch.acts[l];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            gw.fill(0.0);
            gb.fill(0.0);
            for b in 0..batch {
                let d = &scratch.delta[b * n_out..(b + 1) * n_out];
                for (g, dv) in gb.iter_mut().zip(d) {
                    *g += dv;
                }
                for (i, &a) in a_in[b * n_in..(b + 1) * n_in].iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (g, dv) in gw[i * n_out..(i + 1) * n_out].iter_mut().zip(d) {
                        *g += a * dv;
                    }
                }
            }
            if l == 0 {
                break;
            }
            scratch.delta_prev.clear();
            scratch.delta_prev.resize(batch * n_in, 0.0);
            for b in 0..batch {
                let d = &scratch.delta[b * n_out..(b + 1) * n_out];
                for i in 0..n_in {
                    // ReLU gate on the previous layer's (post-dropout) activation.
                    if a_in[b * n_in + i] > 0.0 {
                        let w = &layer.weights[i * n_out..(i + 1) * n_out];
                        scratch.delta_prev[b * n_in + i] = keep * dot(w, d);
                    }
                }
            }
            std::mem::swap(&mut scratch.delta, &mut scratch.delta_prev);
        }
        loss
    }

    fn add_l2(&self, grads: &mut Gradients, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let mut penalty = 0.0;
        for (l, layer) in self.layers.iter().enumerate() {
            for (g, w) in grads.weights[l].iter_mut().zip(&layer.weights) {
                *g += 2.0 * lambda * w;
                penalty += lambda * w * w;
            }
            for (g, b) in grads.biases[l].iter_mut().zip(&layer.biases) {
                *g += 2.0 * lambda * b;
                penalty += lambda * b * b;
            }
        }
        penalty
    }

    /// Loss (MSE plus L2 penalty) and its exact gradient on one batch with
    /// dropout disabled. `rows` is row-major in feature order.
    pub fn loss_and_gradients(&self, rows: &[f64], targets: &[f64]) -> Result<(f64, Gradients)> {
        let batch = targets.len();
        if batch == 0 {
            return Err(Error::EmptyInput);
        }
        if rows.len() != batch * self.features.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} rows of {} features",
                rows.len(),
                batch,
                self.features.len()
            )));
        }
        let mut scratch = Scratch {
            acts: Vec::new(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
        };
        let mut grads = Gradients::zeros_like(&self.layers);
        self.forward_train(rows, batch, &mut scratch, None);
        let loss = self.backward(targets, batch, &mut scratch, &mut grads, 0.0);
        let penalty = self.add_l2(&mut grads, self.config.l2_lambda);
        Ok((loss + penalty, grads))
    }

    /// One step of a freshly initialized Adam optimizer on an explicit batch,
    /// followed by the max-norm projection.
    pub fn step_on_batch(&mut self, rows: &[f64], targets: &[f64]) -> Result<f64> {
        let (loss, grads) = self.loss_and_gradients(rows, targets)?;
        let mut adam = Adam::new(self.config.adam, &self.layers);
        adam.update(&mut self.layers, &grads);
        if let Some(c) = self.config.max_norm {
            self.layers.iter_mut().for_each(|l| l.apply_max_norm(c));
        }
        Ok(loss)
    }

    /// Minibatch Adam on the table's feature columns against its target.
    pub fn train<R: Rng + ?Sized>(mut self, table: &DataTable, rng: &mut R) -> Result<Self> {
        let config = self.config.clone();
        config.validate()?;
        check_schema(table, &self.features)?;
        let target_name = table
            .target_name()
            .ok_or_else(|| Error::MissingTarget(String::new()))?;
        if !table.is_standardized(target_name) {
            return Err(Error::UnstandardizedTarget(target_name.to_string()));
        }
        let x = feature_matrix(table, &self.features)?;
        let y = table.target()?;
        let p = self.features.len();
        let n = table.n_rows();

        let mut stream = seeded(rng.random());
        let mut order: Vec<usize> = (0..n).collect();
        let mut adam = Adam::new(config.adam, &self.layers);
        let mut grads = Gradients::zeros_like(&self.layers);
        let mut scratch = Scratch {
            acts: Vec::new(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
        };
        let mut bx = Vec::with_capacity(config.batch_size * p);
        let mut by = Vec::with_capacity(config.batch_size);
        self.loss_trace.clear();

        for epoch in 0..config.epochs {
            order.shuffle(&mut stream);
            let mut total = 0.0;
            for chunk in order.chunks(config.batch_size) {
                bx.clear();
                by.clear();
                for &i in chunk {
                    bx.extend_from_slice(&x[i * p..(i + 1) * p]);
                    by.push(y[i]);
                }
                let dropout = (config.dropout_rate > 0.0).then_some((&mut stream, config.dropout_rate));
                self.forward_train(&bx, chunk.len(), &mut scratch, dropout);
                let loss =
                    self.backward(&by, chunk.len(), &mut scratch, &mut grads, config.dropout_rate);
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
                }
                self.add_l2(&mut grads, config.l2_lambda);
                adam.update(&mut self.layers, &grads);
                if let Some(c) = config.max_norm {
                    self.layers.iter_mut().for_each(|l| l.apply_max_norm(c));
                }
                total += loss * chunk.len() as f64;
            }
            let epoch_mse = total / n as f64;
            if !epoch_mse.is_finite() {
                return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
            }
            self.loss_trace.push(epoch_mse);
        }
        self.scaling = table.scaling().cloned();
        Ok(self)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            features: self.features.clone(),
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    n_in: l.n_in,
                    n_out: l.n_out,
                    weights: (0..l.n_out)
                        .map(|o| (0..l.n_in).map(|i| l.weights[i * l.n_out + o]).collect())
                        .collect(),
                    biases: l.biases.clone(),
                })
                .collect(),
            loss_trace: self.loss_trace.clone(),
            scaling: self.scaling.clone(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        let mut n_in = doc.features.len();
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (k, ld) in doc.layers.into_iter().enumerate() {
            if ld.n_in != n_in
                || ld.weights.len() != ld.n_out
                || ld.biases.len() != ld.n_out
                || ld.weights.iter().any(|r| r.len() != ld.n_in)
            {
                return Err(Error::ShapeMismatch(format!("layer {k} dimensions inconsistent")));
            }
            let mut layer = Layer::zeros(ld.n_in, ld.n_out);
            for (o, row) in ld.weights.iter().enumerate() {
                for (i, &w) in row.iter().enumerate() {
                    layer.weights[i * ld.n_out + o] = w;
                }
            }
            layer.biases = ld.biases;
            n_in = ld.n_out;
            layers.push(layer);
        }
        if layers.is_empty() || n_in != 1 {
            return Err(Error::ShapeMismatch("network must end in one output".into()));
        }
        Ok(Self {
            features: doc.features,
            layers,
            config: doc.config,
            loss_trace: doc.loss_trace,
            scaling: doc.scaling,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_document())?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let doc: ModelDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_document(doc)
    }
}

impl Predictor for TrainedModel {
    fn feature_names(&self) -> &[String] {
        &self.features
    }

    fn predict_rows(&self, rows: &[f64], n_rows: usize) -> Result<Vec<f64>> {
        if rows.len() != n_rows * self.features.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: n_rows * self.features.len(),
            });
        }
        Ok(self.forward_inference(rows, n_rows))
    }
}

/// On-disk JSON form of a [`TrainedModel`]. `weights[o]` is the incoming
/// weight row of unit `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub features: Vec<String>,
    pub config: MlpConfig,
    pub layers: Vec<LayerDocument>,
    pub loss_trace: Vec<f64>,
    pub scaling: Option<ScalingParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Column};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    fn small_config(widths: &[usize]) -> MlpConfig {
        MlpConfig {
            layer_widths: widths.to_vec(),
            dropout_rate: 0.0,
            max_norm: None,
            l2_lambda: 0.0,
            epochs: 5,
            batch_size: 16,
            ..Default::default()
        }
    }

    fn identity_table(n: usize, seed: u64) -> DataTable {
        let mut rng = seeded(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let t = DataTable::new(
            vec![
                Column::new("a", a.clone()),
                Column::new("b", b),
                Column::new("y", a),
            ],
            Some("y"),
        )
        .unwrap();
        standardize(&t).unwrap().0
    }

    #[test]
    fn he_normal_spread() {
        let cfg = small_config(&[50, 50, 1]);
        let m = TrainedModel::init(&cfg, names(50), &mut seeded(11)).unwrap();
        let w = &m.layers[1].weights;
        assert_eq!(w.len(), 2500);
        let mean = w.iter().sum::<f64>() / 2500.0;
        let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2500.0).sqrt();
        assert!((sd / 0.2 - 1.0).abs() < 0.1, "sd {sd}");
    }

    #[test]
    fn glorot_output_bounds_and_zero_biases() {
        let cfg = small_config(&[50, 1]);
        let m = TrainedModel::init(&cfg, names(4), &mut seeded(1)).unwrap();
        let limit = (6.0f64 / 51.0).sqrt();
        assert!(m.layers[1].weights.iter().all(|w| w.abs() <= limit));
        assert!(m.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = small_config(&[8, 1]);
        let a = TrainedModel::init(&cfg, names(3), &mut seeded(7)).unwrap();
        let b = TrainedModel::init(&cfg, names(3), &mut seeded(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small_config(&[8, 1]);
        cfg.epochs = 0;
        assert!(matches!(
            TrainedModel::init(&cfg, names(2), &mut seeded(0)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(TrainedModel::init(&small_config(&[8, 2]), names(2), &mut seeded(0)).is_err());
        assert!(TrainedModel::init(&small_config(&[]), names(2), &mut seeded(0)).is_err());
        assert!(TrainedModel::init(&small_config(&[8, 1]), vec![], &mut seeded(0)).is_err());
        let mut cfg = small_config(&[8, 1]);
        cfg.dropout_rate = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_network_predicts_zero() {
        let m = TrainedModel::zeroed(&small_config(&[8, 8, 1]), vec!["a".into(), "b".into()]).unwrap();
        let t = identity_table(20, 0);
        assert!(m.predict(&t).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn learns_identity_map() {
        let mut cfg = small_config(&[8, 1]);
        cfg.epochs = 200;
        cfg.seed = 3;
        let t = identity_table(500, 1);
        let m = TrainedModel::fit(&t, &cfg).unwrap();
        let last = *m.loss_trace().last().unwrap();
        assert!(last < 0.05, "final mse {last}");
        assert!(last <= m.loss_trace()[0]);
        assert_eq!(m.loss_trace().len(), 200);
    }

    #[test]
    fn training_is_reproducible() {
        let cfg = small_config(&[8, 1]);
        let t = identity_table(100, 2);
        let a = TrainedModel::fit(&t, &cfg).unwrap();
        let b = TrainedModel::fit(&t, &cfg).unwrap();
        assert_eq!(a.loss_trace(), b.loss_trace());
        assert_eq!(a, b);
    }

    #[test]
    fn train_rejects_unstandardized_target() {
        let t = DataTable::new(
            vec![
                Column::new("a", vec![1.0, 2.0, 3.0]),
                Column::new("y", vec![10.0, 20.0, 31.0]),
            ],
            Some("y"),
        )
        .unwrap();
        let m = TrainedModel::init(&small_config(&[4, 1]), vec!["a".into()], &mut seeded(0)).unwrap();
        assert!(matches!(
            m.train(&t, &mut seeded(0)),
            Err(Error::UnstandardizedTarget(_))
        ));
    }

    #[test]
    fn train_rejects_wrong_schema() {
        let t = identity_table(10, 0);
        let m = TrainedModel::init(&small_config(&[4, 1]), vec!["a".into()], &mut seeded(0)).unwrap();
        assert!(matches!(
            m.train(&t, &mut seeded(0)),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn predictions_follow_row_order() {
        let cfg = small_config(&[8, 1]);
        let t = identity_table(30, 4);
        let m = TrainedModel::fit(&t, &cfg).unwrap();
        let p = m.predict(&t).unwrap();
        assert_eq!(p, m.predict(&t).unwrap());
        let order: Vec<usize> = (0..30).rev().collect();
        let rev = m.predict(&t.select_rows(&order).unwrap()).unwrap();
        let expect: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        assert_eq!(rev, expect);
    }

    #[test]
    fn max_norm_holds_after_each_step() {
        let mut cfg = small_config(&[8, 8, 1]);
        cfg.max_norm = Some(0.5);
        cfg.adam.learning_rate = 0.05;
        let t = identity_table(64, 5);
        let x = feature_matrix(&t, &t.feature_names()).unwrap();
        let y = t.target().unwrap();
        let mut m = TrainedModel::init(&cfg, t.feature_names(), &mut seeded(5)).unwrap();
        for _ in 0..20 {
            m.step_on_batch(&x, y).unwrap();
            for (l, layer) in m.layers.iter().enumerate() {
                for o in 0..layer.n_out {
                    let norm = m.incoming_weights(l, o).iter().map(|w| w * w).sum::<f64>().sqrt();
                    assert!(norm <= 0.5 + 1e-9, "layer {l} unit {o}: {norm}");
                }
            }
        }
    }

    #[test]
    fn l2_step_shrinks_weights_without_data_loss() {
        let mut cfg = small_config(&[6, 1]);
        cfg.l2_lambda = 0.1;
        let t = identity_table(16, 6);
        let x = feature_matrix(&t, &t.feature_names()).unwrap();
        let mut m = TrainedModel::init(&cfg, t.feature_names(), &mut seeded(6)).unwrap();
        let y = m.predict(&t).unwrap();
        let before = m.weight_sq_norm();
        m.step_on_batch(&x, &y).unwrap();
        assert!(m.weight_sq_norm() < before);
    }

    #[test]
    fn document_round_trip() {
        let cfg = small_config(&[5, 3, 1]);
        let m = TrainedModel::init(&cfg, names(2), &mut seeded(9)).unwrap();
        let back = TrainedModel::from_document(m.to_document()).unwrap();
        assert_eq!(m, back);
        let mut doc = m.to_document();
        doc.version = 99;
        assert!(TrainedModel::from_document(doc).is_err());
        let mut doc = m.to_document();
        doc.layers[1].weights.pop();
        assert!(TrainedModel::from_document(doc).is_err());
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
