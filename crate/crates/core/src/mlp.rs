//! Feed-forward classifier trained by minibatch Adam.
//!
//! The training objective is mean log-loss plus `alpha / 2 * ||W||^2 / n`
//! over each minibatch of `n` samples. Binary problems use one logistic
//! output unit, multiclass problems a softmax layer. Hidden-layer deltas go
//! through [`scale_by_derivative`], so m-arcsinh backprop follows whichever
//! [`DerivativeMode`](crate::functions::DerivativeMode) the activation
//! carries.

use ndarray::{Array1, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::functions::{apply_activation_inplace, scale_by_derivative, ActivationKind, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub activation: ActivationKind,
    /// Maximum number of epochs.
    pub max_iter: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// `None` means `min(200, n_samples)`.
    pub batch_size: Option<usize>,
    pub l2_alpha: f64,
    pub tol: f64,
    pub n_iter_no_change: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl MlpConfig {
    pub const BENCH_SEED: u64 = 1;
    pub const BENCH_MAX_ITER: usize = 300;

    pub fn new(activation: ActivationKind) -> Self {
        MlpConfig {
            hidden_sizes: vec![100],
            activation,
            max_iter: Self::BENCH_MAX_ITER,
            seed: Self::BENCH_SEED,
            learning_rate: 1e-3,
            batch_size: None,
            l2_alpha: 1e-4,
            tol: 1e-4,
            n_iter_no_change: 10,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return bad("hidden_sizes must be non-empty and positive");
        }
        if self.max_iter == 0 || self.n_iter_no_change == 0 || self.batch_size == Some(0) {
            return bad("max_iter, n_iter_no_change and batch_size must be >= 1");
        }
        let positive = [self.learning_rate, self.tol, self.adam_eps];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("learning_rate, tol and adam_eps must be > 0");
        }
        if !(self.l2_alpha >= 0.0) {
            return bad("l2_alpha must be >= 0");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must be in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    /// Single sigmoid unit, probability of class 1.
    Logistic,
    Softmax,
}

/// Dense layer; `weights` is `fan_in x fan_out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Array1<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub activation: ActivationKind,
    pub output: OutputTransform,
}

struct Forward {
    /// Layer inputs: `inputs[0]` is the batch, `inputs[l]` the output of
    /// hidden layer `l - 1`.
    inputs: Vec<Matrix>,
    /// Hidden pre-activations, only kept when the derivative needs them.
    pre: Vec<Matrix>,
    probs: Matrix,
}

impl Network {
    /// Glorot-uniform weights and biases in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot<R: Rng>(sizes: &[usize], activation: ActivationKind, output: OutputTransform, rng: &mut R) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Matrix::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..bound));
                let bias = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-bound..bound));
                Layer { weights, bias }
            })
            .collect();
        Network {
            layers,
            activation,
            output,
        }
    }

    pub fn zeros(sizes: &[usize], activation: ActivationKind, output: OutputTransform) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                weights: Matrix::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Network {
            layers,
            activation,
            output,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.ncols())
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.iter().map(|w| w * w).sum::<f64>()).sum()
    }

    fn forward(&self, x: &Matrix, keep: bool) -> Forward {
        let keep_pre = keep && self.activation.derivative_takes_pre_activation();
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::new();
        let mut current = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weights) + &layer.bias;
            if l < last {
                if keep_pre {
                    pre.push(z.clone());
                }
                apply_activation_inplace(self.activation, &mut z);
            } else {
                output_transform(self.output, &mut z);
            }
            if keep {
                inputs.push(current);
            }
            current = z;
        }
        Forward {
            inputs,
            pre,
            probs: current,
        }
    }

    /// Output-layer probabilities (one column for the logistic output).
    pub fn output_probabilities(&self, x: &Matrix) -> Matrix {
        self.forward(x, false).probs
    }

    pub fn loss(&self, x: &Matrix, target: &Matrix, l2_alpha: f64) -> f64 {
        let probs = self.output_probabilities(x);
        log_loss(self.output, &probs, target) + 0.5 * l2_alpha * self.weight_norm_sq() / x.nrows() as f64
    }

    /// Regularised loss and its gradient with respect to every weight and bias.
    ///
    /// `target` is the one-hot matrix (softmax) or a single 0/1 column
    /// (logistic).
    pub fn loss_and_gradients(&self, x: &Matrix, target: &Matrix, l2_alpha: f64) -> Result<(f64, Gradients)> {
        if x.ncols() != self.n_inputs() || target.dim() != (x.nrows(), self.n_outputs()) {
            return Err(Error::DimensionMismatch(format!(
                "network {}->{} given inputs {:?} and targets {:?}",
                self.n_inputs(),
                self.n_outputs(),
                x.dim(),
                target.dim()
            )));
        }
        let n = x.nrows() as f64;
        let fwd = self.forward(x, true);
        let loss = log_loss(self.output, &fwd.probs, target) + 0.5 * l2_alpha * self.weight_norm_sq() / n;

        let n_layers = self.layers.len();
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        let mut delta = &fwd.probs - target;
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let mut gw = fwd.inputs[l].t().dot(&delta);
            gw.scaled_add(l2_alpha, &layer.weights);
            gw /= n;
            weights.push(gw);
            biases.push(delta.mean_axis(Axis(0)).expect("non-empty batch"));
            if l > 0 {
                let mut back = delta.dot(&layer.weights.t());
                let at = if self.activation.derivative_takes_pre_activation() {
                    &fwd.pre[l - 1]
                } else {
                    &fwd.inputs[l]
                };
                scale_by_derivative(self.activation, at, &mut back)?;
                delta = back;
            }
        }
        weights.reverse();
        biases.reverse();
        Ok((loss, Gradients { weights, biases }))
    }
}

fn output_transform(kind: OutputTransform, z: &mut Matrix) {
    match kind {
        OutputTransform::Logistic => apply_activation_inplace(ActivationKind::Logistic, z),
        OutputTransform::Softmax => {
            for mut row in z.rows_mut() {
                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                row.mapv_inplace(|v| (v - max).exp());
                let sum = row.sum();
                row /= sum;
            }
        }
    }
}

fn log_loss(kind: OutputTransform, probs: &Matrix, target: &Matrix) -> f64 {
    let eps = f64::EPSILON;
    let n = probs.nrows() as f64;
    let mut total = 0.0;
    Zip::from(probs).and(target).for_each(|&p, &t| {
        let p = p.clamp(eps, 1.0 - eps);
        if t != 0.0 {
            total += t * p.ln();
        }
        if kind == OutputTransform::Logistic && t != 1.0 {
            total += (1.0 - t) * (1.0 - p).ln();
        }
    });
    -total / n
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m_w: Vec<Matrix>,
    v_w: Vec<Matrix>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl Adam {
    fn new(net: &Network, config: &MlpConfig) -> Self {
        let zw = || net.layers.iter().map(|l| Matrix::zeros(l.weights.dim())).collect::<Vec<_>>();
        let zb = || net.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect::<Vec<_>>();
        Adam {
            lr: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            t: 0,
            m_w: zw(),
            v_w: zw(),
            m_b: zb(),
            v_b: zb(),
        }
    }

    fn step(&mut self, net: &mut Network, grads: &Gradients) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let lr = self.lr * (1.0 - b2.powi(self.t)).sqrt() / (1.0 - b1.powi(self.t));
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * *m / (v.sqrt() + eps);
        };
        for (l, layer) in net.layers.iter_mut().enumerate() {
            Zip::from(&mut layer.weights)
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&grads.weights[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&grads.biases[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
    pub class_names: Vec<String>,
    /// Mean training loss of every completed epoch.
    pub loss_curve: Vec<f64>,
    /// True when training stopped on the loss plateau rule rather than at
    /// `max_iter`.
    pub converged: bool,
}

impl MlpModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_iter(&self) -> usize {
        self.loss_curve.len()
    }
}

/// Output layout for a `k`-class problem.
pub fn output_for(k: usize) -> (usize, OutputTransform) {
    if k == 2 {
        (1, OutputTransform::Logistic)
    } else {
        (k, OutputTransform::Softmax)
    }
}

/// Training targets: a 0/1 column for two classes, one-hot otherwise.
pub fn encode_targets(y: &[usize], k: usize) -> Matrix {
    let (width, _) = output_for(k);
    let mut t = Matrix::zeros((y.len(), width));
    for (i, &c) in y.iter().enumerate() {
        if width == 1 {
            t[[i, 0]] = if c == 1 { 1.0 } else { 0.0 };
        } else {
            t[[i, c]] = 1.0;
        }
    }
    t
}

/// Train on `train` from a seeded Glorot initialisation.
///
/// Each epoch draws one shuffle permutation from the same generator that
/// produced the initial weights. Training stops after `max_iter` epochs or
/// once the epoch loss has failed to beat the best loss by `tol` for
/// `n_iter_no_change` consecutive epochs.
pub fn mlp_fit(train: &Dataset, config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    let k = train.n_classes();
    let present = train.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::SingleClass(present));
    }
    let n = train.n_samples();
    let (out_dim, output) = output_for(k);
    let mut sizes = vec![train.n_features()];
    sizes.extend(&config.hidden_sizes);
    sizes.push(out_dim);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Network::glorot(&sizes, config.activation, output, &mut rng);
    let mut adam = Adam::new(&net, config);
    let targets = encode_targets(&train.y, k);
    let batch_size = config.batch_size.unwrap_or(200).clamp(1, n);

    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut no_improvement = 0;
    let mut converged = false;

    for epoch in 1..=config.max_iter {
        order.shuffle(&mut rng);
        let mut accumulated = 0.0;
        for batch in order.chunks(batch_size) {
            let xb = train.x.select(Axis(0), batch);
            let tb = targets.select(Axis(0), batch);
            let (loss, grads) = net.loss_and_gradients(&xb, &tb, config.l2_alpha)?;
            accumulated += loss * batch.len() as f64;
            adam.step(&mut net, &grads);
        }
        let loss = accumulated / n as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        loss_curve.push(loss);

        if loss > best_loss - config.tol {
            no_improvement += 1;
        } else {
            no_improvement = 0;
        }
        best_loss = best_loss.min(loss);
        if no_improvement >= config.n_iter_no_change {
            converged = true;
            break;
        }
    }

    Ok(MlpModel {
        network: net,
        class_names: train.class_names.clone(),
        loss_curve,
        converged,
    })
}

/// Class probabilities, one row per sample; the logistic output is
/// expanded to `[1 - p, p]`.
pub fn mlp_predict_proba(model: &MlpModel, x: &Matrix) -> Result<Matrix> {
    if x.ncols() != model.network.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} features, input has {}",
            model.network.n_inputs(),
            x.ncols()
        )));
    }
    let probs = model.network.output_probabilities(x);
    Ok(match model.network.output {
        OutputTransform::Softmax => probs,
        OutputTransform::Logistic => {
            Matrix::from_shape_fn((x.nrows(), 2), |(i, j)| if j == 0 { 1.0 - probs[[i, 0]] } else { probs[[i, 0]] })
        }
    })
}

/// Row-wise argmax of [`mlp_predict_proba`], lowest index on ties.
pub fn mlp_predict(model: &MlpModel, x: &Matrix) -> Result<Vec<usize>> {
    Ok(argmax_rows(&mlp_predict_proba(model, x)?))
}

pub(crate) fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
