use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::activation::{sigmoid, ActivationKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::seeded_rng;

/// Smallest dilation magnitude the model will hold; every wavelet argument
/// divides by the dilation, so it must stay away from zero.
pub const EPS_DILATION: f64 = 1e-6;

/// Clamp applied to classification scores before taking logarithms.
pub const EPS_LOG: f64 = 1e-12;

/// What the single output node means and which loss goes with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Linear output, mean squared error.
    Regression,
    /// Logistic output, binary cross-entropy.
    Classification,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Regression => "regression",
            TaskKind::Classification => "classification",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regression" => Ok(TaskKind::Regression),
            "classification" => Ok(TaskKind::Classification),
            other => Err(Error::InvalidArgument {
                what: "task",
                why: format!("{other:?} is not one of regression, classification"),
            }),
        }
    }
}

/// Training hyperparameters shared by the static and streaming modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden_nodes: usize,
    pub partitions: usize,
    pub seed: u64,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        fn bad(what: &'static str, why: impl Into<String>) -> Error {
            Error::InvalidArgument {
                what,
                why: why.into(),
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(bad("learning_rate", "must be finite and > 0"));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return Err(bad("momentum", "must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(bad("batch_size", "must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(bad("epochs", "must be >= 1"));
        }
        if self.hidden_nodes == 0 {
            return Err(bad("hidden_nodes", "must be >= 1"));
        }
        if self.partitions == 0 {
            return Err(bad("partitions", "must be >= 1"));
        }
        Ok(())
    }
}

/// Single-hidden-layer wavelet network. One output node; the input-to-hidden
/// weights have one row per input feature and one column per hidden node.
#[derive(Debug, Clone, PartialEq)]
pub struct WnnModel {
    nin: usize,
    nhn: usize,
    pub(crate) input_weights: Matrix, // nin x nhn
    pub(crate) output_weights: Vec<f64>, // nhn
    pub(crate) dilations: Vec<f64>,   // nhn
    pub(crate) translations: Vec<f64>, // nhn
    activation: ActivationKind,
    task: TaskKind,
}

/// Output of a forward pass, keeping the per-node intermediates that the
/// backward pass reuses.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Network output: raw weighted sum for regression, logistic score for
    /// classification.
    pub output: f64,
    /// Hidden activations f(t_j).
    pub hidden: Vec<f64>,
    /// Wavelet arguments t_j = (sum_i w_ij x_i - b_j) / a_j.
    pub wavelet_args: Vec<f64>,
}

/// Loss gradients for every parameter tensor, batch-mean included.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub input_weights: Matrix,
    pub output_weights: Vec<f64>,
    pub dilations: Vec<f64>,
    pub translations: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(nin: usize, nhn: usize) -> Self {
        GradientSet {
            input_weights: Matrix::zeros(nin, nhn),
            output_weights: vec![0.0; nhn],
            dilations: vec![0.0; nhn],
            translations: vec![0.0; nhn],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.input_weights.as_slice().iter().all(|v| v.is_finite())
            && self.output_weights.iter().all(|v| v.is_finite())
            && self.dilations.iter().all(|v| v.is_finite())
            && self.translations.iter().all(|v| v.is_finite())
    }
}

/// Previous update deltas, one per parameter tensor. Zero before the first
/// step.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub input_weights: Matrix,
    pub output_weights: Vec<f64>,
    pub dilations: Vec<f64>,
    pub translations: Vec<f64>,
}

impl MomentumState {
    pub fn zeros_like(model: &WnnModel) -> Self {
        MomentumState {
            input_weights: Matrix::zeros(model.nin, model.nhn),
            output_weights: vec![0.0; model.nhn],
            dilations: vec![0.0; model.nhn],
            translations: vec![0.0; model.nhn],
        }
    }
}

/// Build a model with seeded random parameters: weights and translations
/// uniform on [-1, 1], dilations uniform on [0.5, 2] so no wavelet argument
/// starts near the 1/a singularity. Draw order is fixed (input weights
/// row-major, output weights, dilations, translations) so a seed pins every
/// parameter bit-exactly.
pub fn init_model(
    nin: usize,
    hp: &Hyperparams,
    activation: ActivationKind,
    task: TaskKind,
) -> Result<WnnModel> {
    if nin == 0 {
        return Err(Error::InvalidArgument {
            what: "nin",
            why: "must be >= 1".into(),
        });
    }
    hp.validate()?;
    let nhn = hp.hidden_nodes;
    let mut rng = seeded_rng(hp.seed);

    let mut input_weights = Matrix::zeros(nin, nhn);
    for v in input_weights.as_mut_slice() {
        *v = rng.random_range(-1.0..=1.0);
    }
    let output_weights: Vec<f64> = (0..nhn).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let dilations: Vec<f64> = (0..nhn).map(|_| rng.random_range(0.5..=2.0)).collect();
    let translations: Vec<f64> = (0..nhn).map(|_| rng.random_range(-1.0..=1.0)).collect();

    Ok(WnnModel {
        nin,
        nhn,
        input_weights,
        output_weights,
        dilations,
        translations,
        activation,
        task,
    })
}

impl WnnModel {
    /// Construct from explicit parameter tensors (deserialization and tests).
    pub fn from_parts(
        input_weights: Matrix,
        output_weights: Vec<f64>,
        dilations: Vec<f64>,
        translations: Vec<f64>,
        activation: ActivationKind,
        task: TaskKind,
    ) -> Result<Self> {
        let nin = input_weights.rows();
        let nhn = input_weights.cols();
        if nin == 0 || nhn == 0 {
            return Err(Error::InvalidArgument {
                what: "model shape",
                why: format!("nin={nin}, nhn={nhn}; both must be >= 1"),
            });
        }
        for (name, v) in [
            ("output weights", &output_weights),
            ("dilations", &dilations),
            ("translations", &translations),
        ] {
            if v.len() != nhn {
                return Err(Error::DimensionMismatch {
                    what: "model vector",
                    expected: nhn,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument {
                    what: "model parameters",
                    why: format!("non-finite value in {name}"),
                });
            }
        }
        if input_weights.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument {
                what: "model parameters",
                why: "non-finite value in input weights".into(),
            });
        }
        if dilations.iter().any(|a| a.abs() < EPS_DILATION) {
            return Err(Error::InvalidArgument {
                what: "dilations",
                why: format!("magnitude below {EPS_DILATION}"),
            });
        }
        Ok(WnnModel {
            nin,
            nhn,
            input_weights,
            output_weights,
            dilations,
            translations,
            activation,
            task,
        })
    }

    pub fn nin(&self) -> usize {
        self.nin
    }

    pub fn nhn(&self) -> usize {
        self.nhn
    }

    /// Output node count; the architecture is single-output.
    pub fn non(&self) -> usize {
        1
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn dilations(&self) -> &[f64] {
        &self.dilations
    }

    pub fn translations(&self) -> &[f64] {
        &self.translations
    }

    /// Forward pass for one sample, returning the intermediates backprop
    /// needs.
    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        if x.len() != self.nin {
            return Err(Error::DimensionMismatch {
                what: "input features",
                expected: self.nin,
                got: x.len(),
            });
        }
        let mut hidden = vec![0.0; self.nhn];
        let mut wavelet_args = vec![0.0; self.nhn];
        let raw = self.raw_output_into(x, &mut hidden, &mut wavelet_args);
        let output = match self.task {
            TaskKind::Regression => raw,
            TaskKind::Classification => sigmoid(raw),
        };
        Ok(Forward {
            output,
            hidden,
            wavelet_args,
        })
    }

    /// Network output for one sample without allocating.
    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nin {
            return Err(Error::DimensionMismatch {
                what: "input features",
                expected: self.nin,
                got: x.len(),
            });
        }
        let mut raw = 0.0;
        for j in 0..self.nhn {
            let mut s = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                s += self.input_weights.get(i, j) * xi;
            }
            let t = (s - self.translations[j]) / self.dilations[j];
            raw += self.output_weights[j] * self.activation.value(t);
        }
        Ok(match self.task {
            TaskKind::Regression => raw,
            TaskKind::Classification => sigmoid(raw),
        })
    }

    /// Hot path shared by forward and backward: fills `hidden` and
    /// `wavelet_args` and returns the raw (pre-squash) output.
    fn raw_output_into(&self, x: &[f64], hidden: &mut [f64], wavelet_args: &mut [f64]) -> f64 {
        let mut raw = 0.0;
        for j in 0..self.nhn {
            let mut s = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                s += self.input_weights.get(i, j) * xi;
            }
            let t = (s - self.translations[j]) / self.dilations[j];
            let h = self.activation.value(t);
            wavelet_args[j] = t;
            hidden[j] = h;
            raw += self.output_weights[j] * h;
        }
        raw
    }

    pub(crate) fn params_finite(&self) -> bool {
        self.input_weights.as_slice().iter().all(|v| v.is_finite())
            && self.output_weights.iter().all(|v| v.is_finite())
            && self.dilations.iter().all(|v| v.is_finite())
            && self.translations.iter().all(|v| v.is_finite())
    }
}

/// Mean loss over predictions: MSE for regression, negated binary
/// cross-entropy for classification with scores clamped away from 0 and 1.
pub fn loss(task: TaskKind, predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            what: "loss targets",
            expected: predictions.len(),
            got: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument {
            what: "loss inputs",
            why: "need at least one sample".into(),
        });
    }
    let n = predictions.len() as f64;
    let total: f64 = match task {
        TaskKind::Regression => predictions
            .iter()
            .zip(targets)
            .map(|(v, y)| (y - v) * (y - v))
            .sum(),
        TaskKind::Classification => predictions
            .iter()
            .zip(targets)
            .map(|(v, y)| {
                let v = v.clamp(EPS_LOG, 1.0 - EPS_LOG);
                -(y * v.ln() + (1.0 - y) * (1.0 - v).ln())
            })
            .sum(),
    };
    Ok(total / n)
}

/// Analytic gradients of the batch-mean loss with respect to every
/// parameter. With d_k the derivative of the loss for sample k with respect
/// to the raw output (regression: -2(y_k - v_k)/n; classification through
/// the logistic: (v_k - y_k)/n):
///
///   dW_j = sum_k d_k h_kj
///   dw_ij = sum_k d_k W_j f'(t_kj) x_ki / a_j
///   db_j = -sum_k d_k W_j f'(t_kj) / a_j
///   da_j = -sum_k d_k W_j f'(t_kj) t_kj / a_j
pub fn backward(model: &WnnModel, batch_x: &Matrix, batch_y: &[f64]) -> Result<GradientSet> {
    if batch_x.cols() != model.nin {
        return Err(Error::DimensionMismatch {
            what: "batch features",
            expected: model.nin,
            got: batch_x.cols(),
        });
    }
    if batch_x.rows() != batch_y.len() {
        return Err(Error::DimensionMismatch {
            what: "batch targets",
            expected: batch_x.rows(),
            got: batch_y.len(),
        });
    }
    if batch_x.rows() == 0 {
        return Err(Error::InvalidArgument {
            what: "batch",
            why: "need at least one sample".into(),
        });
    }

    let n = batch_x.rows() as f64;
    let nhn = model.nhn;
    let nin = model.nin;
    let mut grads = GradientSet::zeros(nin, nhn);
    let mut hidden = vec![0.0; nhn];
    let mut wavelet_args = vec![0.0; nhn];

    for (x, &y) in batch_x.iter_rows().zip(batch_y) {
        let raw = model.raw_output_into(x, &mut hidden, &mut wavelet_args);
        let delta = match model.task {
            TaskKind::Regression => -2.0 * (y - raw) / n,
            TaskKind::Classification => (sigmoid(raw) - y) / n,
        };
        for j in 0..nhn {
            grads.output_weights[j] += delta * hidden[j];
            let t = wavelet_args[j];
            // Common factor d_k W_j f'(t_kj) / a_j of the hidden-parameter
            // gradients.
            let g = delta * model.output_weights[j] * model.activation.derivative(t)
                / model.dilations[j];
            for (i, &xi) in x.iter().enumerate().take(nin) {
                let cur = grads.input_weights.get(i, j);
                grads.input_weights.set(i, j, cur + g * xi);
            }
            grads.translations[j] -= g;
            grads.dilations[j] -= g * t;
        }
    }
    Ok(grads)
}

/// One momentum step: delta = -lr * grad + momentum * previous delta, applied
/// to every parameter; dilations are clamped back outside the singular band
/// afterwards. The momentum state is replaced with the new deltas.
pub fn apply_update(
    model: &mut WnnModel,
    grads: &GradientSet,
    momentum: &mut MomentumState,
    hp: &Hyperparams,
) -> Result<()> {
    if grads.input_weights.rows() != model.nin || grads.output_weights.len() != model.nhn {
        return Err(Error::DimensionMismatch {
            what: "gradient shape",
            expected: model.nin * model.nhn,
            got: grads.input_weights.rows() * grads.input_weights.cols(),
        });
    }
    if !grads.is_finite() {
        return Err(Error::NonFiniteGradient);
    }

    let lr = hp.learning_rate;
    let alpha = hp.momentum;
    let step = |theta: &mut f64, grad: f64, prev: &mut f64| {
        let delta = -lr * grad + alpha * *prev;
        *theta += delta;
        *prev = delta;
    };

    for ((theta, grad), prev) in model
        .input_weights
        .as_mut_slice()
        .iter_mut()
        .zip(grads.input_weights.as_slice())
        .zip(momentum.input_weights.as_mut_slice())
    {
        step(theta, *grad, prev);
    }
    for ((theta, grad), prev) in model
        .output_weights
        .iter_mut()
        .zip(&grads.output_weights)
        .zip(&mut momentum.output_weights)
    {
        step(theta, *grad, prev);
    }
    for ((theta, grad), prev) in model
        .dilations
        .iter_mut()
        .zip(&grads.dilations)
        .zip(&mut momentum.dilations)
    {
        step(theta, *grad, prev);
    }
    for ((theta, grad), prev) in model
        .translations
        .iter_mut()
        .zip(&grads.translations)
        .zip(&mut momentum.translations)
    {
        step(theta, *grad, prev);
    }

    clamp_dilations(&mut model.dilations);

    if !model.params_finite() {
        return Err(Error::NonFiniteParameters);
    }
    Ok(())
}

/// Push any dilation inside the singular band back to +-EPS_DILATION,
/// keeping its sign; an exact zero becomes +EPS_DILATION.
pub(crate) fn clamp_dilations(dilations: &mut [f64]) {
    for a in dilations {
        if a.abs() < EPS_DILATION {
            *a = if *a < 0.0 { -EPS_DILATION } else { EPS_DILATION };
        }
    }
}
