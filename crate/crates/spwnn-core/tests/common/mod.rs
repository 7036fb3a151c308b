//! Shared oracles for the integration suites: finite-difference gradient
//! checking against the analytic backward pass, and brute-force pair
//! counting for AUC. Everything here goes through the public API only and
//! stays independent of the gradient code it checks.
#![allow(dead_code)] // each test binary uses its own subset

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spwnn_core::{
    backward, loss, predict, ActivationKind, Hyperparams, Matrix, TaskKind, WnnModel,
};

pub fn hp(hidden_nodes: usize, partitions: usize, seed: u64) -> Hyperparams {
    Hyperparams {
        learning_rate: 0.05,
        momentum: 0.9,
        batch_size: 32,
        epochs: 10,
        hidden_nodes,
        partitions,
        seed,
    }
}

/// A model with all four parameter tensors drawn from the given generator,
/// dilations kept in the same [0.5, 2] band the initializer uses.
pub fn random_model(
    rng: &mut ChaCha8Rng,
    nin: usize,
    nhn: usize,
    activation: ActivationKind,
    task: TaskKind,
) -> WnnModel {
    let input_weights: Vec<f64> = (0..nin * nhn).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let output_weights: Vec<f64> = (0..nhn).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let dilations: Vec<f64> = (0..nhn).map(|_| rng.random_range(0.5..=2.0)).collect();
    let translations: Vec<f64> = (0..nhn).map(|_| rng.random_range(-1.0..=1.0)).collect();
    WnnModel::from_parts(
        Matrix::from_vec(nin, nhn, input_weights).unwrap(),
        output_weights,
        dilations,
        translations,
        activation,
        task,
    )
    .unwrap()
}

pub fn random_batch(
    rng: &mut ChaCha8Rng,
    n: usize,
    nin: usize,
    task: TaskKind,
) -> (Matrix, Vec<f64>) {
    let xs: Vec<f64> = (0..n * nin).map(|_| rng.random_range(-1.5..=1.5)).collect();
    let ys: Vec<f64> = (0..n)
        .map(|_| match task {
            TaskKind::Regression => rng.random_range(-1.0..=1.0),
            TaskKind::Classification => f64::from(rng.random_range(0..2)),
        })
        .collect();
    (Matrix::from_vec(n, nin, xs).unwrap(), ys)
}

/// Identifies one scalar parameter of the model.
#[derive(Clone, Copy)]
pub enum Param {
    InputWeight(usize, usize),
    OutputWeight(usize),
    Dilation(usize),
    Translation(usize),
}

pub fn all_params(model: &WnnModel) -> Vec<Param> {
    let mut out = Vec::new();
    for i in 0..model.nin() {
        for j in 0..model.nhn() {
            out.push(Param::InputWeight(i, j));
        }
    }
    for j in 0..model.nhn() {
        out.push(Param::OutputWeight(j));
        out.push(Param::Dilation(j));
        out.push(Param::Translation(j));
    }
    out
}

pub fn get_param(model: &WnnModel, p: Param) -> f64 {
    match p {
        Param::InputWeight(i, j) => model.input_weights().get(i, j),
        Param::OutputWeight(j) => model.output_weights()[j],
        Param::Dilation(j) => model.dilations()[j],
        Param::Translation(j) => model.translations()[j],
    }
}

pub fn get_grad(grads: &spwnn_core::GradientSet, p: Param) -> f64 {
    match p {
        Param::InputWeight(i, j) => grads.input_weights.get(i, j),
        Param::OutputWeight(j) => grads.output_weights[j],
        Param::Dilation(j) => grads.dilations[j],
        Param::Translation(j) => grads.translations[j],
    }
}

/// Rebuild the model with a single parameter nudged by `delta`.
pub fn perturbed(model: &WnnModel, p: Param, delta: f64) -> WnnModel {
    let mut input_weights = model.input_weights().clone();
    let mut output_weights = model.output_weights().to_vec();
    let mut dilations = model.dilations().to_vec();
    let mut translations = model.translations().to_vec();
    match p {
        Param::InputWeight(i, j) => {
            let v = input_weights.get(i, j);
            input_weights.set(i, j, v + delta);
        }
        Param::OutputWeight(j) => output_weights[j] += delta,
        Param::Dilation(j) => dilations[j] += delta,
        Param::Translation(j) => translations[j] += delta,
    }
    WnnModel::from_parts(
        input_weights,
        output_weights,
        dilations,
        translations,
        model.activation(),
        model.task(),
    )
    .unwrap()
}

/// Batch loss as a function of the parameters: the quantity backward()
/// differentiates.
pub fn batch_loss(model: &WnnModel, xs: &Matrix, ys: &[f64]) -> f64 {
    let preds = predict(model, xs).unwrap();
    loss(model.task(), &preds, ys).unwrap()
}

/// Check every analytic gradient entry of one (model, batch) configuration
/// against central finite differences with per-parameter step
/// h = h_scale * max(1, |theta|). Returns the worst combined error ratio
/// |analytic - numeric| / max(abs_floor, rel_tol * scale) — values <= 1 pass.
pub fn max_gradient_error_ratio(
    model: &WnnModel,
    xs: &Matrix,
    ys: &[f64],
    h_scale: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> f64 {
    let grads = backward(model, xs, ys).unwrap();
    let mut worst: f64 = 0.0;
    for p in all_params(model) {
        let h = h_scale * get_param(model, p).abs().max(1.0);
        let up = batch_loss(&perturbed(model, p, h), xs, ys);
        let down = batch_loss(&perturbed(model, p, -h), xs, ys);
        let numeric = (up - down) / (2.0 * h);
        let analytic = get_grad(&grads, p);
        let scale = numeric.abs().max(analytic.abs());
        let allowed = (rel_tol * scale).max(abs_floor);
        worst = worst.max((numeric - analytic).abs() / allowed);
    }
    worst
}

/// Pair-counting AUC: positives beating negatives count 1, ties one half.
pub fn auc_pair_counting(scores: &[f64], labels: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] < 0.5 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] >= 0.5 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
