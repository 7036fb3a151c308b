//! Epoch-synchronous data-parallel trainer. Every epoch all partitions run
//! local mini-batch SGD from one broadcast (model, momentum) pair, a barrier
//! collects the local copies, and their element-wise average becomes the
//! next broadcast state. Results are bit-identical for any worker-thread
//! count because each partition's work depends only on the broadcast state
//! and its own seed, and results are always reduced in partition order.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{
    apply_update, backward, clamp_dilations, init_model, loss, Hyperparams, MomentumState,
    TaskKind, WnnModel,
};
use crate::rng::{derive_seed, seeded_rng};

/// One shard of the training data together with its private seed stream.
#[derive(Debug, Clone)]
pub struct Partition {
    pub rows: Matrix,
    pub targets: Vec<f64>,
    pub index: usize,
    pub local_seed: u64,
}

/// Per-epoch training progress line.
#[derive(Debug, Clone, Copy)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub elapsed_s: f64,
}

impl EpochRecord {
    pub fn render(&self) -> String {
        format!(
            "epoch={} loss={} elapsed_s={:.6}",
            self.epoch, self.loss, self.elapsed_s
        )
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub per_epoch: Vec<EpochRecord>,
    pub wall_time_s: f64,
    pub epochs_run: usize,
    pub final_model: WnnModel,
    pub final_momentum: MomentumState,
}

impl TrainReport {
    pub fn per_epoch_loss(&self) -> Vec<f64> {
        self.per_epoch.iter().map(|r| r.loss).collect()
    }
}

/// Knobs that do not change results: worker-thread count and an optional
/// sink for per-epoch log lines.
#[derive(Default)]
pub struct TrainOptions<'a> {
    /// Worker threads for the per-epoch partition fan-out; defaults to
    /// min(partitions, available cores).
    pub threads: Option<usize>,
    pub log: Option<&'a mut dyn Write>,
}

/// Shuffle rows with the given seed, then cut them into `parts` contiguous
/// blocks whose sizes differ by at most one (earlier blocks take the
/// remainder).
pub fn partition_data(
    xs: &Matrix,
    ys: &[f64],
    parts: usize,
    seed: u64,
) -> Result<Vec<Partition>> {
    if xs.rows() != ys.len() {
        return Err(Error::DimensionMismatch {
            what: "training targets",
            expected: xs.rows(),
            got: ys.len(),
        });
    }
    if parts == 0 || xs.rows() < parts {
        return Err(Error::TooFewRows {
            rows: xs.rows(),
            requested: parts,
        });
    }

    let n = xs.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(derive_seed(seed, 0)));

    let base = n / parts;
    let remainder = n % parts;
    let mut partitions = Vec::with_capacity(parts);
    let mut start = 0;
    for index in 0..parts {
        let len = base + usize::from(index < remainder);
        let idx = &order[start..start + len];
        partitions.push(Partition {
            rows: xs.select_rows(idx),
            targets: idx.iter().map(|&i| ys[i]).collect(),
            index,
            local_seed: derive_seed(seed, 1 + index as u64),
        });
        start += len;
    }
    Ok(partitions)
}

/// One local pass over a partition: shuffle its rows with the
/// (partition, epoch) seed, step once per mini-batch (the final short batch
/// is used as-is), and report the partition's mean loss under the post-epoch
/// local model.
pub fn local_epoch(
    model: &mut WnnModel,
    momentum: &mut MomentumState,
    partition: &Partition,
    hp: &Hyperparams,
    epoch: usize,
) -> Result<f64> {
    let n = partition.rows.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(derive_seed(partition.local_seed, epoch as u64)));

    for chunk in order.chunks(hp.batch_size) {
        let batch_x = partition.rows.select_rows(chunk);
        let batch_y: Vec<f64> = chunk.iter().map(|&i| partition.targets[i]).collect();
        let grads = backward(model, &batch_x, &batch_y)?;
        apply_update(model, &grads, momentum, hp)?;
    }

    let preds = predict(model, &partition.rows)?;
    loss(model.task(), &preds, &partition.targets)
}

/// Element-wise unweighted mean of identically configured models and their
/// momentum states; the dilation clamp is re-applied after averaging. A
/// single input is returned unchanged.
pub fn average_models(
    models: &[WnnModel],
    momenta: &[MomentumState],
) -> Result<(WnnModel, MomentumState)> {
    let first = models
        .first()
        .ok_or_else(|| Error::IncompatibleModels("no models to average".into()))?;
    if momenta.len() != models.len() {
        return Err(Error::IncompatibleModels(format!(
            "{} models but {} momentum states",
            models.len(),
            momenta.len()
        )));
    }
    for m in &models[1..] {
        if m.nin() != first.nin()
            || m.nhn() != first.nhn()
            || m.activation() != first.activation()
            || m.task() != first.task()
        {
            return Err(Error::IncompatibleModels(
                "shape or configuration differs across partitions".into(),
            ));
        }
    }

    // Anchored mean: x0 + sum(xi - x0)/P. Equal inputs come back bit-exact
    // for any P, and the differences of near-identical partition results
    // lose no precision.
    let count = models.len() as f64;
    let mean = |pick: &dyn Fn(&WnnModel) -> &[f64]| -> Vec<f64> {
        let anchor = pick(first);
        let mut acc = vec![0.0; anchor.len()];
        for m in &models[1..] {
            for (a, (v, base)) in acc.iter_mut().zip(pick(m).iter().zip(anchor)) {
                *a += v - base;
            }
        }
        acc.iter_mut()
            .zip(anchor)
            .for_each(|(a, base)| *a = base + *a / count);
        acc
    };

    let input_weights = Matrix::from_vec(
        first.nin(),
        first.nhn(),
        mean(&|m| m.input_weights().as_slice()),
    )?;
    let output_weights = mean(&|m| m.output_weights());
    let mut dilations = mean(&|m| m.dilations());
    let translations = mean(&|m| m.translations());
    clamp_dilations(&mut dilations);

    let model = WnnModel::from_parts(
        input_weights,
        output_weights,
        dilations,
        translations,
        first.activation(),
        first.task(),
    )?;

    let mean_mom = |pick: &dyn Fn(&MomentumState) -> &[f64]| -> Vec<f64> {
        let anchor = pick(&momenta[0]);
        let mut acc = vec![0.0; anchor.len()];
        for m in &momenta[1..] {
            for (a, (v, base)) in acc.iter_mut().zip(pick(m).iter().zip(anchor)) {
                *a += v - base;
            }
        }
        acc.iter_mut()
            .zip(anchor)
            .for_each(|(a, base)| *a = base + *a / count);
        acc
    };
    let momentum = MomentumState {
        input_weights: Matrix::from_vec(
            first.nin(),
            first.nhn(),
            mean_mom(&|m| m.input_weights.as_slice()),
        )?,
        output_weights: mean_mom(&|m| &m.output_weights),
        dilations: mean_mom(&|m| &m.dilations),
        translations: mean_mom(&|m| &m.translations),
    };

    Ok((model, momentum))
}

/// Train a freshly initialized model. See [`train_from`] for the loop.
pub fn train(
    xs: &Matrix,
    ys: &[f64],
    hp: &Hyperparams,
    activation: ActivationKind,
    task: TaskKind,
) -> Result<TrainReport> {
    train_with(xs, ys, hp, activation, task, TrainOptions::default())
}

pub fn train_with(
    xs: &Matrix,
    ys: &[f64],
    hp: &Hyperparams,
    activation: ActivationKind,
    task: TaskKind,
    options: TrainOptions<'_>,
) -> Result<TrainReport> {
    let model = init_model(xs.cols(), hp, activation, task)?;
    let momentum = MomentumState::zeros_like(&model);
    train_from(model, momentum, xs, ys, hp, options)
}

/// Run the full epoch loop from an existing (model, momentum) pair: each
/// epoch fans the broadcast state out to every partition, joins at the
/// barrier, averages, and records the averaged model's loss over the whole
/// training set. Errors out with the offending epoch if that loss is not
/// finite.
pub fn train_from(
    model: WnnModel,
    momentum: MomentumState,
    xs: &Matrix,
    ys: &[f64],
    hp: &Hyperparams,
    mut options: TrainOptions<'_>,
) -> Result<TrainReport> {
    hp.validate()?;
    if xs.cols() != model.nin() {
        return Err(Error::DimensionMismatch {
            what: "training features",
            expected: model.nin(),
            got: xs.cols(),
        });
    }
    let started = Instant::now();
    let partitions = partition_data(xs, ys, hp.partitions, hp.seed)?;
    let workers = options
        .threads
        .unwrap_or_else(default_workers)
        .clamp(1, partitions.len().max(1));

    let mut broadcast = (model, momentum);
    let mut per_epoch = Vec::with_capacity(hp.epochs);
    for epoch in 1..=hp.epochs {
        let locals = run_partitions(&broadcast.0, &broadcast.1, &partitions, hp, epoch, workers);
        let mut models = Vec::with_capacity(partitions.len());
        let mut momenta = Vec::with_capacity(partitions.len());
        for local in locals {
            let (m, mom, _local_loss) = local?;
            models.push(m);
            momenta.push(mom);
        }
        broadcast = average_models(&models, &momenta)?;

        let preds = predict(&broadcast.0, xs)?;
        let epoch_loss = loss(broadcast.0.task(), &preds, ys)?;
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let record = EpochRecord {
            epoch,
            loss: epoch_loss,
            elapsed_s: started.elapsed().as_secs_f64(),
        };
        if let Some(log) = options.log.as_deref_mut() {
            writeln!(log, "{}", record.render()).map_err(|e| Error::io("training log", e))?;
        }
        per_epoch.push(record);
    }

    Ok(TrainReport {
        epochs_run: per_epoch.len(),
        wall_time_s: started.elapsed().as_secs_f64(),
        per_epoch,
        final_model: broadcast.0,
        final_momentum: broadcast.1,
    })
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

type LocalOutcome = Result<(WnnModel, MomentumState, f64)>;

/// Fan one epoch out over the partitions. Worker w takes partitions
/// w, w+workers, w+2*workers, ...; slots are filled by partition index, so
/// the reduction order never depends on scheduling.
fn run_partitions(
    broadcast_model: &WnnModel,
    broadcast_momentum: &MomentumState,
    partitions: &[Partition],
    hp: &Hyperparams,
    epoch: usize,
    workers: usize,
) -> Vec<LocalOutcome> {
    let run_one = |partition: &Partition| -> LocalOutcome {
        let mut model = broadcast_model.clone();
        let mut momentum = broadcast_momentum.clone();
        let local_loss = local_epoch(&mut model, &mut momentum, partition, hp, epoch)?;
        Ok((model, momentum, local_loss))
    };

    if workers <= 1 || partitions.len() <= 1 {
        return partitions.iter().map(run_one).collect();
    }

    let mut slots: Vec<Option<LocalOutcome>> = partitions.iter().map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = w;
                    while i < partitions.len() {
                        out.push((i, run_one(&partitions[i])));
                        i += workers;
                    }
                    out
                })
            })
            .collect();
        for handle in handles {
            for (i, outcome) in handle.join().expect("partition worker panicked") {
                slots[i] = Some(outcome);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("missing slot")).collect()
}

/// Row-wise network output. Classification yields raw logistic scores;
/// thresholding is the caller's concern.
pub fn predict(model: &WnnModel, xs: &Matrix) -> Result<Vec<f64>> {
    if xs.rows() > 0 && xs.cols() != model.nin() {
        return Err(Error::DimensionMismatch {
            what: "prediction features",
            expected: model.nin(),
            got: xs.cols(),
        });
    }
    let mut out = Vec::with_capacity(xs.rows());
    for i in 0..xs.rows() {
        out.push(model.predict_one(xs.row(i))?);
    }
    Ok(out)
}

/// Wall-clock speedup of a parallel run over the sequential baseline.
pub fn speedup(sequential_s: f64, parallel_s: f64) -> f64 {
    sequential_s / parallel_s
}
