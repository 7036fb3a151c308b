//! Micro-batch streaming harness: a fixed-length window over an ordered
//! batch queue. Each time the window fills, the persistent model trains on
//! the oldest ws-1 batches (warm start, never re-initialized), is tested on
//! the newest batch, and the window slides by one.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{evaluate, EvalReport};
use crate::model::{init_model, Hyperparams, MomentumState, TaskKind};
use crate::train::{train_from, TrainOptions};

/// One arrival unit of the stream.
#[derive(Debug, Clone)]
pub struct MicroBatch {
    pub batch_id: u64,
    pub rows: Matrix,
    pub targets: Vec<f64>,
}

/// Ordered buffer of at most `capacity` micro-batches, oldest first.
/// Eviction happens only through [`StreamWindow::slide`].
#[derive(Debug, Clone)]
pub struct StreamWindow {
    capacity: usize,
    buffer: VecDeque<MicroBatch>,
}

impl StreamWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::InvalidArgument {
                what: "window size",
                why: format!("{capacity} is below the minimum of 2"),
            });
        }
        Ok(StreamWindow {
            capacity,
            buffer: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.capacity
    }

    pub fn batches(&self) -> impl Iterator<Item = &MicroBatch> {
        self.buffer.iter()
    }

    /// Append a batch; the caller must slide a full window first.
    pub fn enqueue(&mut self, batch: MicroBatch) -> Result<()> {
        if self.is_full() {
            return Err(Error::WindowFull {
                capacity: self.capacity,
            });
        }
        self.buffer.push_back(batch);
        Ok(())
    }

    /// Evict and return the oldest batch of a full window.
    pub fn slide(&mut self) -> Result<MicroBatch> {
        if !self.is_full() {
            return Err(Error::WindowNotFull {
                len: self.buffer.len(),
                capacity: self.capacity,
            });
        }
        Ok(self.buffer.pop_front().expect("full window is non-empty"))
    }
}

/// Outcome of one full window: metrics on the newest batch after training
/// on the older ones.
#[derive(Debug, Clone)]
pub struct WindowReport {
    /// 1-based window position in the stream.
    pub window_index: usize,
    pub trained_on: Vec<u64>,
    pub tested_on: u64,
    pub metrics: EvalReport,
    /// Wall time of the whole window (training plus testing).
    pub elapsed_s: f64,
}

impl WindowReport {
    pub fn render(&self) -> String {
        let trained: Vec<String> = self.trained_on.iter().map(u64::to_string).collect();
        let mut out = format!(
            "window={} trained_on={} tested_on={}",
            self.window_index,
            trained.join(","),
            self.tested_on
        );
        let mut push = |name: &str, v: Option<f64>| {
            if let Some(v) = v {
                let _ = write!(out, " {name}={v}");
            }
        };
        push("mse", self.metrics.mse);
        push("sensitivity", self.metrics.sensitivity);
        push("specificity", self.metrics.specificity);
        push("auc", self.metrics.auc);
        let _ = write!(out, " n={} elapsed_s={:.6}", self.metrics.n, self.elapsed_s);
        if self.metrics.single_class {
            out.push_str(" single_class=true");
        }
        out
    }
}

/// Per-metric arithmetic means across windows; a metric is averaged over
/// the windows that report it.
#[derive(Debug, Clone, Default)]
pub struct StreamSummary {
    pub windows: usize,
    pub mse: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub auc: Option<f64>,
}

pub fn summarize(reports: &[WindowReport]) -> StreamSummary {
    let mean_of = |pick: &dyn Fn(&WindowReport) -> Option<f64>| -> Option<f64> {
        let values: Vec<f64> = reports.iter().filter_map(pick).collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    };
    StreamSummary {
        windows: reports.len(),
        mse: mean_of(&|r| r.metrics.mse),
        sensitivity: mean_of(&|r| r.metrics.sensitivity),
        specificity: mean_of(&|r| r.metrics.specificity),
        auc: mean_of(&|r| r.metrics.auc),
    }
}

impl StreamSummary {
    pub fn render(&self) -> String {
        let mut out = String::from("average");
        let mut push = |name: &str, v: Option<f64>| {
            if let Some(v) = v {
                let _ = write!(out, " {name}={v}");
            }
        };
        push("mse", self.mse);
        push("sensitivity", self.sensitivity);
        push("specificity", self.specificity);
        push("auc", self.auc);
        let _ = write!(out, " windows={}", self.windows);
        out
    }
}

/// Cut rows into `num_batches` contiguous blocks in arrival order (no
/// shuffling) with sizes differing by at most one, earlier batches taking
/// the remainder. Batch ids run 1..=num_batches.
pub fn split_into_batches(xs: &Matrix, ys: &[f64], num_batches: usize) -> Result<Vec<MicroBatch>> {
    if xs.rows() != ys.len() {
        return Err(Error::DimensionMismatch {
            what: "stream targets",
            expected: xs.rows(),
            got: ys.len(),
        });
    }
    if num_batches == 0 || xs.rows() < num_batches {
        return Err(Error::TooFewRows {
            rows: xs.rows(),
            requested: num_batches,
        });
    }
    let n = xs.rows();
    let base = n / num_batches;
    let remainder = n % num_batches;
    let mut out = Vec::with_capacity(num_batches);
    let mut start = 0;
    for b in 0..num_batches {
        let len = base + usize::from(b < remainder);
        let idx: Vec<usize> = (start..start + len).collect();
        out.push(MicroBatch {
            batch_id: b as u64 + 1,
            rows: xs.select_rows(&idx),
            targets: idx.iter().map(|&i| ys[i]).collect(),
        });
        start += len;
    }
    Ok(out)
}

/// Scheduling knobs for the per-window training calls; results are
/// independent of them.
#[derive(Default)]
pub struct StreamOptions<'a> {
    pub threads: Option<usize>,
    /// Sink for one report line per window plus the final averages line.
    pub log: Option<&'a mut dyn Write>,
    /// Wall-clock pause between batch arrivals, to mimic a paced source.
    /// Affects timings only, never metrics.
    pub pace_ms: u64,
}

/// Replay a batch sequence through the sliding window. One model is
/// initialized up front and persists across windows; every window trains it
/// further on the concatenated older batches, then tests on the newest
/// batch before it is ever trained on (prequential order). Produces exactly
/// `batches - ws + 1` reports.
pub fn run_stream(
    batches: Vec<MicroBatch>,
    window_size: usize,
    hp: &Hyperparams,
    activation: ActivationKind,
    task: TaskKind,
) -> Result<Vec<WindowReport>> {
    run_stream_with(
        batches,
        window_size,
        hp,
        activation,
        task,
        StreamOptions::default(),
    )
}

pub fn run_stream_with(
    batches: Vec<MicroBatch>,
    window_size: usize,
    hp: &Hyperparams,
    activation: ActivationKind,
    task: TaskKind,
    mut options: StreamOptions<'_>,
) -> Result<Vec<WindowReport>> {
    if batches.len() < window_size {
        return Err(Error::TooFewBatches {
            needed: window_size,
            window: window_size,
            got: batches.len(),
        });
    }
    let nin = batches[0].rows.cols();
    let mut model = init_model(nin, hp, activation, task)?;
    let mut momentum = MomentumState::zeros_like(&model);
    let mut window = StreamWindow::new(window_size)?;
    let mut reports = Vec::with_capacity(batches.len() - window_size + 1);

    let mut first_arrival = true;
    for batch in batches {
        if options.pace_ms > 0 && !first_arrival {
            std::thread::sleep(std::time::Duration::from_millis(options.pace_ms));
        }
        first_arrival = false;
        window.enqueue(batch)?;
        if !window.is_full() {
            continue;
        }
        let started = Instant::now();
        let window_index = reports.len() + 1;

        let training: Vec<&MicroBatch> = window.batches().take(window_size - 1).collect();
        let trained_on: Vec<u64> = training.iter().map(|b| b.batch_id).collect();
        let train_x = Matrix::vstack(training.iter().map(|b| &b.rows))?;
        let train_y: Vec<f64> = training
            .iter()
            .flat_map(|b| b.targets.iter().copied())
            .collect();
        let test = window
            .batches()
            .last()
            .expect("full window has a newest batch");

        let outcome = train_from(
            model,
            momentum,
            &train_x,
            &train_y,
            hp,
            TrainOptions {
                threads: options.threads,
                log: None,
            },
        )?;
        model = outcome.final_model;
        momentum = outcome.final_momentum;

        let metrics = evaluate(&model, &test.rows, &test.targets)?;
        let report = WindowReport {
            window_index,
            trained_on,
            tested_on: test.batch_id,
            metrics,
            elapsed_s: started.elapsed().as_secs_f64(),
        };
        if let Some(log) = options.log.as_deref_mut() {
            writeln!(log, "{}", report.render()).map_err(|e| Error::io("stream log", e))?;
        }
        reports.push(report);
        window.slide()?;
    }

    if let Some(log) = options.log.as_deref_mut() {
        writeln!(log, "{}", summarize(&reports).render())
            .map_err(|e| Error::io("stream log", e))?;
    }
    Ok(reports)
}
