//! Flag and config-file resolution. Every option can come from three
//! places with fixed precedence: explicit flag, then config file, then the
//! per-mode/per-task default. The fully resolved configuration is echoed to
//! the metrics sink before any result line, as `# key=value` lines whose
//! keys mirror the flag names, so a stripped header reproduces the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use spwnn_core::{ActivationKind, Hyperparams, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Predict,
    Stream,
    Bench,
    SelectFeatures,
    Synth,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Predict => "predict",
            Mode::Stream => "stream",
            Mode::Bench => "bench",
            Mode::SelectFeatures => "select-features",
            Mode::Synth => "synth",
        }
    }
}

/// The raw command-line surface, shared by every subcommand. Everything is
/// optional here; resolution decides what a mode actually needs.
#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// Input data file (output path for synth)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Where to write a derived dataset (reduced features, test split)
    #[arg(long)]
    pub data_out: Option<PathBuf>,
    /// Target column, by header name or zero-based index
    #[arg(long)]
    pub target: Option<String>,
    /// Class label mapped to 1; everything else maps to 0
    #[arg(long)]
    pub positive_label: Option<String>,
    /// Columns to drop before training (repeatable, comma-separated)
    #[arg(long, value_delimiter = ',')]
    pub drop: Vec<String>,
    /// Field delimiter for data files
    #[arg(long)]
    pub delimiter: Option<char>,
    /// regression | classification
    #[arg(long)]
    pub task: Option<String>,
    /// morlet | gaussian
    #[arg(long)]
    pub activation: Option<String>,
    /// Hidden wavelet nodes
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Momentum coefficient in [0, 1)
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Mini-batch size
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Training epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Data partitions (bench accepts a comma-separated list)
    #[arg(long)]
    pub partitions: Option<String>,
    /// Worker threads (default: min(partitions, cores))
    #[arg(long)]
    pub threads: Option<usize>,
    /// RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train fraction of the train/test split
    #[arg(long)]
    pub split: Option<f64>,
    /// Keep the k best features by |Welch t|
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Sliding-window length in batches
    #[arg(long)]
    pub window_size: Option<usize>,
    /// Number of micro-batches the stream is cut into
    #[arg(long)]
    pub num_batches: Option<usize>,
    /// Pause between batch arrivals (timings only, never results)
    #[arg(long)]
    pub pace_ms: Option<u64>,
    /// Rows for synthetic data
    #[arg(long)]
    pub rows: Option<usize>,
    /// Noise standard deviation for synthetic regression
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Class-mean distance for synthetic classification
    #[arg(long)]
    pub separation: Option<f64>,
    /// Where to save the trained model
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Model file to load
    #[arg(long)]
    pub model_in: Option<PathBuf>,
    /// Metrics sink (default: stdout)
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    /// key=value file supplying defaults for any flag
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A fully resolved run. Field names mirror the flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub data: Option<PathBuf>,
    pub data_out: Option<PathBuf>,
    pub target: Option<String>,
    pub positive_label: Option<String>,
    pub drop: Vec<String>,
    pub delimiter: char,
    pub task: TaskKind,
    pub activation: ActivationKind,
    pub hidden: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub partitions: Vec<usize>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub split: f64,
    pub top_k: Option<usize>,
    pub window_size: usize,
    pub num_batches: usize,
    pub pace_ms: u64,
    pub rows: usize,
    pub noise_sd: f64,
    pub separation: f64,
    pub model_out: Option<PathBuf>,
    pub model_in: Option<PathBuf>,
    pub metrics_out: Option<PathBuf>,
}

const CONFIG_KEYS: &[&str] = &[
    "mode",
    "data",
    "data-out",
    "target",
    "positive-label",
    "drop",
    "delimiter",
    "task",
    "activation",
    "hidden",
    "lr",
    "momentum",
    "batch-size",
    "epochs",
    "partitions",
    "threads",
    "seed",
    "split",
    "top-k",
    "window-size",
    "num-batches",
    "pace-ms",
    "rows",
    "noise-sd",
    "separation",
    "model-out",
    "model-in",
    "metrics-out",
];

/// Parse a flat key=value config file. Blank lines and `#` comments are
/// skipped; `# key=value` comment lines are honoured too, so an echoed
/// metrics header can be replayed as-is.
pub fn parse_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {path:?}"))?;
    let mut map = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let mut line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            // Only comment lines shaped like an echoed header count.
            if rest.contains('=') && CONFIG_KEYS.contains(&rest.split('=').next().unwrap_or("")) {
                line = rest;
            } else {
                continue;
            }
        }
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("config line {} is not key=value: {raw:?}", line_no + 1))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            bail!("unknown config key {key:?} on line {}", line_no + 1);
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn pick<T, F>(flag: Option<T>, config: &BTreeMap<String, String>, key: &str, parse: F) -> Result<Option<T>>
where
    F: FnOnce(&str) -> Result<T>,
{
    if let Some(v) = flag {
        return Ok(Some(v));
    }
    match config.get(key) {
        Some(raw) => parse(raw).map(Some).with_context(|| format!("config key {key}")),
        None => Ok(None),
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| anyhow::anyhow!("{e}: {s:?}"))
}

fn parse_partition_list(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|tok| parse_num::<usize>(tok.trim()))
        .collect::<Result<_>>()?;
    if parts.is_empty() || parts.contains(&0) {
        bail!("partitions must be positive: {s:?}");
    }
    Ok(parts)
}

/// Table-driven defaults: static-mode and streaming-mode hyperparameter
/// combinations per task, everything overridable.
fn default_hp(mode: Mode, task: TaskKind) -> (usize, f64, f64, usize, usize) {
    // (hidden, lr, momentum, batch_size, epochs)
    match (mode, task) {
        (Mode::Stream, TaskKind::Classification) => (150, 0.2, 0.999, 16, 100),
        (Mode::Stream, TaskKind::Regression) => (10, 0.2, 0.999, 512, 100),
        (_, TaskKind::Classification) => (150, 0.45, 0.999, 32, 100),
        (_, TaskKind::Regression) => (10, 0.45, 0.999, 2048, 1000),
    }
}

pub fn resolve(mode: Mode, args: &CommonArgs) -> Result<RunConfig> {
    let config = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    let a = args.clone();

    let task_str = pick(a.task, &config, "task", |s| Ok(s.to_string()))?;
    let task = match (&task_str, mode) {
        (Some(s), _) => TaskKind::from_str(s).map_err(|e| anyhow::anyhow!("{e}"))?,
        (None, Mode::Predict) => TaskKind::Regression, // replaced by the model file's task
        (None, _) => bail!("--task is required for {}", mode.name()),
    };
    let activation_str = pick(a.activation, &config, "activation", |s| Ok(s.to_string()))?;
    let activation = match activation_str {
        Some(s) => ActivationKind::from_str(&s).map_err(|e| anyhow::anyhow!("{e}"))?,
        None => ActivationKind::Morlet,
    };

    let (d_hidden, d_lr, d_momentum, d_bs, d_epochs) = default_hp(mode, task);
    let partitions = match pick(a.partitions, &config, "partitions", |s| Ok(s.to_string()))? {
        Some(s) => parse_partition_list(&s)?,
        None => vec![1],
    };
    if mode != Mode::Bench && partitions.len() != 1 {
        bail!("--partitions takes a single value outside bench mode");
    }

    let num_batches_default = match task {
        TaskKind::Classification => 10,
        TaskKind::Regression => 20,
    };

    Ok(RunConfig {
        mode,
        data: pick(a.data, &config, "data", |s| Ok(PathBuf::from(s)))?,
        data_out: pick(a.data_out, &config, "data-out", |s| Ok(PathBuf::from(s)))?,
        target: pick(a.target, &config, "target", |s| Ok(s.to_string()))?,
        positive_label: pick(a.positive_label, &config, "positive-label", |s| {
            Ok(s.to_string())
        })?,
        drop: pick(
            (!a.drop.is_empty()).then_some(a.drop),
            &config,
            "drop",
            |s| {
                Ok(s.split(',')
                    .map(|t| t.trim().to_string())
                    .filter(|t| !t.is_empty())
                    .collect::<Vec<_>>())
            },
        )?
        .unwrap_or_default(),
        delimiter: pick(a.delimiter, &config, "delimiter", |s| {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => bail!("delimiter must be one character: {s:?}"),
            }
        })?
        .unwrap_or(','),
        task,
        activation,
        hidden: pick(a.hidden, &config, "hidden", parse_num)?.unwrap_or(d_hidden),
        lr: pick(a.lr, &config, "lr", parse_num)?.unwrap_or(d_lr),
        momentum: pick(a.momentum, &config, "momentum", parse_num)?.unwrap_or(d_momentum),
        batch_size: pick(a.batch_size, &config, "batch-size", parse_num)?.unwrap_or(d_bs),
        epochs: pick(a.epochs, &config, "epochs", parse_num)?.unwrap_or(d_epochs),
        partitions,
        threads: pick(a.threads, &config, "threads", parse_num)?,
        seed: pick(a.seed, &config, "seed", parse_num)?.unwrap_or(42),
        split: pick(a.split, &config, "split", parse_num)?.unwrap_or(0.8),
        top_k: pick(a.top_k, &config, "top-k", parse_num)?,
        window_size: pick(a.window_size, &config, "window-size", parse_num)?.unwrap_or(2),
        num_batches: pick(a.num_batches, &config, "num-batches", parse_num)?
            .unwrap_or(num_batches_default),
        pace_ms: pick(a.pace_ms, &config, "pace-ms", parse_num)?.unwrap_or(0),
        rows: pick(a.rows, &config, "rows", parse_num)?.unwrap_or(2000),
        noise_sd: pick(a.noise_sd, &config, "noise-sd", parse_num)?.unwrap_or(0.01),
        separation: pick(a.separation, &config, "separation", parse_num)?.unwrap_or(4.0),
        model_out: pick(a.model_out, &config, "model-out", |s| Ok(PathBuf::from(s)))?,
        model_in: pick(a.model_in, &config, "model-in", |s| Ok(PathBuf::from(s)))?,
        metrics_out: pick(a.metrics_out, &config, "metrics-out", |s| Ok(PathBuf::from(s)))?,
    })
}

impl RunConfig {
    pub fn hyperparams(&self, partitions: usize) -> Hyperparams {
        Hyperparams {
            learning_rate: self.lr,
            momentum: self.momentum,
            batch_size: self.batch_size,
            epochs: self.epochs,
            hidden_nodes: self.hidden,
            partitions,
            seed: self.seed,
        }
    }

    /// The `# key=value` header lines. Keys mirror the flag names, so the
    /// header doubles as a config file for an identical re-run.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "# {k}={v}");
        };
        line("mode", self.mode.name().into());
        if let Some(p) = &self.data {
            line("data", p.display().to_string());
        }
        if let Some(p) = &self.data_out {
            line("data-out", p.display().to_string());
        }
        if let Some(t) = &self.target {
            line("target", t.clone());
        }
        if let Some(l) = &self.positive_label {
            line("positive-label", l.clone());
        }
        if !self.drop.is_empty() {
            line("drop", self.drop.join(","));
        }
        if self.delimiter != ',' {
            line("delimiter", self.delimiter.to_string());
        }
        line("task", self.task.to_string());
        line("activation", self.activation.to_string());
        line("hidden", self.hidden.to_string());
        line("lr", self.lr.to_string());
        line("momentum", self.momentum.to_string());
        line("batch-size", self.batch_size.to_string());
        line("epochs", self.epochs.to_string());
        line(
            "partitions",
            self.partitions
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        if let Some(t) = self.threads {
            line("threads", t.to_string());
        }
        line("seed", self.seed.to_string());
        match self.mode {
            Mode::Train | Mode::Bench | Mode::SelectFeatures => {
                line("split", self.split.to_string());
                if let Some(k) = self.top_k {
                    line("top-k", k.to_string());
                }
            }
            Mode::Stream => {
                line("window-size", self.window_size.to_string());
                line("num-batches", self.num_batches.to_string());
                line("pace-ms", self.pace_ms.to_string());
            }
            Mode::Synth => {
                line("rows", self.rows.to_string());
                line("noise-sd", self.noise_sd.to_string());
                line("separation", self.separation.to_string());
            }
            Mode::Predict => {}
        }
        if let Some(p) = &self.model_out {
            line("model-out", p.display().to_string());
        }
        if let Some(p) = &self.model_in {
            line("model-in", p.display().to_string());
        }
        if let Some(p) = &self.metrics_out {
            line("metrics-out", p.display().to_string());
        }
        out
    }
}
