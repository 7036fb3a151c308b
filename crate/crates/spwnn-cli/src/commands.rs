//! The six subcommands. Every run echoes its fully resolved configuration
//! to the metrics sink before any result line and ends with a `completed`
//! marker, so an interrupted run is recognizable by the missing marker.

use std::fs::File;
use std::io::{LineWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use spwnn_core::{
    evaluate, io, load_csv, load_csv_features, normalize, predict, run_stream_with, speedup,
    split, split_into_batches, synth_classification, synth_regression, t_value_select, train_with,
    ColumnRef, Dataset, Error, Matrix, NormStats, StreamOptions, TaskKind, TrainOptions,
};

use crate::config::{Mode, RunConfig};

/// Line sink for metrics and reports: the --metrics-out file, or stdout.
/// File output is line-buffered so an interrupt truncates at a line edge.
struct Sink {
    out: Box<dyn Write>,
}

impl Sink {
    fn open(path: Option<&PathBuf>) -> Result<Sink> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(LineWriter::new(
                File::create(p).with_context(|| format!("stage write-metrics: creating {p:?}"))?,
            )),
            None => Box::new(std::io::stdout()),
        };
        Ok(Sink { out })
    }

    fn raw(&mut self, text: &str) -> Result<()> {
        self.out
            .write_all(text.as_bytes())
            .context("stage write-metrics")
    }

    fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}").context("stage write-metrics")
    }

    fn complete(mut self) -> Result<()> {
        self.line("completed")?;
        self.out.flush().context("stage write-metrics")
    }
}

fn require_data(cfg: &RunConfig) -> Result<&PathBuf> {
    cfg.data
        .as_ref()
        .ok_or_else(|| anyhow!("stage load: --data is required for {}", cfg.mode.name()))
}

fn column_refs(names: &[String]) -> Vec<ColumnRef> {
    names.iter().map(|n| ColumnRef::parse(n)).collect()
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = require_data(cfg)?;
    let target = cfg
        .target
        .as_ref()
        .ok_or_else(|| anyhow!("stage load: --target is required for {}", cfg.mode.name()))?;
    let loaded = load_csv(
        path,
        &ColumnRef::parse(target),
        &column_refs(&cfg.drop),
        cfg.positive_label.as_deref(),
        cfg.delimiter as u8,
    )
    .with_context(|| format!("stage load: {path:?}"))?;
    if loaded.rejected_rows > 0 {
        eprintln!(
            "warning: rejected {} malformed row(s) in {path:?}",
            loaded.rejected_rows
        );
    }
    Ok(loaded.dataset)
}

fn norm_sidecar(model_path: &Path) -> PathBuf {
    let mut name = model_path.as_os_str().to_owned();
    name.push(".norm");
    PathBuf::from(name)
}

fn apply_selection(cfg: &RunConfig, ds: Dataset) -> Result<Dataset> {
    match cfg.top_k {
        Some(k) => {
            let (reduced, _) = t_value_select(&ds, k).context("stage select-features")?;
            Ok(reduced)
        }
        None => Ok(ds),
    }
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let mut sink = Sink::open(cfg.metrics_out.as_ref())?;
    sink.raw(&cfg.echo())?;

    let ds = load_dataset(cfg)?;
    let ds = apply_selection(cfg, ds)?;
    let pair = split(&ds, cfg.split, cfg.seed, true).context("stage split")?;
    if let Some(out) = &cfg.data_out {
        // Raw (pre-normalization) test split, so a later predict run can
        // reproduce the reported metrics through the saved statistics.
        spwnn_core::write_csv(&pair.test, out, cfg.delimiter as u8)
            .context("stage write-test-split")?;
    }
    let (train_ds, test_ds) = normalize(&pair.train, &pair.test, cfg.task);

    let hp = cfg.hyperparams(cfg.partitions[0]);
    let report = train_with(
        &train_ds.features,
        &train_ds.target,
        &hp,
        cfg.activation,
        cfg.task,
        TrainOptions {
            threads: cfg.threads,
            log: Some(&mut sink.out),
        },
    )
    .context("stage train")?;

    let metrics = evaluate(&report.final_model, &test_ds.features, &test_ds.target)
        .context("stage evaluate")?;
    sink.line(&format!("test {}", metrics.render()))?;

    if let Some(path) = &cfg.model_out {
        io::save_model(&report.final_model, path).context("stage save-model")?;
        if let Some(stats) = &train_ds.norm_stats {
            stats
                .save(norm_sidecar(path))
                .context("stage save-model")?;
        }
    }
    sink.complete()
}

pub fn cmd_predict(cfg: &RunConfig) -> Result<()> {
    let model_path = cfg
        .model_in
        .as_ref()
        .ok_or_else(|| anyhow!("stage load-model: --model-in is required for predict"))?;
    let model = io::load_model(model_path).context("stage load-model")?;
    let sidecar = norm_sidecar(model_path);
    let stats = if sidecar.exists() {
        Some(NormStats::load(&sidecar).context("stage load-model")?)
    } else {
        None
    };

    let data_path = require_data(cfg)?;
    let (features, targets): (Matrix, Option<Vec<f64>>) = match &cfg.target {
        Some(target) => match load_csv(
            data_path,
            &ColumnRef::parse(target),
            &column_refs(&cfg.drop),
            cfg.positive_label.as_deref(),
            cfg.delimiter as u8,
        ) {
            Ok(loaded) => (loaded.dataset.features, Some(loaded.dataset.target)),
            // A data file with no rows is a vacuous prediction run.
            Err(Error::NoValidRows { rejected: 0, .. }) => {
                (Matrix::zeros(0, model.nin()), None)
            }
            Err(e) => return Err(e).with_context(|| format!("stage load: {data_path:?}")),
        },
        None => {
            let (features, _, rejected) =
                load_csv_features(data_path, &column_refs(&cfg.drop), cfg.delimiter as u8)
                    .with_context(|| format!("stage load: {data_path:?}"))?;
            if rejected > 0 {
                eprintln!("warning: rejected {rejected} malformed row(s) in {data_path:?}");
            }
            (features, None)
        }
    };

    if features.rows() > 0 && features.cols() != model.nin() {
        bail!(
            "stage validate: model expects {} feature column(s), data has {}",
            model.nin(),
            features.cols()
        );
    }

    let features = match &stats {
        Some(s) => {
            let wrapped = Dataset {
                features,
                target: Vec::new(),
                feature_names: Vec::new(),
                target_name: String::new(),
                norm_stats: None,
            };
            let mut scaled = s.clone();
            scaled.target = None; // only features here; targets handled below
            scaled.apply(&wrapped).features
        }
        None => features,
    };

    let mut sink = Sink::open(cfg.metrics_out.as_ref())?;
    sink.raw(&cfg.echo())?;
    let scores = predict(&model, &features).context("stage predict")?;
    for score in &scores {
        match model.task() {
            TaskKind::Regression => sink.line(&format!("{score}"))?,
            TaskKind::Classification => {
                sink.line(&format!("{score} {}", u8::from(*score >= 0.5)))?
            }
        }
    }

    if let Some(mut ys) = targets {
        if !ys.is_empty() {
            if model.task() == TaskKind::Regression {
                if let Some(range) = stats.as_ref().and_then(|s| s.target) {
                    let span = range.1 - range.0;
                    for y in &mut ys {
                        *y = if span > 0.0 { (*y - range.0) / span } else { 0.0 };
                    }
                }
            }
            let metrics = evaluate(&model, &features, &ys).context("stage evaluate")?;
            sink.line(&format!("test {}", metrics.render()))?;
        }
    }
    sink.complete()
}

pub fn cmd_stream(cfg: &RunConfig) -> Result<()> {
    let mut sink = Sink::open(cfg.metrics_out.as_ref())?;
    sink.raw(&cfg.echo())?;

    let ds = load_dataset(cfg)?;
    if cfg.window_size < 2 {
        bail!("stage stream: --window-size must be at least 2");
    }
    if cfg.num_batches < cfg.window_size {
        bail!(
            "stage stream: need at least {} batches for window size {}, got {}",
            cfg.window_size,
            cfg.window_size,
            cfg.num_batches
        );
    }
    let raw_batches = split_into_batches(&ds.features, &ds.target, cfg.num_batches)
        .context("stage batch")?;
    // Normalization statistics come from the batches the first window
    // trains on; later data never leaks into them.
    let prefix_rows: usize = raw_batches[..cfg.window_size - 1]
        .iter()
        .map(|b| b.rows.rows())
        .sum();
    let stats = NormStats::fit_prefix(&ds, prefix_rows, cfg.task);
    let ds = stats.apply(&ds);
    let batches =
        split_into_batches(&ds.features, &ds.target, cfg.num_batches).context("stage batch")?;

    let hp = cfg.hyperparams(cfg.partitions[0]);
    run_stream_with(
        batches,
        cfg.window_size,
        &hp,
        cfg.activation,
        cfg.task,
        StreamOptions {
            threads: cfg.threads,
            log: Some(&mut sink.out),
            pace_ms: cfg.pace_ms,
        },
    )
    .context("stage stream")?;
    sink.complete()
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    let mut sink = Sink::open(cfg.metrics_out.as_ref())?;
    sink.raw(&cfg.echo())?;

    let ds = load_dataset(cfg)?;
    let ds = apply_selection(cfg, ds)?;
    let pair = split(&ds, cfg.split, cfg.seed, true).context("stage split")?;
    let (train_ds, _) = normalize(&pair.train, &pair.test, cfg.task);

    let run = |partitions: usize| -> Result<(spwnn_core::TrainReport, f64)> {
        let hp = cfg.hyperparams(partitions);
        let report = train_with(
            &train_ds.features,
            &train_ds.target,
            &hp,
            cfg.activation,
            cfg.task,
            TrainOptions {
                threads: cfg.threads,
                log: None,
            },
        )
        .with_context(|| format!("stage train: partitions={partitions}"))?;
        let wall = report.wall_time_s;
        Ok((report, wall))
    };

    let (baseline, sequential_s) = run(1)?;
    let baseline_text = io::model_to_string(&baseline.final_model);
    sink.line(&format!(
        "partitions=1 wall_time_s={sequential_s:.3} loss={}",
        baseline
            .per_epoch
            .last()
            .map_or(f64::NAN, |r| r.loss)
    ))?;

    for &p in &cfg.partitions {
        let (report, parallel_s) = run(p)?;
        let mut line = format!(
            "partitions={p} wall_time_s={parallel_s:.3} speedup={:.2} loss={}",
            speedup(sequential_s, parallel_s),
            report.per_epoch.last().map_or(f64::NAN, |r| r.loss)
        );
        if p == 1 {
            let identical = io::model_to_string(&report.final_model) == baseline_text;
            line.push_str(&format!(" identical_to_baseline={identical}"));
        }
        sink.line(&line)?;
    }
    sink.complete()
}

pub fn cmd_select_features(cfg: &RunConfig) -> Result<()> {
    let mut sink = Sink::open(cfg.metrics_out.as_ref())?;
    sink.raw(&cfg.echo())?;

    let ds = load_dataset(cfg)?;
    let k = cfg.top_k.unwrap_or_else(|| ds.n_features().min(100));
    let (reduced, ranking) = t_value_select(&ds, k).context("stage select-features")?;
    for (rank, (feature, t)) in ranking.iter().enumerate() {
        sink.line(&format!("rank={} feature={feature} t={t}", rank + 1))?;
    }
    if let Some(out) = &cfg.data_out {
        spwnn_core::write_csv(&reduced, out, cfg.delimiter as u8)
            .context("stage write-data")?;
        sink.line(&format!("kept={k} wrote={}", out.display()))?;
    }
    sink.complete()
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let out_path = require_data(cfg)?;
    let ds = match cfg.task {
        TaskKind::Regression => synth_regression(cfg.rows, cfg.noise_sd, cfg.seed),
        TaskKind::Classification => synth_classification(cfg.rows, cfg.separation, cfg.seed),
    };
    spwnn_core::write_csv(&ds, out_path, cfg.delimiter as u8).context("stage write-data")?;

    let mut sink = Sink::open(cfg.metrics_out.as_ref())?;
    sink.raw(&cfg.echo())?;
    sink.line(&format!(
        "wrote={} rows={} features={}",
        out_path.display(),
        ds.n_rows(),
        ds.n_features()
    ))?;
    sink.complete()
}

pub fn run(mode: Mode, args: &crate::config::CommonArgs) -> Result<()> {
    let cfg = crate::config::resolve(mode, args).context("stage configure")?;
    match mode {
        Mode::Train => cmd_train(&cfg),
        Mode::Predict => cmd_predict(&cfg),
        Mode::Stream => cmd_stream(&cfg),
        Mode::Bench => cmd_bench(&cfg),
        Mode::SelectFeatures => cmd_select_features(&cfg),
        Mode::Synth => cmd_synth(&cfg),
    }
}
