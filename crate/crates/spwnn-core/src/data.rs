//! Dataset ingestion, min-max normalization, train/test splitting, Welch-t
//! feature ranking and the synthetic generators used by the test suites.

use std::fs;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::TaskKind;
use crate::rng::seeded_rng;

/// A feature matrix with its aligned target vector and column metadata.
/// `norm_stats` is set once the dataset has been normalized (or had stored
/// statistics applied to it).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub target: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub norm_stats: Option<NormStats>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }
}

/// Per-feature (min, max) pairs recorded from training data, plus the target
/// range for regression tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub features: Vec<(f64, f64)>,
    pub target: Option<(f64, f64)>,
}

fn affine_01(v: f64, (min, max): (f64, f64)) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        // Constant column: everything maps to 0.
        0.0
    }
}

impl NormStats {
    /// Min-max statistics from the first `rows` rows of a dataset; the
    /// target range is recorded for regression only.
    pub fn fit_prefix(ds: &Dataset, rows: usize, task: TaskKind) -> NormStats {
        let rows = rows.min(ds.n_rows());
        let d = ds.n_features();
        let mut features = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for i in 0..rows {
            for (j, &v) in ds.features.row(i).iter().enumerate() {
                let (min, max) = &mut features[j];
                *min = min.min(v);
                *max = max.max(v);
            }
        }
        let target = match task {
            TaskKind::Regression => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for &y in &ds.target[..rows] {
                    min = min.min(y);
                    max = max.max(y);
                }
                Some((min, max))
            }
            TaskKind::Classification => None,
        };
        NormStats { features, target }
    }

    pub fn fit(ds: &Dataset, task: TaskKind) -> NormStats {
        Self::fit_prefix(ds, ds.n_rows(), task)
    }

    /// Apply the stored affine maps to every feature (and regression
    /// target), returning a dataset that carries these statistics.
    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for i in 0..out.features.rows() {
            for j in 0..out.features.cols() {
                let v = affine_01(out.features.get(i, j), self.features[j]);
                out.features.set(i, j, v);
            }
        }
        if let Some(range) = self.target {
            for y in &mut out.target {
                *y = affine_01(*y, range);
            }
        }
        out.norm_stats = Some(self.clone());
        out
    }

    /// Sidecar text format so prediction runs can reuse training statistics.
    pub fn to_text(&self) -> String {
        let mut out = String::from("SPWNN-NORM v1\n");
        for (min, max) in &self.features {
            let _ = writeln!(out, "feature {min:.16e} {max:.16e}");
        }
        if let Some((min, max)) = self.target {
            let _ = writeln!(out, "target {min:.16e} {max:.16e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<NormStats> {
        let bad = |msg: String| Error::ModelFormat(msg);
        let mut lines = text.lines();
        match lines.next() {
            Some("SPWNN-NORM v1") => {}
            other => return Err(bad(format!("bad normalization header {other:?}"))),
        }
        let mut features = Vec::new();
        let mut target = None;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad(format!("bad normalization line {line:?}")));
            }
            let min: f64 = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad number {:?}", fields[1])))?;
            let max: f64 = fields[2]
                .parse()
                .map_err(|_| bad(format!("bad number {:?}", fields[2])))?;
            match fields[0] {
                "feature" => features.push((min, max)),
                "target" => target = Some((min, max)),
                other => return Err(bad(format!("bad normalization key {other:?}"))),
            }
        }
        Ok(NormStats { features, target })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<NormStats> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Min-max scale both sets to the training set's [0, 1] using statistics
/// from the training set only; test values may land outside [0, 1].
/// Regression targets are scaled with the same rule, classification targets
/// are left as labels.
pub fn normalize(train: &Dataset, test: &Dataset, task: TaskKind) -> (Dataset, Dataset) {
    let stats = NormStats::fit(train, task);
    (stats.apply(train), stats.apply(test))
}

/// Disjoint train/test row sets whose union is the original dataset.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
}

fn take_rows(ds: &Dataset, idx: &[usize]) -> Dataset {
    Dataset {
        features: ds.features.select_rows(idx),
        target: idx.iter().map(|&i| ds.target[i]).collect(),
        feature_names: ds.feature_names.clone(),
        target_name: ds.target_name.clone(),
        norm_stats: ds.norm_stats.clone(),
    }
}

/// Split with |train| = round(ratio * n). `shuffle` picks between a seeded
/// shuffle (static mode) and an order-preserving prefix/suffix cut (stream
/// preparation).
pub fn split(ds: &Dataset, ratio: f64, seed: u64, shuffle: bool) -> Result<SplitPair> {
    let n = ds.n_rows();
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument {
            what: "split ratio",
            why: format!("{ratio} is not in (0, 1)"),
        });
    }
    let train_n = (ratio * n as f64).round() as usize;
    if train_n == 0 || train_n == n {
        return Err(Error::InvalidArgument {
            what: "split ratio",
            why: format!("ratio {ratio} leaves an empty side for {n} rows"),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut seeded_rng(seed));
    }
    Ok(SplitPair {
        train: take_rows(ds, &order[..train_n]),
        test: take_rows(ds, &order[train_n..]),
        ratio,
    })
}

/// How a column is referred to on the command line: by header name, or by
/// zero-based position when no header matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    pub fn parse(s: &str) -> ColumnRef {
        ColumnRef::Name(s.to_string())
    }

    fn resolve(&self, header: &[String]) -> Option<usize> {
        match self {
            ColumnRef::Index(i) => (*i < header.len()).then_some(*i),
            ColumnRef::Name(name) => header
                .iter()
                .position(|h| h == name)
                .or_else(|| name.parse::<usize>().ok().filter(|&i| i < header.len())),
        }
    }
}

/// A parsed CSV plus how many malformed rows were dropped on the way in.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: Dataset,
    pub rejected_rows: usize,
}

/// Read a delimited text file with a header row. The target column is
/// pulled out of the feature block, listed drop columns are discarded, and
/// any row with an unparseable or non-finite cell is rejected (counted, not
/// fatal). With `positive_label` set the target is read as a class label
/// mapped to 1 when equal to the label and 0 otherwise.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &ColumnRef,
    drop_columns: &[ColumnRef],
    positive_label: Option<&str>,
    delimiter: u8,
) -> Result<CsvLoad> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let target_idx = target_column
        .resolve(&header)
        .ok_or_else(|| Error::MissingColumn(format!("{target_column:?}")))?;
    let mut dropped = vec![false; header.len()];
    for col in drop_columns {
        let idx = col
            .resolve(&header)
            .ok_or_else(|| Error::MissingColumn(format!("{col:?}")))?;
        dropped[idx] = true;
    }
    dropped[target_idx] = true; // never also a feature

    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| !dropped[i])
        .map(|(_, h)| h.clone())
        .collect();
    let feature_idx: Vec<usize> = (0..header.len()).filter(|&i| !dropped[i]).collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut target = Vec::new();
    let mut rejected = 0usize;
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let mut parsed = Vec::with_capacity(feature_idx.len());
        let mut ok = record.len() == header.len();
        if ok {
            for &i in &feature_idx {
                match record[i].trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => parsed.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        let y = if ok {
            let raw = record[target_idx].trim();
            match positive_label {
                Some(label) => Some(if raw == label { 1.0 } else { 0.0 }),
                None => match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    Ok(_) => None,
                    Err(_) => {
                        return Err(Error::TargetNotNumeric {
                            row: row_no + 1,
                            value: raw.to_string(),
                        })
                    }
                },
            }
        } else {
            None
        };
        match y {
            Some(y) if ok => {
                rows.extend_from_slice(&parsed);
                target.push(y);
            }
            _ => rejected += 1,
        }
    }

    if target.is_empty() {
        return Err(Error::NoValidRows {
            path: path.to_path_buf(),
            rejected,
        });
    }

    let features = Matrix::from_vec(target.len(), feature_idx.len(), rows)?;
    Ok(CsvLoad {
        dataset: Dataset {
            features,
            target,
            feature_names,
            target_name: header[target_idx].clone(),
            norm_stats: None,
        },
        rejected_rows: rejected,
    })
}

/// Feature-only variant for prediction inputs that carry no target column.
pub fn load_csv_features(
    path: impl AsRef<Path>,
    drop_columns: &[ColumnRef],
    delimiter: u8,
) -> Result<(Matrix, Vec<String>, usize)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut dropped = vec![false; header.len()];
    for col in drop_columns {
        let idx = col
            .resolve(&header)
            .ok_or_else(|| Error::MissingColumn(format!("{col:?}")))?;
        dropped[idx] = true;
    }
    let feature_idx: Vec<usize> = (0..header.len()).filter(|&i| !dropped[i]).collect();
    let names: Vec<String> = feature_idx.iter().map(|&i| header[i].clone()).collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut kept = 0usize;
    let mut rejected = 0usize;
    for record in reader.records() {
        let record = record?;
        let mut parsed = Vec::with_capacity(feature_idx.len());
        let mut ok = record.len() == header.len();
        if ok {
            for &i in &feature_idx {
                match record[i].trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => parsed.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if ok {
            rows.extend_from_slice(&parsed);
            kept += 1;
        } else {
            rejected += 1;
        }
    }
    Ok((Matrix::from_vec(kept, feature_idx.len(), rows)?, names, rejected))
}

/// Write a dataset back out as delimited text, one header row then data
/// rows, so synthetic sets can be replayed through the CLI.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let sep = char::from(delimiter);
    let mut out = String::new();
    for name in &ds.feature_names {
        let _ = write!(out, "{name}{sep}");
    }
    let _ = writeln!(out, "{}", ds.target_name);
    for i in 0..ds.n_rows() {
        for v in ds.features.row(i) {
            let _ = write!(out, "{v}{sep}");
        }
        let _ = writeln!(out, "{}", ds.target[i]);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Welch two-sample t-statistic per feature between the two target classes:
/// t = (mean1 - mean0) / sqrt(s1^2/n1 + s0^2/n0) with sample variances.
/// Features with a zero denominator get t = 0.
pub fn welch_t_values(ds: &Dataset) -> Result<Vec<f64>> {
    let idx1: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.target[i] >= 0.5).collect();
    let idx0: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.target[i] < 0.5).collect();
    if idx0.is_empty() || idx1.is_empty() {
        return Err(Error::SingleClass);
    }

    let stats = |idx: &[usize], j: usize| -> (f64, f64) {
        let n = idx.len() as f64;
        let mean = idx.iter().map(|&i| ds.features.get(i, j)).sum::<f64>() / n;
        let variance = if idx.len() > 1 {
            idx.iter()
                .map(|&i| {
                    let d = ds.features.get(i, j) - mean;
                    d * d
                })
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        (mean, variance)
    };

    Ok((0..ds.n_features())
        .map(|j| {
            let (mean1, var1) = stats(&idx1, j);
            let (mean0, var0) = stats(&idx0, j);
            let denom = (var1 / idx1.len() as f64 + var0 / idx0.len() as f64).sqrt();
            if denom > 0.0 {
                (mean1 - mean0) / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// Rank features by |Welch t| descending (ties keep original column order)
/// and keep the top k, reordering columns by rank. Returns the reduced
/// dataset and the full ranking as (feature_name, t_value).
pub fn t_value_select(ds: &Dataset, k: usize) -> Result<(Dataset, Vec<(String, f64)>)> {
    if k == 0 || k > ds.n_features() {
        return Err(Error::InvalidArgument {
            what: "top-k",
            why: format!("{k} is not in 1..={}", ds.n_features()),
        });
    }
    let t_values = welch_t_values(ds)?;
    let mut order: Vec<usize> = (0..t_values.len()).collect();
    order.sort_by(|&a, &b| {
        t_values[b]
            .abs()
            .total_cmp(&t_values[a].abs())
            .then(a.cmp(&b))
    });

    let ranking: Vec<(String, f64)> = order
        .iter()
        .map(|&j| (ds.feature_names[j].clone(), t_values[j]))
        .collect();
    let kept = &order[..k];
    let reduced = Dataset {
        features: ds.features.select_cols(kept),
        target: ds.target.clone(),
        feature_names: kept.iter().map(|&j| ds.feature_names[j].clone()).collect(),
        target_name: ds.target_name.clone(),
        norm_stats: None,
    };
    Ok((reduced, ranking))
}

/// One-feature regression set: x uniform on [-3, 3], y the Morlet wavelet at
/// x plus Gaussian noise. A single hidden node can represent the noiseless
/// target exactly.
pub fn synth_regression(n: usize, noise_sd: f64, seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("finite noise sd");
    let mut features = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(-3.0..=3.0);
        let eps = if noise_sd > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        features.push(x);
        target.push(ActivationKind::Morlet.value(x) + eps);
    }
    Dataset {
        features: Matrix::from_vec(n, 1, features).expect("shape"),
        target,
        feature_names: vec!["x".into()],
        target_name: "y".into(),
        norm_stats: None,
    }
}

/// Two 2-D Gaussian blobs with unit variance, centred `separation` apart on
/// the first axis, labels alternating 0/1 so any contiguous slice holds both
/// classes.
pub fn synth_classification(n: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(2 * n);
    let mut target = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as f64;
        let center = (label - 0.5) * separation;
        features.push(center + noise.sample(&mut rng));
        features.push(noise.sample(&mut rng));
        target.push(label);
    }
    Dataset {
        features: Matrix::from_vec(n, 2, features).expect("shape"),
        target,
        feature_names: vec!["x0".into(), "x1".into()],
        target_name: "label".into(),
        norm_stats: None,
    }
}
