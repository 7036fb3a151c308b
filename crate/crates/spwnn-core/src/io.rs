//! Line-oriented text persistence for trained models.
//!
//! Layout: a `SPWNN v1` magic line, a descriptor line
//! `<activation> <task> <nin> <nhn>`, then four sections headed `w`, `W`,
//! `a`, `b`. The input-weight block is printed row-major as nin rows of nhn
//! values; the three vectors are one row each. Numbers carry 17 significant
//! digits so parsing reproduces the exact in-memory bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::WnnModel;

const MAGIC: &str = "SPWNN v1";

fn fmt_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        // 1 leading digit + 16 fractional digits = 17 significant digits.
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

/// Render a model in the `SPWNN v1` text format.
pub fn model_to_string(model: &WnnModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(
        out,
        "{} {} {} {}",
        model.activation(),
        model.task(),
        model.nin(),
        model.nhn()
    );
    out.push_str("w\n");
    for i in 0..model.nin() {
        fmt_row(&mut out, model.input_weights().row(i));
    }
    out.push_str("W\n");
    fmt_row(&mut out, model.output_weights());
    out.push_str("a\n");
    fmt_row(&mut out, model.dilations());
    out.push_str("b\n");
    fmt_row(&mut out, model.translations());
    out
}

/// Parse a model from the `SPWNN v1` text format.
pub fn model_from_str(text: &str) -> Result<WnnModel> {
    let bad = |msg: String| Error::ModelFormat(msg);
    let mut lines = text.lines();

    let magic = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if magic.trim_end() != MAGIC {
        return Err(bad(format!("expected {MAGIC:?} header, got {magic:?}")));
    }

    let descriptor = lines
        .next()
        .ok_or_else(|| bad("missing descriptor line".into()))?;
    let fields: Vec<&str> = descriptor.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(bad(format!(
            "descriptor needs 4 fields (activation task nin nhn), got {}",
            fields.len()
        )));
    }
    let activation = fields[0].parse()?;
    let task = fields[1].parse()?;
    let nin: usize = fields[2]
        .parse()
        .map_err(|_| bad(format!("bad nin {:?}", fields[2])))?;
    let nhn: usize = fields[3]
        .parse()
        .map_err(|_| bad(format!("bad nhn {:?}", fields[3])))?;

    fn expect_header<'a>(
        lines: &mut impl Iterator<Item = &'a str>,
        name: &str,
    ) -> Result<()> {
        match lines.next() {
            Some(l) if l.trim_end() == name => Ok(()),
            Some(l) => Err(Error::ModelFormat(format!(
                "expected section {name:?}, got {l:?}"
            ))),
            None => Err(Error::ModelFormat(format!("missing section {name:?}"))),
        }
    }
    fn parse_row(line: Option<&str>, len: usize, section: &str) -> Result<Vec<f64>> {
        let line = line.ok_or_else(|| {
            Error::ModelFormat(format!("truncated {section} section"))
        })?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::ModelFormat(format!("bad number {tok:?} in section {section}"))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != len {
            return Err(Error::ModelFormat(format!(
                "section {section}: expected {len} values per row, got {}",
                row.len()
            )));
        }
        Ok(row)
    }

    expect_header(&mut lines, "w")?;
    let mut weight_rows = Vec::with_capacity(nin);
    for _ in 0..nin {
        weight_rows.push(parse_row(lines.next(), nhn, "w")?);
    }
    expect_header(&mut lines, "W")?;
    let output_weights = parse_row(lines.next(), nhn, "W")?;
    expect_header(&mut lines, "a")?;
    let dilations = parse_row(lines.next(), nhn, "a")?;
    expect_header(&mut lines, "b")?;
    let translations = parse_row(lines.next(), nhn, "b")?;

    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(bad(format!("unexpected trailing content {extra:?}")));
    }

    WnnModel::from_parts(
        Matrix::from_rows(&weight_rows)?,
        output_weights,
        dilations,
        translations,
        activation,
        task,
    )
}

pub fn save_model(model: &WnnModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<WnnModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::model::{init_model, Hyperparams, TaskKind};

    fn sample_model() -> WnnModel {
        let hp = Hyperparams {
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 4,
            epochs: 1,
            hidden_nodes: 5,
            partitions: 1,
            seed: 99,
        };
        init_model(3, &hp, ActivationKind::Morlet, TaskKind::Classification).unwrap()
    }

    #[test]
    fn round_trip_is_exact_and_stable() {
        let model = sample_model();
        let text = model_to_string(&model);
        let parsed = model_from_str(&text).unwrap();
        assert_eq!(parsed, model);
        assert_eq!(model_to_string(&parsed), text);
    }

    #[test]
    fn layout_matches_contract() {
        let model = sample_model();
        let text = model_to_string(&model);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "SPWNN v1");
        assert_eq!(lines[1], "morlet classification 3 5");
        assert_eq!(lines[2], "w");
        assert_eq!(lines[2 + 3 + 1], "W"); // after 3 weight rows
        assert_eq!(lines[2 + 3 + 3], "a");
        assert_eq!(lines[2 + 3 + 5], "b");
        assert_eq!(lines.len(), 2 + 1 + 3 + 3 * 2);
        // Every numeric token has 17 significant digits.
        assert!(lines[3]
            .split(' ')
            .all(|tok| tok.contains('.') && tok.contains('e')));
    }

    #[test]
    fn rejects_corrupt_headers_and_shapes() {
        let model = sample_model();
        let text = model_to_string(&model);
        assert!(model_from_str(&text.replace("SPWNN v1", "SPWNN v2")).is_err());
        assert!(model_from_str(&text.replace("morlet", "sombrero")).is_err());
        let truncated: String = text
            .lines()
            .take(5)
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(model_from_str(&truncated).is_err());
    }
}
