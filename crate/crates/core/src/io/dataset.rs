use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::Dataset;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Reads `label,f0,f1,...` rows with features in `[0, 1]`.
pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

/// Row numbers in errors count data rows from 0, header excluded.
pub fn parse_dataset<T: Scalar>(text: &str) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::domain(format!("unreadable header: {e}")))?
        .clone();
    if header.is_empty() || header.get(0) == Some("") {
        return Err(Error::domain("empty dataset file"));
    }
    if header.get(0) != Some("label") {
        return Err(Error::domain(format!("first column must be \"label\", got {:?}", &header[0])));
    }
    let width = header.len() - 1;
    if width == 0 {
        return Err(Error::domain("dataset has no feature columns"));
    }
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Row { row, message: e.to_string() })?;
        if rec.len() != width + 1 {
            return Err(Error::Row {
                row,
                message: format!("{} fields, header has {}", rec.len(), width + 1),
            });
        }
        let label = rec[0].parse::<usize>().map_err(|e| Error::Row {
            row,
            message: format!("label {:?}: {e}", &rec[0]),
        })?;
        let features = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(k, s)| {
                let v: f64 = s.parse().map_err(|e| Error::Row {
                    row,
                    message: format!("f{k} {s:?}: {e}"),
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Row {
                        row,
                        message: format!("f{k} = {v} outside [0, 1]"),
                    });
                }
                Ok(T::lit(v))
            })
            .collect::<Result<Vec<_>>>()?;
        inputs.push(Tensor::from_vec(features));
        labels.push(label);
    }
    if inputs.is_empty() {
        return Err(Error::domain("dataset has no rows"));
    }
    Dataset::new(inputs, labels)
}

pub fn write_dataset<T: Scalar>(data: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let width = data.inputs.first().map_or(0, Tensor::len);
    let mut out = String::from("label");
    for k in 0..width {
        out.push_str(&format!(",f{k}"));
    }
    out.push('\n');
    for (x, y) in data.inputs.iter().zip(&data.labels) {
        out.push_str(&y.to_string());
        for v in x.iter() {
            out.push(',');
            out.push_str(&super::format_float(*v));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads `index,logit0,logit1,...` reference rows.
pub fn load_reference_logits(path: impl AsRef<Path>) -> Result<Vec<(usize, Vec<f64>)>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::domain(format!("{}: {e}", path.display())))?;
    reader
        .records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec.map_err(|e| Error::Row { row, message: e.to_string() })?;
            let bad = |e: String| Error::Row { row, message: e };
            let index = rec
                .get(0)
                .ok_or_else(|| bad("empty row".into()))?
                .parse()
                .map_err(|e| bad(format!("index: {e}")))?;
            let logits = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|e| bad(format!("logit {s:?}: {e}"))))
                .collect::<Result<_>>()?;
            Ok((index, logits))
        })
        .collect()
}
