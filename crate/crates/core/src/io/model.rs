use std::fs;
use std::path::Path;

use log::info;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{DecisionModel, Layer, Network};
use crate::scalar::Scalar;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a weight file. The SHA-256 of the raw bytes is logged.
pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    info!("model {} sha256 {}", path.display(), sha256_hex(&bytes));
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::ModelParse(format!("not UTF-8: {e}")))?;
    parse_model(text)
}

/// `{"num_classes": n, "layers": [{"type": "dense", "weights": [[..]], "bias": [..]}, {"type": "relu"}]}`
pub fn parse_model<T: Scalar>(text: &str) -> Result<Network<T>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::ModelParse(e.to_string()))?;
    let num_classes = doc
        .get("num_classes")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::ModelParse("missing integer \"num_classes\"".into()))? as usize;
    let layers = doc
        .get("layers")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::ModelParse("missing array \"layers\"".into()))?;
    let parsed = layers
        .iter()
        .enumerate()
        .map(|(i, l)| parse_layer(l).map_err(|message| Error::LayerParse { layer: i, message }))
        .collect::<Result<Vec<_>>>()?;
    Network::new(parsed, num_classes)
}

fn numbers<T: Scalar>(v: &Value, what: &str) -> std::result::Result<Vec<T>, String> {
    v.as_array()
        .ok_or_else(|| format!("{what} is not an array"))?
        .iter()
        .map(|n| {
            n.as_f64()
                .filter(|f| f.is_finite())
                .map(T::lit)
                .ok_or_else(|| format!("{what} holds a non-numeric entry {n}"))
        })
        .collect()
}

fn parse_layer<T: Scalar>(v: &Value) -> std::result::Result<Layer<T>, String> {
    match v.get("type").and_then(Value::as_str) {
        Some("relu") => Ok(Layer::Relu),
        Some("dense") => {
            let rows = v
                .get("weights")
                .and_then(Value::as_array)
                .ok_or("dense layer without \"weights\"")?
                .iter()
                .enumerate()
                .map(|(r, row)| numbers(row, &format!("weights row {r}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let bias = numbers(v.get("bias").ok_or("dense layer without \"bias\"")?, "bias")?;
            Layer::dense(rows, bias).map_err(|e| e.to_string())
        }
        Some(other) => Err(format!("unknown layer type {other:?}")),
        None => Err("layer without \"type\"".into()),
    }
}

pub fn model_to_json<T: Scalar>(net: &Network<T>) -> String {
    let layers: Vec<Value> = net
        .layers()
        .iter()
        .map(|l| match l {
            Layer::Relu => json!({"type": "relu"}),
            Layer::Dense { weights, bias, inputs, .. } => {
                let rows: Vec<Vec<f64>> = weights
                    .chunks(*inputs)
                    .map(|r| r.iter().map(|w| w.as_f64()).collect())
                    .collect();
                let b: Vec<f64> = bias.iter().map(|v| v.as_f64()).collect();
                json!({"type": "dense", "weights": rows, "bias": b})
            }
        })
        .collect();
    json!({"num_classes": net.num_classes(), "layers": layers}).to_string()
}

pub fn save_model<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(net)).map_err(|e| Error::io(path, e))
}
