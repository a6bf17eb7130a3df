//! `wse-json` v1 serialization.
//!
//! ```json
//! {"format":"wse-json","version":1,
//!  "spec":{"dims":[2,32,1],"activations":["sine","identity"]},
//!  "omega0":30.0,
//!  "weights":[[[...row...], ...], ...],
//!  "biases":[[...], ...]}
//! ```
//!
//! Floats are written as the shortest decimal that parses back to the same
//! `f32`, so a round trip is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::element::WeightSpaceElement;
use super::matrix::Matrix;
use super::spec::{ActivationKind, NetworkSpec};

pub const FORMAT_NAME: &str = "wse-json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct DocOut<'a> {
    format: &'static str,
    version: u32,
    spec: &'a NetworkSpec,
    omega0: Option<f32>,
    weights: Vec<Vec<&'a [f32]>>,
    biases: &'a [Vec<f32>],
}

#[derive(Deserialize)]
struct SpecIn {
    dims: Vec<usize>,
    activations: Vec<ActivationKind>,
}

#[derive(Deserialize)]
struct DocIn {
    format: String,
    version: u32,
    spec: SpecIn,
    omega0: Option<f32>,
    weights: Vec<Vec<Vec<f32>>>,
    biases: Vec<Vec<f32>>,
}

pub fn serialize(elem: &WeightSpaceElement) -> Vec<u8> {
    let doc = DocOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        spec: elem.spec(),
        omega0: elem.omega0(),
        weights: elem.weights().iter().map(|w| w.iter_rows().collect()).collect(),
        biases: elem.biases(),
    };
    // Serializing plain numbers and strings cannot fail.
    serde_json::to_vec(&doc).expect("wse-json serialization")
}

fn byte_offset(text: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len() + 1;
    }
    text.len()
}

fn key_offset(bytes: &[u8], key: &str) -> usize {
    let needle = format!("\"{key}\"");
    bytes
        .windows(needle.len())
        .position(|w| w == needle.as_bytes())
        .unwrap_or(0)
}

pub fn deserialize(bytes: &[u8]) -> Result<WeightSpaceElement> {
    let doc: DocIn = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: if e.is_eof() {
            bytes.len()
        } else {
            byte_offset(bytes, e.line(), e.column())
        },
        message: e.to_string(),
    })?;
    let at = |key: &str, message: String| Error::Parse {
        offset: key_offset(bytes, key),
        message,
    };
    if doc.format != FORMAT_NAME {
        return Err(at("format", format!("unknown format {:?}", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(at("version", format!("unsupported version {}", doc.version)));
    }
    let spec = NetworkSpec::new(doc.spec.dims, doc.spec.activations)
        .map_err(|e| at("spec", e.to_string()))?;
    if let Some(w) = doc.omega0 {
        if !(w.is_finite() && w > 0.0) {
            return Err(at("omega0", format!("omega0 must be positive, got {w}")));
        }
    }
    let m = spec.num_layers();
    for (key, len) in [("weights", doc.weights.len()), ("biases", doc.biases.len())] {
        if len < m {
            return Err(at(key, format!("missing layer {len} {key} ({m} layers expected)")));
        }
        if len > m {
            return Err(at(key, format!("{len} layers of {key}, spec has {m}")));
        }
    }
    let mut weights = Vec::with_capacity(m);
    for (l, rows) in doc.weights.iter().enumerate() {
        let (r, c) = spec.weight_shape(l);
        if rows.len() != r || rows.iter().any(|row| row.len() != c) {
            return Err(at("weights", format!("layer {l} weight is not {r}x{c}")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(at("weights", format!("layer {l} weight has a non-finite entry")));
        }
        weights.push(Matrix::from_rows(rows).map_err(|e| at("weights", e.to_string()))?);
    }
    for (l, b) in doc.biases.iter().enumerate() {
        if b.len() != spec.dims()[l + 1] {
            return Err(at(
                "biases",
                format!("layer {l} bias has length {}, expected {}", b.len(), spec.dims()[l + 1]),
            ));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(at("biases", format!("layer {l} bias has a non-finite entry")));
        }
    }
    Ok(WeightSpaceElement::new(spec, weights, doc.biases)?.with_omega0(doc.omega0))
}

pub fn read_wse(path: impl AsRef<Path>) -> Result<WeightSpaceElement> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    deserialize(&bytes)
}

/// Writes atomically: a temporary sibling file is renamed over `path`.
pub fn write_wse(path: impl AsRef<Path>, elem: &WeightSpaceElement) -> Result<()> {
    write_atomic(path.as_ref(), &serialize(elem))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::arg(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
