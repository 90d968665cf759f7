//! JSON checkpoint for networks. Floats use shortest round-trip formatting,
//! so save/load is bit-exact.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, Dense, Mlp};
use crate::{Error, Result};

pub const MLP_FORMAT: &str = "mmhev-mlp";
pub const MLP_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct RawLayer {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMlp {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    layers: Vec<RawLayer>,
}

impl Serialize for Mlp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMlp {
            format: MLP_FORMAT.into(),
            version: MLP_FORMAT_VERSION,
            layer_sizes: self.layer_sizes(),
            hidden_activation: self.hidden,
            output_activation: self.output,
            layers: self
                .layers
                .iter()
                .map(|l| RawLayer {
                    weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                    biases: l.biases.to_vec(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mlp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawMlp::deserialize(d)?;
        if raw.format != MLP_FORMAT || raw.version != MLP_FORMAT_VERSION {
            return Err(D::Error::custom(format!(
                "unsupported network format {} v{}",
                raw.format, raw.version
            )));
        }
        let layers = raw
            .layers
            .into_iter()
            .map(|l| {
                let rows = l.weights.len();
                let cols = l.weights.first().map_or(0, Vec::len);
                if l.weights.iter().any(|r| r.len() != cols) {
                    return Err(D::Error::custom("ragged weight matrix"));
                }
                let flat: Vec<f64> = l.weights.into_iter().flatten().collect();
                Ok(Dense {
                    weights: Array2::from_shape_vec((rows, cols), flat)
                        .map_err(D::Error::custom)?,
                    biases: Array1::from(l.biases),
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let net = Mlp::from_layers(layers, raw.hidden_activation, raw.output_activation)
            .map_err(D::Error::custom)?;
        if net.layer_sizes() != raw.layer_sizes {
            return Err(D::Error::custom(
                "layer_sizes disagree with stored parameters",
            ));
        }
        Ok(net)
    }
}

pub fn save_mlp(net: &Mlp, path: &Path) -> Result<()> {
    let text = serde_json::to_string(net)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_mlp(path: &Path) -> Result<Mlp> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}
