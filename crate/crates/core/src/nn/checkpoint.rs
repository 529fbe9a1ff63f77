//! Checkpoint container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DSCK"
//! 4       4     format version, u32 LE (currently 1)
//! 8       4     descriptor length L in bytes, u32 LE
//! 12      L     descriptor, UTF-8 JSON (kind, networks with architectures, metadata)
//! 12+L    8·P   parameters as f64 LE: for each network in descriptor order, for each
//!               layer, the weights row-major (in × out) followed by the bias
//! ```
//!
//! No bytes may follow the parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nn::{Architecture, DenseLayer, Mode, NetworkParams};
use crate::numcore::Matrix;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DSCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NetworkEntry {
    name: String,
    architecture: Architecture,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Descriptor {
    kind: String,
    networks: Vec<NetworkEntry>,
    #[serde(default)]
    metadata: serde_json::Value,
}

/// A decoded checkpoint: named networks plus free-form metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub networks: Vec<(String, NetworkParams)>,
    pub metadata: serde_json::Value,
}

impl Checkpoint {
    pub fn single(kind: &str, net: &NetworkParams) -> Self {
        Checkpoint {
            kind: kind.to_string(),
            networks: vec![("net".to_string(), net.clone())],
            metadata: serde_json::Value::Null,
        }
    }

    pub fn network(&self, name: &str) -> Result<&NetworkParams> {
        self.networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, net)| net)
            .ok_or_else(|| Error::Format(format!("checkpoint has no network named '{name}'")))
    }

    pub fn encode(&self) -> Vec<u8> {
        let descriptor = Descriptor {
            kind: self.kind.clone(),
            networks: self
                .networks
                .iter()
                .map(|(name, net)| NetworkEntry {
                    name: name.clone(),
                    architecture: net.architecture(),
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_vec(&descriptor).expect("descriptor serializes");
        let n_params: usize = self.networks.iter().map(|(_, n)| n.param_count()).sum();
        let mut out = Vec::with_capacity(12 + json.len() + 8 * n_params);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, net) in &self.networks {
            for v in net.params_flat() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let short = || Error::Format("checkpoint is truncated".into());
        if bytes.len() < 12 {
            return Err(short());
        }
        if &bytes[0..4] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        let len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let json = bytes.get(12..12 + len).ok_or_else(short)?;
        let descriptor: Descriptor = serde_json::from_slice(json)
            .map_err(|e| Error::Format(format!("checkpoint descriptor: {e}")))?;
        let mut at = 12 + len;
        let mut networks = Vec::with_capacity(descriptor.networks.len());
        for entry in descriptor.networks {
            let arch = entry.architecture;
            arch.validate()
                .map_err(|e| Error::Format(format!("network '{}': {e}", entry.name)))?;
            let mut layers = Vec::with_capacity(arch.layers.len());
            let mut fan_in = arch.input_dim;
            for shape in &arch.layers {
                let nw = fan_in * shape.units;
                let w = read_f64s(bytes, &mut at, nw).ok_or_else(short)?;
                let b = read_f64s(bytes, &mut at, shape.units).ok_or_else(short)?;
                layers.push(DenseLayer {
                    weights: Matrix::from_vec(fan_in, shape.units, w)?,
                    bias: b,
                    activation: shape.activation,
                });
                fan_in = shape.units;
            }
            let mut net = NetworkParams::from_layers(layers, arch.dropout)?;
            net.set_mode(Mode::Infer);
            networks.push((entry.name, net));
        }
        if at != bytes.len() {
            return Err(Error::Format(format!(
                "{} unexpected trailing bytes in checkpoint",
                bytes.len() - at
            )));
        }
        Ok(Checkpoint {
            kind: descriptor.kind,
            networks,
            metadata: descriptor.metadata,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn read_f64s(bytes: &[u8], at: &mut usize, n: usize) -> Option<Vec<f64>> {
    let end = at.checked_add(n.checked_mul(8)?)?;
    let chunk = bytes.get(*at..end)?;
    *at = end;
    Some(
        chunk
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    )
}

/// Saves a single network.
pub fn save_checkpoint(net: &NetworkParams, path: impl AsRef<Path>) -> Result<()> {
    Checkpoint::single("network", net).write(path)
}

/// Loads the first network of a checkpoint, in infer mode.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let ck = Checkpoint::read(path)?;
    ck.networks
        .into_iter()
        .next()
        .map(|(_, n)| n)
        .ok_or_else(|| Error::Format("checkpoint contains no networks".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::numcore::RngState;

    fn net() -> NetworkParams {
        let arch = Architecture::new(6)
            .layer(5, Activation::Relu, 0.0)
            .layer(4, Activation::Sigmoid, 0.2)
            .layer(2, Activation::Softmax, 0.1);
        NetworkParams::init(&arch, &mut RngState::new(21)).unwrap()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ck");
        let q = dir.path().join("b.ck");
        let original = net();
        save_checkpoint(&original, &p).unwrap();
        let loaded = load_checkpoint(&p).unwrap();
        save_checkpoint(&loaded, &q).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
        assert_eq!(loaded.params_flat(), original.params_flat());
        assert_eq!(loaded.architecture(), original.architecture());
        assert_eq!(loaded.mode(), Mode::Infer);
    }

    #[test]
    fn loaded_network_predicts_bitwise_identically() {
        let original = net();
        let loaded = Checkpoint::decode(&Checkpoint::single("network", &original).encode())
            .unwrap()
            .networks
            .remove(0)
            .1;
        let mut rng = RngState::new(4);
        let x = Matrix::from_vec(7, 6, (0..42).map(|_| rng.next_normal()).collect()).unwrap();
        assert_eq!(original.predict(&x).unwrap(), loaded.predict(&x).unwrap());
    }

    #[test]
    fn truncation_and_corruption_are_format_errors() {
        let bytes = Checkpoint::single("network", &net()).encode();
        for cut in [0, 3, 11, 20, bytes.len() - 1] {
            assert!(matches!(Checkpoint::decode(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(Checkpoint::decode(&bad_magic), Err(Error::Format(_))));
        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(matches!(Checkpoint::decode(&bad_version), Err(Error::Format(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(Checkpoint::decode(&extra), Err(Error::Format(_))));
    }

    #[test]
    fn multi_network_sections_and_metadata() {
        let a = net();
        let b = NetworkParams::init(
            &Architecture::new(3).layer(2, Activation::Softmax, 0.0),
            &mut RngState::new(1),
        )
        .unwrap();
        let ck = Checkpoint {
            kind: "faraday".into(),
            networks: vec![("first".into(), a.clone()), ("second".into(), b.clone())],
            metadata: serde_json::json!({"note": "x", "n": 3}),
        };
        let back = Checkpoint::decode(&ck.encode()).unwrap();
        assert_eq!(back.kind, "faraday");
        assert_eq!(back.metadata, ck.metadata);
        assert_eq!(back.network("second").unwrap().params_flat(), b.params_flat());
        assert!(back.network("third").is_err());
    }
}
