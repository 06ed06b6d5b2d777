//! Bit-exact binary persistence for trained models.
//!
//! Layout (all integers little-endian, all reals IEEE-754 binary64):
//! magic "SKYM", version u16, kind u8, section count u32, then per
//! section: name length u16, ASCII name, element count u64, payload of
//! element-count binary64 values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::clustering::Centroids;
use crate::error::{Error, Result};
use crate::features::StandardScaler;
use crate::neuralnet::{Activation, BatchNormParams, Layer, LayerSpec, Mode, NetworkModel};

pub const MAGIC: &[u8; 4] = b"SKYM";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelArtifact {
    Centroids(Centroids<f64>),
    Scaler(StandardScaler<f64>),
    Classifier(NetworkModel<f64>),
    Regressor(NetworkModel<f64>),
}

impl ModelArtifact {
    fn kind_byte(&self) -> u8 {
        match self {
            ModelArtifact::Centroids(_) => 1,
            ModelArtifact::Scaler(_) => 2,
            ModelArtifact::Classifier(_) => 3,
            ModelArtifact::Regressor(_) => 4,
        }
    }
}

type Sections = Vec<(String, Vec<f64>)>;

fn activation_code(a: Activation) -> f64 {
    match a {
        Activation::Relu => 0.0,
        Activation::Sigmoid => 1.0,
        Activation::Tanh => 2.0,
        Activation::Linear => 3.0,
    }
}

fn activation_from_code(c: f64) -> Result<Activation> {
    match c as i64 {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::Sigmoid),
        2 => Ok(Activation::Tanh),
        3 => Ok(Activation::Linear),
        other => Err(Error::CorruptSection(format!("unknown activation code {other}"))),
    }
}

fn network_sections(model: &NetworkModel<f64>) -> Sections {
    let mut sections: Sections = vec![
        ("input_dim".into(), vec![model.input_dim as f64]),
        ("n_layers".into(), vec![model.layers.len() as f64]),
        ("mode".into(), vec![if model.mode == Mode::Infer { 1.0 } else { 0.0 }]),
    ];
    for (i, layer) in model.layers.iter().enumerate() {
        sections.push((
            format!("layer{i}.spec"),
            vec![
                layer.spec.units as f64,
                activation_code(layer.spec.activation),
                layer.spec.dropout_rate,
                if layer.spec.batch_norm { 1.0 } else { 0.0 },
            ],
        ));
        sections.push((format!("layer{i}.weights"), layer.weights.data().to_vec()));
        sections.push((format!("layer{i}.biases"), layer.biases.clone()));
        if let Some(bn) = &layer.bn {
            sections.push((format!("layer{i}.gamma"), bn.gamma.clone()));
            sections.push((format!("layer{i}.beta"), bn.beta.clone()));
            sections.push((format!("layer{i}.running_mean"), bn.running_mean.clone()));
            sections.push((format!("layer{i}.running_var"), bn.running_var.clone()));
        }
    }
    sections
}

fn section<'a>(map: &'a BTreeMap<String, Vec<f64>>, name: &str) -> Result<&'a Vec<f64>> {
    map.get(name)
        .ok_or_else(|| Error::CorruptSection(format!("missing section '{name}'")))
}

fn scalar(map: &BTreeMap<String, Vec<f64>>, name: &str) -> Result<f64> {
    let values = section(map, name)?;
    if values.len() != 1 {
        return Err(Error::CorruptSection(format!("section '{name}' is not a scalar")));
    }
    Ok(values[0])
}

fn network_from_sections(map: &BTreeMap<String, Vec<f64>>) -> Result<NetworkModel<f64>> {
    let input_dim = scalar(map, "input_dim")? as usize;
    let n_layers = scalar(map, "n_layers")? as usize;
    let mode = if scalar(map, "mode")? == 1.0 { Mode::Infer } else { Mode::Train };
    let mut layers = Vec::with_capacity(n_layers);
    let mut fan_in = input_dim;
    for i in 0..n_layers {
        let spec_raw = section(map, &format!("layer{i}.spec"))?;
        if spec_raw.len() != 4 {
            return Err(Error::CorruptSection(format!("layer{i}.spec has wrong arity")));
        }
        let units = spec_raw[0] as usize;
        let spec = LayerSpec {
            units,
            activation: activation_from_code(spec_raw[1])?,
            dropout_rate: spec_raw[2],
            batch_norm: spec_raw[3] != 0.0,
        };
        let weights_raw = section(map, &format!("layer{i}.weights"))?;
        if weights_raw.len() != fan_in * units {
            return Err(Error::CorruptSection(format!(
                "layer{i}.weights: expected {} values, got {}",
                fan_in * units,
                weights_raw.len()
            )));
        }
        let biases = section(map, &format!("layer{i}.biases"))?.clone();
        if biases.len() != units {
            return Err(Error::CorruptSection(format!("layer{i}.biases length")));
        }
        let bn = if spec.batch_norm {
            let get = |suffix: &str| -> Result<Vec<f64>> {
                let v = section(map, &format!("layer{i}.{suffix}"))?.clone();
                if v.len() != units {
                    return Err(Error::CorruptSection(format!("layer{i}.{suffix} length")));
                }
                Ok(v)
            };
            Some(BatchNormParams {
                gamma: get("gamma")?,
                beta: get("beta")?,
                running_mean: get("running_mean")?,
                running_var: get("running_var")?,
            })
        } else {
            None
        };
        layers.push(Layer {
            spec,
            weights: crate::matrix::Matrix::from_vec(fan_in, units, weights_raw.clone()),
            biases,
            bn,
        });
        fan_in = units;
    }
    Ok(NetworkModel { input_dim, layers, mode })
}

pub fn encode_model(artifact: &ModelArtifact) -> Vec<u8> {
    let sections: Sections = match artifact {
        ModelArtifact::Centroids(c) => vec![
            ("k".into(), vec![c.k() as f64]),
            ("points".into(), c.points.iter().flatten().copied().collect()),
            ("counts".into(), c.counts.iter().map(|&n| n as f64).collect()),
        ],
        ModelArtifact::Scaler(s) => vec![
            ("means".into(), s.means.clone()),
            ("stds".into(), s.stds.clone()),
        ],
        ModelArtifact::Classifier(m) | ModelArtifact::Regressor(m) => network_sections(m),
    };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(artifact.kind_byte());
    out.extend_from_slice(&(sections.len() as u32).to_le_bytes());
    for (name, payload) in &sections {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        for v in payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::CorruptSection("unexpected end of file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelArtifact> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let kind = r.take(1)?[0];
    let n_sections = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    let mut map = BTreeMap::new();
    for _ in 0..n_sections {
        let name_len = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::CorruptSection("non-utf8 section name".into()))?;
        let count = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
        let raw = r.take(count * 8)?;
        let payload: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        map.insert(name, payload);
    }
    match kind {
        1 => {
            let k = scalar(&map, "k")? as usize;
            let flat = section(&map, "points")?;
            if flat.len() != 3 * k {
                return Err(Error::CorruptSection("points length".into()));
            }
            let points = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            let counts_raw = section(&map, "counts")?;
            if counts_raw.len() != k {
                return Err(Error::CorruptSection("counts length".into()));
            }
            let counts = counts_raw.iter().map(|&v| v as u64).collect();
            Ok(ModelArtifact::Centroids(Centroids { points, counts }))
        }
        2 => {
            let means = section(&map, "means")?.clone();
            let stds = section(&map, "stds")?.clone();
            if means.len() != stds.len() {
                return Err(Error::CorruptSection("scaler length mismatch".into()));
            }
            Ok(ModelArtifact::Scaler(StandardScaler { means, stds }))
        }
        3 => Ok(ModelArtifact::Classifier(network_from_sections(&map)?)),
        4 => Ok(ModelArtifact::Regressor(network_from_sections(&map)?)),
        other => Err(Error::CorruptSection(format!("unknown model kind {other}"))),
    }
}

pub fn store_model(artifact: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(artifact))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    decode_model(&fs::read(path)?)
}
