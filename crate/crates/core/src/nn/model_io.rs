//! Model files: 8-byte magic, u64 LE header length, JSON header, then every
//! parameter block as f64 LE in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gnn::{GnnConfig, GnnModel};
use super::mlp::{MlpConfig, MlpModel};
use super::normalize::Normalizer;
use crate::io::{f64_from_le_bytes, f64_to_le_bytes};
use crate::{rng, Error, Result};

const MAGIC: &[u8; 8] = b"GNNSEMD1";

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gnn(GnnModel),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "lowercase")]
pub enum Architecture {
    Gnn(GnnConfig),
    Mlp(MlpConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub version: u32,
    pub model: Architecture,
    pub nodes: usize,
    pub normalization: Normalizer,
    /// Free-form provenance: seeds, training settings, dataset hashes.
    pub training: serde_json::Value,
    pub blocks: Vec<BlockInfo>,
}

impl Model {
    pub fn architecture(&self) -> Architecture {
        match self {
            Model::Gnn(m) => Architecture::Gnn(m.config.clone()),
            Model::Mlp(m) => Architecture::Mlp(m.config.clone()),
        }
    }

    pub fn normalizer(&self) -> Option<&Normalizer> {
        match self {
            Model::Gnn(m) => m.normalizer.as_ref(),
            Model::Mlp(m) => m.normalizer.as_ref(),
        }
    }

    fn named_params(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        match self {
            Model::Gnn(m) => m.named_params(),
            Model::Mlp(m) => m.named_params(),
        }
    }
}

pub fn write_model(path: &Path, model: &Model, training: serde_json::Value) -> Result<()> {
    let normalization = model.normalizer().cloned().ok_or_else(|| Error::Config("cannot save an untrained model".into()))?;
    let params = model.named_params();
    let header = ModelHeader {
        version: 1,
        model: model.architecture(),
        nodes: normalization.width() / 2,
        normalization,
        training,
        blocks: params.iter().map(|(name, shape, _)| BlockInfo { name: name.clone(), shape: shape.clone() }).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(16 + json.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for (_, _, p) in &params {
        bytes.extend_from_slice(&f64_to_le_bytes(p));
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<(Model, ModelHeader)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Format(format!("{} is not a model file", path.display())));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16 + len).ok_or_else(|| Error::Format("truncated model header".into()))?;
    let header: ModelHeader = serde_json::from_slice(body)?;
    if header.version != 1 {
        return Err(Error::Format(format!("unsupported model file version {}", header.version)));
    }
    let width = header.nodes * 2;
    if header.normalization.width() != width {
        return Err(Error::Format("normalization width does not match node count".into()));
    }
    // parameter values are overwritten below; the seed only fixes shapes
    let mut init = rng::stream(0, 0);
    let mut model = match &header.model {
        Architecture::Gnn(cfg) => Model::Gnn(GnnModel::new(cfg.clone(), &mut init)?),
        Architecture::Mlp(cfg) => Model::Mlp(MlpModel::new(cfg.clone(), width, &mut init)?),
    };
    let expected: Vec<BlockInfo> =
        model.named_params().into_iter().map(|(name, shape, _)| BlockInfo { name, shape }).collect();
    if expected != header.blocks {
        return Err(Error::Format("parameter blocks do not match the declared architecture".into()));
    }
    let total: usize = expected.iter().map(|b| b.shape.iter().product::<usize>()).sum();
    let data = &bytes[16 + len..];
    if data.len() != total * 8 {
        return Err(Error::Format(format!("expected {} parameter bytes, found {}", total * 8, data.len())));
    }
    let values = f64_from_le_bytes(data)?;
    let blocks = match &mut model {
        Model::Gnn(m) => {
            m.normalizer = Some(header.normalization.clone());
            m.params_mut()
        }
        Model::Mlp(m) => {
            m.normalizer = Some(header.normalization.clone());
            super::train::Estimator::params_mut(m)
        }
    };
    let mut offset = 0;
    for block in blocks {
        block.copy_from_slice(&values[offset..offset + block.len()]);
        offset += block.len();
    }
    Ok((model, header))
}
