//! Model checkpoints: a binary parameter container plus a JSON sidecar.
//!
//! Binary layout (little-endian): the magic `BLNS1`, a `u32` array count,
//! then per array a `u32` rank, `rank` `u64` dimensions and the raw `f64`
//! values, in parameter declaration order. The sidecar holds the model and
//! training configs. Optimizer state is not stored.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, TrainConfig};
use super::model::{Model, ParamArray};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"BLNS1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub training: TrainConfig,
}

pub fn encode_params(params: &[ParamArray]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p.shape.len() as u32).to_le_bytes());
        for &d in &p.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &p.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Checkpoint("truncated".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_params(bytes: &[u8]) -> Result<Vec<ParamArray>> {
    let mut r = Reader { bytes };
    if r.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let count = r.u32()? as usize;
    let mut params = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rank = r.u32()? as usize;
        let shape = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint("dimension overflow".into()))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        params.push(ParamArray { shape, values });
    }
    if !r.bytes.is_empty() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(params)
}

pub fn save_checkpoint(model: &Model, tc: &TrainConfig, bin: &Path, sidecar: &Path) -> Result<()> {
    fs::write(bin, encode_params(&model.params))
        .map_err(|e| Error::io(bin.display().to_string(), e))?;
    let meta = CheckpointMeta {
        model: model.config.clone(),
        training: tc.clone(),
    };
    fs::write(sidecar, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| Error::io(sidecar.display().to_string(), e))
}

pub fn load_checkpoint(bin: &Path, sidecar: &Path) -> Result<(Model, TrainConfig)> {
    let bytes = fs::read(bin).map_err(|e| Error::io(bin.display().to_string(), e))?;
    let text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar.display().to_string(), e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;
    let model = Model::from_params(&meta.model, decode_params(&bytes)?)?;
    Ok((model, meta.training))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::model::init_model;

    #[test]
    fn header_layout() {
        let params = vec![ParamArray { shape: vec![2], values: vec![1.0, -0.5] }];
        let bytes = encode_params(&params);
        assert_eq!(&bytes[..5], b"BLNS1");
        assert_eq!(&bytes[5..9], &1u32.to_le_bytes());
        assert_eq!(&bytes[9..13], &1u32.to_le_bytes());
        assert_eq!(&bytes[13..21], &2u64.to_le_bytes());
        assert_eq!(&bytes[21..29], &1.0f64.to_le_bytes());
        assert_eq!(bytes.len(), 37);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ModelConfig::vgg_mini(8, 8, 1, 3);
        let model = init_model(&cfg, 9).unwrap();
        let tc = TrainConfig { seed: 4, ..TrainConfig::default() };
        let (bin, json) = (dir.path().join("m.blns"), dir.path().join("m.json"));
        save_checkpoint(&model, &tc, &bin, &json).unwrap();
        let (back, tc_back) = load_checkpoint(&bin, &json).unwrap();
        assert_eq!(back.params, model.params);
        assert_eq!(tc_back, tc);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(decode_params(b"BLNS2\0\0\0\0").is_err());
        let mut bytes = encode_params(&[ParamArray { shape: vec![1], values: vec![3.0] }]);
        bytes.pop();
        assert!(decode_params(&bytes).is_err());
        bytes.extend_from_slice(&[0, 0]);
        assert!(decode_params(&bytes).is_err());
    }
}
