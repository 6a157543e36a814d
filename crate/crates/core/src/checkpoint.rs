//! Single-file model checkpoints.
//!
//! ```text
//! b"GMLPCKPT"            magic
//! u32 LE                 format version
//! u64 LE                 header length in bytes
//! header                 UTF-8 JSON: kind, dims, dropout, bias flag,
//!                        parameter names/shapes, optimizer state summary
//! f64 LE * Σ|params|     parameter values in header order
//! f64 LE * 2Σ|params|    Adam first then second moments (only if present)
//! [u8; 32]               SHA-256 of every preceding byte
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::sha256_hex;
use crate::model::{Model, ModelKind};
use crate::nn::ModelDims;
use crate::optim::{AdamConfig, AdamState};

pub const MAGIC: &[u8; 8] = b"GMLPCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub model: Model,
    pub optimizer: Option<AdamState>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    dims: ModelDims,
    dropout: f64,
    use_bias: bool,
    params: Vec<ParamEntry>,
    optimizer: Option<OptimizerEntry>,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct ParamEntry {
    name: String,
    shape: (usize, usize),
}

#[derive(Serialize, Deserialize)]
struct OptimizerEntry {
    config: AdamConfig,
    step: u64,
    moments: bool,
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let params = self.model.params();
        let optimizer = self.optimizer.as_ref().map(|o| OptimizerEntry {
            config: o.config,
            step: o.step,
            moments: !o.m.is_empty(),
        });
        if let Some(o) = &self.optimizer {
            if !o.m.is_empty() && (o.m.len() != params.len() || o.v.len() != params.len()) {
                return Err(Error::shape(
                    "Checkpoint::to_bytes",
                    "optimizer moments do not match parameters",
                ));
            }
        }
        let header = Header {
            kind: self.kind,
            dims: self.model.dims(),
            dropout: self.model.dropout_rate(),
            use_bias: self.model.uses_bias(),
            params: layout(&self.model),
            optimizer,
        };
        let json = serde_json::to_vec(&header)?;

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &params {
            put_f64s(&mut out, p.value);
        }
        if let Some(o) = self.optimizer.as_ref().filter(|o| !o.m.is_empty()) {
            for m in &o.m {
                put_f64s(&mut out, m);
            }
            for v in &o.v {
                put_f64s(&mut out, v);
            }
        }
        let digest = sha2_digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let bad = |d: &str| Error::format("checkpoint", d.to_string());
        if bytes.len() < MAGIC.len() + 4 + 8 + 32 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if sha2_digest(body) != digest {
            return Err(Error::Checksum("checkpoint".into()));
        }
        let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!(
                "version {version} (this build reads {CHECKPOINT_VERSION})"
            )));
        }
        let hlen = u64::from_le_bytes(body[12..20].try_into().unwrap()) as usize;
        let json = body
            .get(20..20 + hlen)
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(json)?;
        let mut blob = Reader {
            data: &body[20 + hlen..],
        };

        let mut model = Model::new(header.kind, header.dims, header.dropout, header.use_bias)?;
        if layout(&model) != header.params {
            return Err(bad(
                "parameter layout does not match the model kind and dims",
            ));
        }
        for p in model.params_mut().iter_mut() {
            blob.fill(p.value)?;
        }
        let sizes: Vec<usize> = model.params().iter().map(|p| p.value.len()).collect();
        let optimizer = match header.optimizer {
            None => None,
            Some(o) => {
                let mut state = AdamState::new(o.config);
                state.step = o.step;
                if o.moments {
                    state.m = sizes.iter().map(|&n| blob.take(n)).collect::<Result<_>>()?;
                    state.v = sizes.iter().map(|&n| blob.take(n)).collect::<Result<_>>()?;
                }
                Some(state)
            }
        };
        if !blob.data.is_empty() {
            return Err(bad("trailing bytes after parameter data"));
        }
        Ok(Checkpoint {
            kind: header.kind,
            model,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        if !path.exists() {
            return Err(Error::MissingComponent(path.to_path_buf()));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Hex SHA-256 of the serialized checkpoint.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(sha256_hex(&self.to_bytes()?))
    }
}

fn layout(model: &Model) -> Vec<ParamEntry> {
    model
        .params()
        .iter()
        .map(|p| ParamEntry {
            name: p.name.to_string(),
            shape: p.shape,
        })
        .collect()
}

fn sha2_digest(bytes: &[u8]) -> [u8; 32] {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).into()
}

struct Reader<'a> {
    data: &'a [u8],
}

impl Reader<'_> {
    fn fill(&mut self, dst: &mut [f64]) -> Result<()> {
        let need = dst.len() * 8;
        if self.data.len() < need {
            return Err(Error::format("checkpoint", "truncated parameter data"));
        }
        for (k, v) in dst.iter_mut().enumerate() {
            *v = f64::from_le_bytes(self.data[k * 8..k * 8 + 8].try_into().unwrap());
        }
        self.data = &self.data[need..];
        Ok(())
    }

    fn take(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut v = vec![0.0; n];
        self.fill(&mut v)?;
        Ok(v)
    }
}
