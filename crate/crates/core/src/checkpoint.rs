//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `ESNNCKPT`, `u32` version, `u32` n_input,
//! `u32` n_exc, `n_input * n_exc` f64 weights (row-major by input), `n_exc`
//! f64 thresholds, `u8` label flag followed by `n_exc` label bytes (255 for
//! unlabeled) when set, `u32` length and JSON provenance, then the SHA-256
//! of everything before it.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harness::LabelMap;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ESNNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;
const UNLABELED: u8 = 255;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint digest mismatch (file corrupted)")]
    Digest,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub revision: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub n_input: usize,
    pub n_exc: usize,
    pub weights: Vec<f64>,
    pub thetas: Vec<f64>,
    pub labels: Option<LabelMap>,
    pub provenance: Provenance,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(
            32 + 8 * (self.weights.len() + self.thetas.len()) + self.n_exc + 128,
        );
        b.extend_from_slice(CHECKPOINT_MAGIC);
        b.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        b.extend_from_slice(&(self.n_input as u32).to_le_bytes());
        b.extend_from_slice(&(self.n_exc as u32).to_le_bytes());
        for x in self.weights.iter().chain(&self.thetas) {
            b.extend_from_slice(&x.to_le_bytes());
        }
        match &self.labels {
            Some(l) => {
                b.push(1);
                b.extend(l.0.iter().map(|x| x.unwrap_or(UNLABELED)));
            }
            None => b.push(0),
        }
        let prov = serde_json::to_vec(&self.provenance).expect("provenance serializes");
        b.extend_from_slice(&(prov.len() as u32).to_le_bytes());
        b.extend_from_slice(&prov);
        let digest = Sha256::digest(&b);
        b.extend_from_slice(&digest);
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 8 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes.len() < 20 + 32 {
            return Err(CheckpointError::Truncated);
        }
        let mut r = Reader { b: bytes, at: 8 };
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(CheckpointError::Digest);
        }
        r.b = body;
        let n_input = r.u32()? as usize;
        let n_exc = r.u32()? as usize;
        let weights = r.f64s(n_input * n_exc)?;
        let thetas = r.f64s(n_exc)?;
        let labels = match r.take(1)?[0] {
            0 => None,
            1 => Some(LabelMap(
                r.take(n_exc)?
                    .iter()
                    .map(|&x| match x {
                        UNLABELED => Ok(None),
                        0..=9 => Ok(Some(x)),
                        _ => Err(CheckpointError::Malformed(format!("label byte {x}"))),
                    })
                    .collect::<Result<_, _>>()?,
            )),
            f => return Err(CheckpointError::Malformed(format!("label flag {f}"))),
        };
        let plen = r.u32()? as usize;
        let provenance = serde_json::from_slice(r.take(plen)?)
            .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        if r.at != body.len() {
            return Err(CheckpointError::Malformed("trailing bytes".into()));
        }
        Ok(Self {
            n_input,
            n_exc,
            weights,
            thetas,
            labels,
            provenance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        write_atomic(path, &self.to_bytes()).map_err(|e| CheckpointError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path).map_err(|e| CheckpointError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let s = self
            .b
            .get(self.at..self.at + n)
            .ok_or(CheckpointError::Truncated)?;
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let raw = self.take(n.checked_mul(8).ok_or(CheckpointError::Truncated)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    write_atomic_with(path, |f| f.write_all(bytes))
}

/// Like [`write_atomic`], with the content produced by `fill`. Nothing is
/// left behind at `path` if `fill` fails.
pub fn write_atomic_with<F>(path: &Path, fill: F) -> std::io::Result<()>
where
    F: FnOnce(&mut std::fs::File) -> std::io::Result<()>,
{
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("path has no file name"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        fill(&mut f)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}
