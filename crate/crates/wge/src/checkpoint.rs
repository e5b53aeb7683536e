//! Versioned binary checkpoints.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "WGECKPT\0" | version u32 | vocab hash [32]
//! config: len u64, UTF-8 bytes
//! selection: flag u8, then split u8, epoch u64, mrr/hits1/hits3/hits10 f64, queries u64
//! tensors: count u64, then per tensor name (len u64, bytes), rows u64, cols u64, rows*cols f64
//! SHA-256 of everything above [32]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use wge_core::dataset::Split;
use wge_core::eval::Metrics;
use wge_core::tensor::Tensor;
use wge_core::train::Model;

const MAGIC: &[u8; 8] = b"WGECKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint {}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("checkpoint {} failed its integrity check: {reason}", path.display())]
    Integrity { path: PathBuf, reason: String },
    #[error("checkpoint {} has version {found}, expected {VERSION}", path.display())]
    Version { path: PathBuf, found: u32 },
    #[error("checkpoint vocabulary {found} does not match dataset vocabulary {expected}")]
    VocabMismatch { expected: String, found: String },
}

/// Selection-split metrics of the stored parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub split: Split,
    pub epoch: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab_hash: [u8; 32],
    /// Resolved run configuration text.
    pub config: String,
    pub selection: Option<Selection>,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, vocab_hash: [u8; 32], config: String, selection: Option<Selection>) -> Self {
        let tensors = model.params.iter().map(|(_, name, p)| (name.to_string(), p.value.clone())).collect();
        Self { vocab_hash, config, selection, tensors }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&self.vocab_hash);
        put_bytes(&mut b, self.config.as_bytes());
        match &self.selection {
            None => b.push(0),
            Some(s) => {
                b.push(1);
                b.push(s.split as u8);
                b.extend_from_slice(&s.epoch.to_le_bytes());
                for v in [s.metrics.mrr, s.metrics.hits1, s.metrics.hits3, s.metrics.hits10] {
                    b.extend_from_slice(&v.to_le_bytes());
                }
                b.extend_from_slice(&(s.metrics.queries as u64).to_le_bytes());
            }
        }
        b.extend_from_slice(&(self.tensors.len() as u64).to_le_bytes());
        for (name, t) in &self.tensors {
            put_bytes(&mut b, name.as_bytes());
            b.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            b.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for v in t.data() {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest: [u8; 32] = Sha256::digest(&b).into();
        b.extend_from_slice(&digest);
        b
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, CheckpointError> {
        let integrity = |reason: &str| CheckpointError::Integrity { path: path.to_path_buf(), reason: reason.into() };
        if bytes.len() < MAGIC.len() + 4 + 32 + 32 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(integrity("not a checkpoint file"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(integrity("checksum mismatch"));
        }
        let mut r = Reader { buf: body, at: MAGIC.len() };
        let version = r.u32().ok_or_else(|| integrity("truncated header"))?;
        if version != VERSION {
            return Err(CheckpointError::Version { path: path.to_path_buf(), found: version });
        }
        let parsed = (|| {
            let vocab_hash: [u8; 32] = r.take(32)?.try_into().ok()?;
            let config = String::from_utf8(r.bytes()?.to_vec()).ok()?;
            let selection = match r.take(1)?[0] {
                0 => None,
                1 => {
                    let split = *Split::ALL.get(r.take(1)?[0] as usize)?;
                    let epoch = r.u64()?;
                    let (mrr, hits1, hits3, hits10) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
                    let queries = r.u64()? as usize;
                    Some(Selection { split, epoch, metrics: Metrics { mrr, hits1, hits3, hits10, queries } })
                }
                _ => return None,
            };
            let count = r.u64()?;
            let mut tensors = Vec::new();
            for _ in 0..count {
                let name = String::from_utf8(r.bytes()?.to_vec()).ok()?;
                let (rows, cols) = (r.u64()? as usize, r.u64()? as usize);
                let n = rows.checked_mul(cols)?;
                let data =
                    r.take(n.checked_mul(8)?)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
                tensors.push((name, Tensor::from_vec(rows, cols, data.collect()).ok()?));
            }
            (r.at == body.len()).then_some(Self { vocab_hash, config, selection, tensors })
        })();
        parsed.ok_or_else(|| integrity("malformed contents"))
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_bytes()).map_err(|cause| CheckpointError::Io { path: path.to_path_buf(), cause })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path).map_err(|cause| CheckpointError::Io { path: path.to_path_buf(), cause })?;
        Self::from_bytes(&bytes, path)
    }

    pub fn check_vocab(&self, expected: [u8; 32]) -> Result<(), CheckpointError> {
        if self.vocab_hash != expected {
            return Err(CheckpointError::VocabMismatch {
                expected: crate::data::hex(&expected),
                found: crate::data::hex(&self.vocab_hash),
            });
        }
        Ok(())
    }
}

fn put_bytes(b: &mut Vec<u8>, bytes: &[u8]) {
    b.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    b.extend_from_slice(bytes);
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.at.checked_add(n)?;
        let s = self.buf.get(self.at..end)?;
        self.at = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn bytes(&mut self) -> Option<&'a [u8]> {
        let n = usize::try_from(self.u64()?).ok()?;
        self.take(n)
    }
}
