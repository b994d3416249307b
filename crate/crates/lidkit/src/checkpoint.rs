//! Binary model checkpoint.
//!
//! Layout (all integers little-endian), documented field-by-field in
//! `docs/checkpoint.md`:
//!
//! ```text
//! magic "LIDK" | version u32 | header_len u32 | header JSON | tensors f32 LE | fnv1a64 u64
//! ```
//!
//! The header carries hyperparameters, a training-config echo, the ordered
//! vocabulary characters, and the language list. Tensors follow row-major in
//! the fixed order: embed, w_cnn, b_cnn, w_hd, b_hd, ctx, w_out, b_out. The
//! trailing checksum covers every preceding byte.

use crate::error::{Error, Result};
use crate::model::{Head, Hyperparams, ModelParams};
use crate::training::TrainConfig;
use crate::vocab::CharVocab;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"LIDK";
pub const VERSION: u32 = 1;

/// A trained model bundle: parameters plus everything needed to run them.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub hp: Hyperparams,
    pub cfg: TrainConfig,
    pub vocab: CharVocab,
    pub languages: Vec<String>,
    pub params: ModelParams<f32>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    embed_dim: usize,
    conv_dim: usize,
    region: usize,
    hidden_dim: usize,
    n_languages: usize,
    head: String,
    dropout_rate: f64,
    max_len: usize,
    train_config: TrainConfig,
    vocab_min_freq: u64,
    vocab_chars: String,
    languages: Vec<String>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn push_tensor(buf: &mut Vec<u8>, data: &[f32]) {
    for &v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn take_floats(bytes: &[u8], pos: &mut usize, count: usize) -> Result<Vec<f32>> {
    let need = count * 4;
    if *pos + need > bytes.len() {
        return Err(Error::Integrity("checkpoint truncated inside tensor data".into()));
    }
    let out = bytes[*pos..*pos + need]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    *pos += need;
    Ok(out)
}

impl Checkpoint {
    /// Serialize to bytes (everything including the trailing checksum).
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            embed_dim: self.hp.embed_dim,
            conv_dim: self.hp.conv_dim,
            region: self.hp.region,
            hidden_dim: self.hp.hidden_dim,
            n_languages: self.hp.n_languages,
            head: self.hp.head.name().to_string(),
            dropout_rate: self.hp.dropout_rate,
            max_len: self.hp.max_len,
            train_config: self.cfg.clone(),
            vocab_min_freq: self.vocab.min_freq(),
            vocab_chars: self.vocab.chars().iter().collect(),
            languages: self.languages.clone(),
        };
        let header_json = serde_json::to_vec(&header).expect("header serializes");
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
        buf.extend_from_slice(&header_json);
        let p = &self.params;
        for slice in p.slices() {
            push_tensor(&mut buf, slice);
        }
        let checksum = fnv1a64(&buf);
        buf.extend_from_slice(&checksum.to_le_bytes());
        buf
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let tmp = dir.join(format!(
            ".{}.tmp-{}",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("checkpoint"),
            std::process::id()
        ));
        let write = (|| -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        })();
        if let Err(e) = write {
            let _ = std::fs::remove_file(&tmp);
            return Err(Error::io(path, e));
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 4 + 4 + 8 {
            return Err(Error::Integrity("file too short to be a checkpoint".into()));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Integrity("bad magic bytes (not a lidkit checkpoint)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Integrity(format!(
                "unsupported checkpoint version {version} (expected {VERSION})"
            )));
        }
        let payload_end = bytes.len() - 8;
        let stored = u64::from_le_bytes(bytes[payload_end..].try_into().unwrap());
        let actual = fnv1a64(&bytes[..payload_end]);
        if stored != actual {
            return Err(Error::Integrity(format!(
                "checksum mismatch (stored {stored:#018x}, computed {actual:#018x})"
            )));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if 12 + header_len > payload_end {
            return Err(Error::Integrity("header length exceeds file size".into()));
        }
        let header: Header = serde_json::from_slice(&bytes[12..12 + header_len])
            .map_err(|e| Error::Integrity(format!("header JSON invalid: {e}")))?;
        let hp = Hyperparams {
            embed_dim: header.embed_dim,
            conv_dim: header.conv_dim,
            region: header.region,
            hidden_dim: header.hidden_dim,
            n_languages: header.n_languages,
            head: Head::parse(&header.head)
                .map_err(|_| Error::Integrity(format!("unknown head '{}'", header.head)))?,
            dropout_rate: header.dropout_rate,
            max_len: header.max_len,
        };
        hp.validate().map_err(|e| Error::Integrity(format!("invalid hyperparameters: {e}")))?;
        let vocab =
            CharVocab::from_chars(header.vocab_chars.chars().collect(), header.vocab_min_freq);
        if header.languages.len() != hp.n_languages {
            return Err(Error::Integrity("language list does not match n_languages".into()));
        }

        let vs = vocab.index_space();
        let (d, dc, md, dh, l) =
            (hp.embed_dim, hp.conv_dim, hp.region * hp.embed_dim, hp.hidden_dim, hp.n_languages);
        let mut pos = 12 + header_len;
        let tensor2 = |rows: usize, cols: usize, pos: &mut usize| -> Result<Array2<f32>> {
            let data = take_floats(bytes, pos, rows * cols)?;
            Ok(Array2::from_shape_vec((rows, cols), data).expect("shape matches"))
        };
        let embed = tensor2(vs, d, &mut pos)?;
        let w_cnn = tensor2(dc, md, &mut pos)?;
        let b_cnn = Array1::from(take_floats(bytes, &mut pos, dc)?);
        let w_hd = tensor2(dh, dc, &mut pos)?;
        let b_hd = Array1::from(take_floats(bytes, &mut pos, dh)?);
        let ctx = Array1::from(take_floats(bytes, &mut pos, dh)?);
        let w_out = tensor2(l, dc, &mut pos)?;
        let b_out = Array1::from(take_floats(bytes, &mut pos, l)?);
        if pos != payload_end {
            return Err(Error::Integrity(format!(
                "{} trailing bytes after tensors",
                payload_end - pos
            )));
        }
        Ok(Checkpoint {
            hp,
            cfg: header.train_config,
            vocab,
            languages: header.languages,
            params: ModelParams { embed, w_cnn, b_cnn, w_hd, b_hd, ctx, w_out, b_out },
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
