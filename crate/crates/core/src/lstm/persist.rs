//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "MFLSTM\0\0"
//! version    u32
//! n_models   u32
//! input_dim  u32
//! hidden_dim u32
//! flags      u32      bit 0: biases present, bit 1: sigmoid candidate
//! per model: seed u64, n_params u64, n_params × f64 (flat layout of LstmModel)
//! sha256     32 bytes over everything above
//! ```

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::model::{Activation, Gate, LstmModel};
use super::train::{Ensemble, RunSummary};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MFLSTM\0\0";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_BIAS: u32 = 1;
const FLAG_SIGMOID: u32 = 2;

pub fn encode_models(models: &[LstmModel], seeds: &[u64]) -> Result<Vec<u8>> {
    let first = models
        .first()
        .ok_or_else(|| Error::ModelFormat("nothing to save".into()))?;
    if seeds.len() != models.len() {
        return Err(Error::LengthMismatch {
            left: models.len(),
            right: seeds.len(),
        });
    }
    if models.iter().any(|m| {
        m.input_dim() != first.input_dim()
            || m.hidden_dim() != first.hidden_dim()
            || m.use_bias() != first.use_bias()
            || m.candidate() != first.candidate()
    }) {
        return Err(Error::ModelFormat("ensemble members differ in shape".into()));
    }
    let mut flags = 0;
    if first.use_bias() {
        flags |= FLAG_BIAS;
    }
    if first.candidate() == Activation::Sigmoid {
        flags |= FLAG_SIGMOID;
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    for v in [
        FORMAT_VERSION,
        models.len() as u32,
        first.input_dim() as u32,
        first.hidden_dim() as u32,
        flags,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for (m, seed) in models.iter().zip(seeds) {
        buf.extend_from_slice(&seed.to_le_bytes());
        buf.extend_from_slice(&(m.params().len() as u64).to_le_bytes());
        for p in m.params() {
            buf.extend_from_slice(&p.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok(buf)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::ModelFormat(format!(
                "truncated file: needed {n} bytes at offset {}, {} available",
                self.pos,
                self.data.len() - self.pos
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_models(data: &[u8]) -> Result<(Vec<LstmModel>, Vec<u64>)> {
    let mut cur = Cursor { data, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "format version {version} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    let n_models = cur.u32()? as usize;
    let k = cur.u32()? as usize;
    let h = cur.u32()? as usize;
    let flags = cur.u32()?;
    if flags & !(FLAG_BIAS | FLAG_SIGMOID) != 0 {
        return Err(Error::ModelFormat(format!("unknown flags {flags:#x}")));
    }
    let use_bias = flags & FLAG_BIAS != 0;
    let act = if flags & FLAG_SIGMOID != 0 {
        Activation::Sigmoid
    } else {
        Activation::Tanh
    };
    let want = LstmModel::param_count(k, h, use_bias);
    let mut models = Vec::with_capacity(n_models);
    let mut seeds = Vec::with_capacity(n_models);
    for _ in 0..n_models {
        seeds.push(cur.u64()?);
        let n = cur.u64()? as usize;
        if n != want {
            return Err(Error::ModelFormat(format!(
                "parameter count {n} does not match dims (expected {want})"
            )));
        }
        let bytes = cur.take(8 * n)?;
        let params = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        models.push(LstmModel::from_params(k, h, act, use_bias, params)?);
    }
    let body = cur.pos;
    let stored = cur.take(32)?;
    if cur.pos != data.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes after checksum",
            data.len() - cur.pos
        )));
    }
    if Sha256::digest(&data[..body]).as_slice() != stored {
        return Err(Error::ModelFormat("checksum mismatch (corrupt file)".into()));
    }
    Ok((models, seeds))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn save_model(m: &LstmModel, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_models(std::slice::from_ref(m), &[0])?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LstmModel> {
    let (mut models, _) = decode_models(&read_bytes(path.as_ref())?)?;
    if models.len() != 1 {
        return Err(Error::ModelFormat(format!(
            "expected a single model, file holds {}",
            models.len()
        )));
    }
    Ok(models.pop().unwrap())
}

pub fn save_ensemble(e: &Ensemble, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_models(&e.members, &e.seeds)?)
}

/// Run summaries are not persisted; loaded members get placeholder ones.
pub fn load_ensemble(path: impl AsRef<Path>) -> Result<Ensemble> {
    let (members, seeds) = decode_models(&read_bytes(path.as_ref())?)?;
    let runs = seeds
        .iter()
        .map(|&seed| RunSummary {
            seed,
            epochs_run: 0,
            best_epoch: 0,
            best_val_loss: f64::NAN,
            diverged_at: None,
        })
        .collect();
    Ok(Ensemble {
        members,
        seeds,
        runs,
    })
}

/// Human-readable dump of every weight block. Values use shortest
/// round-trip formatting, so the dump is lossless.
pub fn dump_text(m: &LstmModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format_version {FORMAT_VERSION}");
    let _ = writeln!(s, "input_dim {}", m.input_dim());
    let _ = writeln!(s, "hidden_dim {}", m.hidden_dim());
    let _ = writeln!(s, "candidate {:?}", m.candidate());
    let _ = writeln!(s, "bias {}", m.use_bias());
    let row = |s: &mut String, vals: &[f64]| {
        let line: Vec<String> = vals.iter().map(f64::to_string).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    };
    let tag = ["f", "i", "o", "c"];
    for g in Gate::ALL {
        let _ = writeln!(s, "W_{} {}x{}", tag[g.index()], m.hidden_dim(), m.input_dim());
        for r in m.w(g).chunks(m.input_dim()) {
            row(&mut s, r);
        }
    }
    for g in Gate::ALL {
        let _ = writeln!(s, "U_{} {}x{}", tag[g.index()], m.hidden_dim(), m.hidden_dim());
        for r in m.u(g).chunks(m.hidden_dim()) {
            row(&mut s, r);
        }
    }
    for g in Gate::ALL {
        if let Some(b) = m.b(g) {
            let _ = writeln!(s, "b_{} {}", tag[g.index()], m.hidden_dim());
            row(&mut s, b);
        }
    }
    let _ = writeln!(s, "w_out {}", m.hidden_dim());
    row(&mut s, m.w_out());
    s
}
