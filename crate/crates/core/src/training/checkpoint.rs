//! Binary checkpoints.
//!
//! ```text
//! LEM:  "LEM1\0"  d m o (u64 LE)  Δt (f64 LE)  W1 W2 Wz Wy V1 V2 Vz Vy b1 b2 bz by Wout
//! LSTM: "LSTM1\0" d m o (u64 LE)               W Wf Wi Wo V Vf Vi Vo b bf bi bo Wout
//! optional trailer:
//!       "OPT1\0" epoch step (u64) kind (u8) β1 β2 ε (f64) len (u64) m[len] v[len]
//! ```
//!
//! Every tensor is row-major little-endian `f64`.

use std::path::Path;

use super::model::Model;
use super::optimizer::{Optimizer, OptimizerKind};
use crate::baselines::LstmParams;
use crate::error::{Error, Result};
use crate::lem::LemParams;
use crate::numerics::TensorSet;

pub const LEM_MAGIC: &[u8] = b"LEM1\0";
pub const LSTM_MAGIC: &[u8] = b"LSTM1\0";
const OPT_MAGIC: &[u8] = b"OPT1\0";

/// Optimizer state and the number of completed epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerTrailer {
    pub epoch: u64,
    pub optimizer: Optimizer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub trailer: Option<TrainerTrailer>,
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    let (d, m, o) = ckpt.model.dims();
    match &ckpt.model {
        Model::Lem(p) => {
            out.extend_from_slice(LEM_MAGIC);
            for v in [d, m, o] {
                put_u64(&mut out, v as u64);
            }
            put_f64s(&mut out, &[p.delta_t]);
        }
        Model::Lstm(_) => {
            out.extend_from_slice(LSTM_MAGIC);
            for v in [d, m, o] {
                put_u64(&mut out, v as u64);
            }
        }
    }
    for t in ckpt.model.tensor_slices() {
        put_f64s(&mut out, t);
    }
    if let Some(tr) = &ckpt.trailer {
        let opt = &tr.optimizer;
        out.extend_from_slice(OPT_MAGIC);
        put_u64(&mut out, tr.epoch);
        put_u64(&mut out, opt.step);
        out.push(match opt.kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Adam => 1,
        });
        put_f64s(&mut out, &[opt.beta1, opt.beta2, opt.epsilon]);
        put_u64(&mut out, opt.m.len() as u64);
        put_f64s(&mut out, &opt.m);
        put_f64s(&mut out, &opt.v);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn fill(&mut self, dst: &mut [f64]) -> Result<()> {
        for v in dst {
            *v = self.f64()?;
        }
        Ok(())
    }

    fn dim(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&v| v > 0 && v < 1 << 24)
            .ok_or_else(|| Error::Format(format!("implausible dimension {v} in checkpoint")))
    }
}

fn describe(bytes: &[u8]) -> String {
    let head: Vec<u8> = bytes.iter().take(6).copied().collect();
    String::from_utf8_lossy(&head).trim_end_matches('\0').to_string()
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    let mut model = if bytes.starts_with(LEM_MAGIC) {
        r.take(LEM_MAGIC.len())?;
        let (d, m, o) = (r.dim()?, r.dim()?, r.dim()?);
        let dt = r.f64()?;
        Model::Lem(LemParams::zeros(d, m, o, dt)?)
    } else if bytes.starts_with(LSTM_MAGIC) {
        r.take(LSTM_MAGIC.len())?;
        let (d, m, o) = (r.dim()?, r.dim()?, r.dim()?);
        Model::Lstm(LstmParams::zeros(d, m, o)?)
    } else {
        return Err(Error::Header {
            expected: "LEM1 or LSTM1".into(),
            found: describe(bytes),
        });
    };
    for t in model.tensor_slices_mut() {
        r.fill(t)?;
    }
    let trailer = if r.pos == bytes.len() {
        None
    } else {
        let magic = r.take(OPT_MAGIC.len())?;
        if magic != OPT_MAGIC {
            return Err(Error::Header {
                expected: "OPT1".into(),
                found: describe(magic),
            });
        }
        let epoch = r.u64()?;
        let step = r.u64()?;
        let kind = match r.take(1)?[0] {
            0 => OptimizerKind::Sgd,
            1 => OptimizerKind::Adam,
            k => return Err(Error::Format(format!("unknown optimizer kind {k}"))),
        };
        let (beta1, beta2, epsilon) = (r.f64()?, r.f64()?, r.f64()?);
        let len = r.u64()? as usize;
        if len > bytes.len() / 8 {
            return Err(Error::Format("optimizer state length exceeds file size".into()));
        }
        let mut opt = Optimizer {
            kind,
            beta1,
            beta2,
            epsilon,
            step,
            m: vec![0.0; len],
            v: vec![0.0; len],
        };
        r.fill(&mut opt.m)?;
        r.fill(&mut opt.v)?;
        Some(TrainerTrailer { epoch, optimizer: opt })
    };
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint",
            bytes.len() - r.pos
        )));
    }
    Ok(Checkpoint { model, trailer })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode_checkpoint(ckpt))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}

pub fn load_lem(path: &Path) -> Result<LemParams> {
    let bytes = std::fs::read(path)?;
    if !bytes.starts_with(LEM_MAGIC) {
        return Err(Error::Header {
            expected: "LEM1".into(),
            found: describe(&bytes),
        });
    }
    match decode_checkpoint(&bytes)?.model {
        Model::Lem(p) => Ok(p),
        Model::Lstm(_) => unreachable!("magic checked above"),
    }
}

pub fn load_lstm(path: &Path) -> Result<LstmParams> {
    let bytes = std::fs::read(path)?;
    if !bytes.starts_with(LSTM_MAGIC) {
        return Err(Error::Header {
            expected: "LSTM1".into(),
            found: describe(&bytes),
        });
    }
    match decode_checkpoint(&bytes)?.model {
        Model::Lstm(p) => Ok(p),
        Model::Lem(_) => unreachable!("magic checked above"),
    }
}
