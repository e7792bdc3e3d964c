//! Little-endian binary model format.
//!
//! ```text
//! "BFN1"                       magic + format version
//! u32 block count
//! per block:
//!   u32 in_channels, u32 out_channels
//!   u8  activation (0 = ReLU, 1 = sigmoid)
//!   u8  has_batch_norm
//!   f64 × out·in·9 conv weights, f64 × out conv biases
//!   if batch norm:
//!     f64 momentum, f64 epsilon, u8 has_running_stats
//!     f64 × out gamma, beta, running_mean, running_var
//! ```

use std::fs;
use std::path::Path;

use super::layers::{BatchNormLayer, ConvLayer};
use super::model::{Activation, Block, EnhanceModel};
use super::CnnError;

pub const MAGIC: &[u8; 4] = b"BFN1";

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_model(model: &EnhanceModel) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&(model.blocks().len() as u32).to_le_bytes());
    for b in model.blocks() {
        out.extend_from_slice(&(b.conv.in_channels as u32).to_le_bytes());
        out.extend_from_slice(&(b.conv.out_channels as u32).to_le_bytes());
        out.push(match b.activation {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
        });
        out.push(u8::from(b.bn.is_some()));
        put_f64s(&mut out, &b.conv.weights);
        put_f64s(&mut out, &b.conv.bias);
        if let Some(bn) = &b.bn {
            put_f64s(&mut out, &[bn.momentum, bn.epsilon]);
            out.push(u8::from(bn.has_running_stats));
            put_f64s(&mut out, &bn.gamma);
            put_f64s(&mut out, &bn.beta);
            put_f64s(&mut out, &bn.running_mean);
            put_f64s(&mut out, &bn.running_var);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CnnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CnnError::Format(format!("truncated model file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CnnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, CnnError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CnnError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| CnnError::Format("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<EnhanceModel, CnnError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CnnError::Format("bad magic, expected BFN1".into()));
    }
    let count = r.u32()?;
    let mut blocks = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let in_channels = r.u32()?;
        let out_channels = r.u32()?;
        let activation = match r.u8()? {
            0 => Activation::Relu,
            1 => Activation::Sigmoid,
            other => return Err(CnnError::Format(format!("unknown activation code {other}"))),
        };
        let has_bn = r.u8()? != 0;
        let weights = r.f64s(out_channels * in_channels * 9)?;
        let bias = r.f64s(out_channels)?;
        let bn = if has_bn {
            let hp = r.f64s(2)?;
            let has_running_stats = r.u8()? != 0;
            Some(BatchNormLayer {
                momentum: hp[0],
                epsilon: hp[1],
                has_running_stats,
                gamma: r.f64s(out_channels)?,
                beta: r.f64s(out_channels)?,
                running_mean: r.f64s(out_channels)?,
                running_var: r.f64s(out_channels)?,
            })
        } else {
            None
        };
        blocks.push(Block { conv: ConvLayer { in_channels, out_channels, weights, bias }, bn, activation });
    }
    if r.pos != bytes.len() {
        return Err(CnnError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    EnhanceModel::from_blocks(blocks)
}

pub fn save_model(model: &EnhanceModel, path: &Path) -> Result<(), CnnError> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<EnhanceModel, CnnError> {
    decode_model(&fs::read(path)?)
}
