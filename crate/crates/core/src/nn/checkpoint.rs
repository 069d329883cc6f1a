//! Binary parameter checkpoints.
//!
//! Layout, all little-endian: `b"FSML"`, `u32` version, `u32` activation id,
//! `u32` layer-width count, that many `u32` widths, `u64` value count, then
//! the `f64` values. Composite models list the widths of each sub-network in
//! order and store the concatenated parameter vector.

use std::io::{Read, Write};

use super::Activation;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"FSML";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub activation: Activation,
    pub layer_widths: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(mut w: W, ckpt: &Checkpoint) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&ckpt.activation.id().to_le_bytes())?;
    w.write_all(&(ckpt.layer_widths.len() as u32).to_le_bytes())?;
    for &width in &ckpt.layer_widths {
        w.write_all(&(width as u32).to_le_bytes())?;
    }
    w.write_all(&(ckpt.values.len() as u64).to_le_bytes())?;
    for v in &ckpt.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::usage("not a parameter checkpoint"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::usage(format!("unsupported checkpoint version {version}")));
    }
    let act_id = read_u32(&mut r)?;
    let activation =
        Activation::from_id(act_id).ok_or_else(|| Error::usage(format!("unknown activation id {act_id}")))?;
    let count = read_u32(&mut r)? as usize;
    let layer_widths = (0..count).map(|_| read_u32(&mut r).map(|w| w as usize)).collect::<Result<Vec<_>>>()?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(Checkpoint { activation, layer_widths, values })
}
