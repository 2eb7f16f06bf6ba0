//! Flat binary parameter files.
//!
//! Layout, all little-endian: magic `b"MLP1"`, `u32` layer-size count,
//! that many `u64` layer sizes, then every parameter as `f64` in the
//! network's flat order (row-major weights then biases, layer by layer).

use std::io::{Read, Write};

use super::mlp::{num_params, Mlp};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"MLP1";

pub fn write_mlp<W: Write>(mlp: &Mlp, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(mlp.dims().len() as u32).to_le_bytes())?;
    for &d in mlp.dims() {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for p in mlp.params() {
        out.write_all(&p.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_mlp<R: Read>(mut input: R) -> Result<Mlp> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    if !(2..=64).contains(&n) {
        return Err(Error::Checkpoint(format!("implausible layer count {n}")));
    }
    let mut dims = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        input.read_exact(&mut buf)?;
        let d = usize::try_from(u64::from_le_bytes(buf))
            .map_err(|_| Error::Checkpoint("layer size overflow".into()))?;
        if d == 0 || d > 1 << 24 {
            return Err(Error::Checkpoint(format!("implausible layer size {d}")));
        }
        dims.push(d);
    }
    let count = num_params(&dims);
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        input.read_exact(&mut buf)?;
        params.push(f64::from_le_bytes(buf));
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Mlp::from_params(&dims, params)
}
