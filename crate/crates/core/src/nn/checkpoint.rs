//! Binary parameter checkpoints.
//!
//! Layout (little-endian): magic `SPINCKPT`, version `u32`, config echo as
//! `u32` byte length plus UTF-8 text, tensor count `u32`, then for each tensor
//! its length `u64` followed by the raw `f64` values in declaration order.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SPINCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint config is not valid UTF-8")]
    BadConfig,
    #[error("checkpoint layout does not match the model: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: String,
    pub tensors: Vec<Vec<f64>>,
}

pub fn write_checkpoint<W: Write>(mut w: W, config: &str, tensors: &[&[f64]]) -> Result<(), CheckpointError> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(config.len() as u32).to_le_bytes())?;
    w.write_all(config.as_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        w.write_all(&(t.len() as u64).to_le_bytes())?;
        for x in t.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint, CheckpointError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let len = read_u32(&mut r)? as usize;
    let mut text = vec![0u8; len];
    r.read_exact(&mut text)?;
    let config = String::from_utf8(text).map_err(|_| CheckpointError::BadConfig)?;
    let count = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let n = read_u64(&mut r)? as usize;
        let mut t = Vec::with_capacity(n);
        let mut b = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut b)?;
            t.push(f64::from_le_bytes(b));
        }
        tensors.push(t);
    }
    Ok(Checkpoint { config, tensors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_bad_magic() {
        let a = [1.0, -2.5, f64::MIN_POSITIVE];
        let b = [0.125];
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, "r = 2\n", &[&a, &b]).unwrap();
        let ck = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(ck.config, "r = 2\n");
        assert_eq!(ck.tensors, vec![a.to_vec(), b.to_vec()]);

        buf[0] = b'X';
        assert!(matches!(
            read_checkpoint(buf.as_slice()),
            Err(CheckpointError::BadMagic)
        ));
    }
}
