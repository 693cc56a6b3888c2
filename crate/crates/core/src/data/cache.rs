//! Little-endian bank cache:
//!
//! ```text
//! "SPINBANK" | version u32 | R u32 | d u32 | graph_count u32
//! per graph: node_count u32 | label i32 | (R+1)·node_count·d f64, branch-major, rows row-major
//! ```

use std::io::{Read, Write};

use rayon::prelude::*;

use super::{DataError, Dataset};
use crate::graph::{operator_bank, FeatureBank, OperatorKind};
use crate::model::PrecomputedGraph;
use crate::nn::DenseMatrix;

const MAGIC: &[u8; 8] = b"SPINBANK";
pub const BANK_CACHE_VERSION: u32 = 1;

/// Banks `B^(0..=r)` for every graph, computed in parallel.
pub fn precompute_dataset(ds: &Dataset, kind: OperatorKind, r: usize) -> Result<Vec<PrecomputedGraph>, DataError> {
    if ds.feature_scheme.is_none() || ds.feature_dim() == 0 {
        return Err(DataError::FeaturesMissing);
    }
    Ok(ds
        .graphs
        .par_iter()
        .map(|g| PrecomputedGraph {
            bank: operator_bank(g, kind, r),
            label: g.label.expect("dataset graphs are labeled"),
        })
        .collect())
}

fn u32_of(x: usize, what: &str) -> Result<u32, DataError> {
    u32::try_from(x).map_err(|_| DataError::CorruptCache(format!("{what} {x} exceeds u32")))
}

pub fn write_bank_cache<W: Write>(mut w: W, graphs: &[PrecomputedGraph]) -> Result<(), DataError> {
    let (r, d) = graphs
        .first()
        .map_or((0, 0), |g| (g.bank.max_power(), g.bank.feature_dim()));
    w.write_all(MAGIC)?;
    for x in [
        BANK_CACHE_VERSION,
        u32_of(r, "R")?,
        u32_of(d, "d")?,
        u32_of(graphs.len(), "graph count")?,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    for g in graphs {
        if g.bank.max_power() != r || g.bank.feature_dim() != d {
            return Err(DataError::CorruptCache("banks differ in shape".into()));
        }
        let label = i32::try_from(g.label).map_err(|_| DataError::CorruptCache("label exceeds i32".into()))?;
        w.write_all(&u32_of(g.bank.node_count(), "node count")?.to_le_bytes())?;
        w.write_all(&label.to_le_bytes())?;
        let mut buf = Vec::with_capacity(g.bank.len() * g.bank.node_count() * d * 8);
        for m in g.bank.matrices() {
            for x in m.as_slice() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DataError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_bank_cache<R: Read>(mut r: R) -> Result<Vec<PrecomputedGraph>, DataError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DataError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != BANK_CACHE_VERSION {
        return Err(DataError::VersionMismatch {
            found: version,
            expected: BANK_CACHE_VERSION,
        });
    }
    let power = read_u32(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let n = read_u32(&mut r)? as usize;
        let mut lb = [0u8; 4];
        r.read_exact(&mut lb)?;
        let label = usize::try_from(i32::from_le_bytes(lb))
            .map_err(|_| DataError::CorruptCache("unlabeled graph in cache".into()))?;
        let mut matrices = Vec::with_capacity(power + 1);
        for _ in 0..=power {
            let mut bytes = vec![0u8; n * d * 8];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            matrices.push(DenseMatrix::from_vec(n, d, data));
        }
        out.push(PrecomputedGraph {
            bank: FeatureBank::from_matrices(matrices),
            label,
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(DataError::CorruptCache("trailing bytes after the last graph".into()));
    }
    Ok(out)
}
