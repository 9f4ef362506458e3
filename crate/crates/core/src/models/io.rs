use std::io::{Read, Write};

use super::{Classifier, ClassifierKind};
use crate::error::{contract, Result};
use crate::mathcore::Matrix;

pub const MODEL_MAGIC: &[u8; 4] = b"CCCM";
pub const MODEL_VERSION: u32 = 1;

/// Writes `clf` as: magic, version, kind tag, (input, hidden, class) dims
/// as little-endian u32, then every parameter as little-endian f64 in
/// declaration order. Momentum buffers are not stored.
pub fn write_classifier<W: Write>(clf: &Classifier, mut out: W) -> std::io::Result<()> {
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    out.write_all(&clf.kind().tag().to_le_bytes())?;
    for d in [clf.input_dim(), clf.hidden_dim(), clf.class_count()] {
        out.write_all(&(d as u32).to_le_bytes())?;
    }
    for p in clf.params() {
        for v in p.as_slice() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|e| crate::Error::Contract(format!("truncated model header: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_classifier<R: Read>(mut input: R) -> Result<Classifier> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|e| crate::Error::Contract(format!("truncated model header: {e}")))?;
    if &magic != MODEL_MAGIC {
        return contract("not a classifier file (bad magic)");
    }
    let version = read_u32(&mut input)?;
    if version != MODEL_VERSION {
        return contract(format!("unsupported model format version {version}"));
    }
    let tag = read_u32(&mut input)?;
    let Some(kind) = ClassifierKind::from_tag(tag) else {
        return contract(format!("unknown classifier kind tag {tag}"));
    };
    let input_dim = read_u32(&mut input)? as usize;
    let hidden_dim = read_u32(&mut input)? as usize;
    let class_count = read_u32(&mut input)? as usize;
    let mut params = Vec::new();
    for (rows, cols) in Classifier::shapes(kind, input_dim, hidden_dim, class_count) {
        let mut data = vec![0.0; rows * cols];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            input
                .read_exact(&mut buf)
                .map_err(|e| crate::Error::Contract(format!("truncated model parameters: {e}")))?;
            *v = f64::from_le_bytes(buf);
        }
        params.push(Matrix::from_vec(rows, cols, data)?);
    }
    let mut rest = Vec::new();
    input
        .read_to_end(&mut rest)
        .map_err(|e| crate::Error::Contract(e.to_string()))?;
    if !rest.is_empty() {
        return contract(format!("{} trailing bytes after model parameters", rest.len()));
    }
    Classifier::from_params(kind, input_dim, hidden_dim, class_count, params)
}
