use std::io::{Read, Write};

use super::config::TrainerConfig;
use super::train::ModelTrace;
use crate::{AuditError, Result};

/// File signature of a stored trace.
pub const TRACE_MAGIC: [u8; 8] = *b"ORTRACE1";

/// Header (magic, `d`, `ℓ` as little-endian u64, 32-byte config hash)
/// followed by `(ℓ + 1)·d` little-endian f64 values.
pub fn write_trace<W: Write>(mut out: W, trace: &ModelTrace, cfg: &TrainerConfig) -> Result<()> {
    let io = |e: std::io::Error| AuditError::TraceFormat(e.to_string());
    out.write_all(&TRACE_MAGIC).map_err(io)?;
    out.write_all(&(trace.dim() as u64).to_le_bytes()).map_err(io)?;
    out.write_all(&(trace.ell() as u64).to_le_bytes()).map_err(io)?;
    out.write_all(&cfg.hash()).map_err(io)?;
    let mut buf = Vec::with_capacity(trace.as_flat().len() * 8);
    for v in trace.as_flat() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf).map_err(io)?;
    out.flush().map_err(io)
}

/// Reads a trace and returns it with the stored config hash.
pub fn read_trace<R: Read>(mut input: R) -> Result<(ModelTrace, [u8; 32])> {
    let io = |e: std::io::Error| AuditError::TraceFormat(e.to_string());
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if magic != TRACE_MAGIC {
        return Err(AuditError::TraceFormat("bad magic".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word).map_err(io)?;
    let dim = u64::from_le_bytes(word);
    input.read_exact(&mut word).map_err(io)?;
    let ell = u64::from_le_bytes(word);
    let mut hash = [0u8; 32];
    input.read_exact(&mut hash).map_err(io)?;
    let count = ell
        .checked_add(1)
        .and_then(|rows| rows.checked_mul(dim))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| AuditError::TraceFormat("header sizes overflow".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != count * 8 {
        return Err(AuditError::TraceFormat(format!(
            "expected {count} values, found {} bytes",
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((ModelTrace::from_flat(dim as usize, values)?, hash))
}
