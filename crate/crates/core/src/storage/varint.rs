//! Unsigned LEB128 for run lengths.

use crate::error::{Error, Result};

pub fn write_u32(mut v: u32, out: &mut Vec<u8>) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Decodes varints until `bytes` is exhausted.
pub fn read_all_u32(bytes: &[u8]) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    let mut value: u64 = 0;
    let mut shift = 0u32;
    let mut pending = false;
    for &b in bytes {
        if shift >= 35 {
            return Err(Error::CorruptPayload("run-length varint too long".into()));
        }
        value |= ((b & 0x7f) as u64) << shift;
        pending = true;
        if b & 0x80 == 0 {
            let v =
                u32::try_from(value).map_err(|_| Error::CorruptPayload("run-length varint overflows u32".into()))?;
            out.push(v);
            value = 0;
            shift = 0;
            pending = false;
        } else {
            shift += 7;
        }
    }
    if pending {
        return Err(Error::CorruptPayload("truncated run-length varint".into()));
    }
    Ok(out)
}
