//! Fixed-width LSB-first bit packing.

use crate::error::{Error, Result};

/// Bits needed per id for a vocabulary: `ceil(log2(vocab_size))`, at least 1.
pub fn bit_width(vocab_size: u32) -> u8 {
    if vocab_size <= 2 {
        1
    } else {
        (32 - (vocab_size - 1).leading_zeros()) as u8
    }
}

/// Payload bytes for `n` ids at `width` bits: `ceil(n·width / 8)`.
pub fn payload_bytes(n: u64, width: u8) -> u64 {
    let bits = n as u128 * width as u128;
    bits.div_ceil(8) as u64
}

/// Writes ids LSB-first into a little-endian bitstream. The high bits of the
/// final byte are zero. Every id must fit in `width` bits.
pub fn pack_bits(ids: &[u32], width: u8) -> Vec<u8> {
    assert!((1..=32).contains(&width), "bit width {width} out of range");
    let mut out = Vec::with_capacity(payload_bytes(ids.len() as u64, width) as usize);
    let mut acc: u64 = 0;
    let mut nbits: u32 = 0;
    for &id in ids {
        debug_assert!(width == 32 || id >> width == 0);
        acc |= (id as u64) << nbits;
        nbits += width as u32;
        while nbits >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            nbits -= 8;
        }
    }
    if nbits > 0 {
        out.push(acc as u8);
    }
    out
}

/// Reads `n` ids of `width` bits. The buffer must be exactly
/// `payload_bytes(n, width)` long with zero padding bits.
pub fn unpack_bits(bytes: &[u8], width: u8, n: u64) -> Result<Vec<u32>> {
    if !(1..=32).contains(&width) {
        return Err(Error::CorruptPayload(format!("bit width {width}")));
    }
    let expected = payload_bytes(n, width);
    if bytes.len() as u64 != expected {
        return Err(Error::CorruptPayload(format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mask: u64 = if width == 32 {
        u32::MAX as u64
    } else {
        (1u64 << width) - 1
    };
    let mut out = Vec::with_capacity(n as usize);
    let mut acc: u64 = 0;
    let mut nbits: u32 = 0;
    let mut src = bytes.iter();
    for _ in 0..n {
        while nbits < width as u32 {
            let b = *src.next().expect("length checked above");
            acc |= (b as u64) << nbits;
            nbits += 8;
        }
        out.push((acc & mask) as u32);
        acc >>= width;
        nbits -= width as u32;
    }
    if acc != 0 {
        return Err(Error::CorruptPayload("non-zero padding bits".into()));
    }
    Ok(out)
}
