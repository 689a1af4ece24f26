use std::path::Path;

use super::bitpack::{bit_width, pack_bits, payload_bytes, unpack_bits};
use super::varint;
use crate::error::{Error, Result};
use crate::fsutil::{self, check_magic, LeReader};
use crate::tokenize::{PieceSequence, SubwordModel};
use crate::tokens::TokenSequence;

pub const TOKEN_MAGIC: &[u8; 4] = b"DSTK";
pub const TOKEN_VERSION: u32 = 1;
/// magic, version, vocab_size, bit_width, flags, frame_rate, num_tokens,
/// run-length section length.
pub const TOKEN_HEADER_BYTES: usize = 4 + 4 + 4 + 1 + 1 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenFlags {
    pub deduped: bool,
    pub subworded: bool,
    pub masked: bool,
}

impl TokenFlags {
    const DEDUPED: u8 = 1;
    const SUBWORDED: u8 = 1 << 1;
    const MASKED: u8 = 1 << 2;

    pub fn bits(self) -> u8 {
        (self.deduped as u8 * Self::DEDUPED)
            | (self.subworded as u8 * Self::SUBWORDED)
            | (self.masked as u8 * Self::MASKED)
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits & !(Self::DEDUPED | Self::SUBWORDED | Self::MASKED) != 0 {
            return Err(Error::CorruptPayload(format!("unknown flag bits {bits:#04x}")));
        }
        Ok(Self {
            deduped: bits & Self::DEDUPED != 0,
            subworded: bits & Self::SUBWORDED != 0,
            masked: bits & Self::MASKED != 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenFileHeader {
    pub vocab_size: u32,
    pub bit_width: u8,
    pub flags: TokenFlags,
    pub frame_rate_hz: f32,
    pub num_tokens: u64,
    pub run_length_section_bytes: u64,
}

/// In-memory form of a `DSTK` token file.
///
/// For de-duplicated streams the run-length section holds one varint per
/// de-duplicated base token. Without subwording that is one per stored id;
/// with subwording the ids are pieces and the runs belong to the tokens the
/// pieces expand to.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedTokenFile {
    pub header: TokenFileHeader,
    pub run_lengths: Option<Vec<u32>>,
    pub payload: Vec<u8>,
}

impl PackedTokenFile {
    fn build(ids: &[u32], vocab_size: u32, frame_rate_hz: f32, flags: TokenFlags, run_lengths: Option<&[u32]>) -> Self {
        let width = bit_width(vocab_size);
        let rl_bytes = run_lengths.map(encoded_runs).unwrap_or_default();
        Self {
            header: TokenFileHeader {
                vocab_size,
                bit_width: width,
                flags: TokenFlags {
                    deduped: flags.deduped || run_lengths.is_some(),
                    ..flags
                },
                frame_rate_hz,
                num_tokens: ids.len() as u64,
                run_length_section_bytes: rl_bytes.len() as u64,
            },
            run_lengths: run_lengths.map(<[u32]>::to_vec),
            payload: pack_bits(ids, width),
        }
    }

    /// Size of the serialized file.
    pub fn byte_len(&self) -> u64 {
        TOKEN_HEADER_BYTES as u64 + self.header.run_length_section_bytes + self.payload.len() as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(self.byte_len() as usize);
        out.extend_from_slice(TOKEN_MAGIC);
        out.extend_from_slice(&TOKEN_VERSION.to_le_bytes());
        out.extend_from_slice(&h.vocab_size.to_le_bytes());
        out.push(h.bit_width);
        out.push(h.flags.bits());
        out.extend_from_slice(&h.frame_rate_hz.to_le_bytes());
        out.extend_from_slice(&h.num_tokens.to_le_bytes());
        out.extend_from_slice(&h.run_length_section_bytes.to_le_bytes());
        if let Some(r) = &self.run_lengths {
            out.extend_from_slice(&encoded_runs(r));
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn parse_header(bytes: &[u8]) -> Result<TokenFileHeader> {
        check_magic(bytes, TOKEN_MAGIC)?;
        let mut r = LeReader::new(bytes);
        r.take(4)?;
        let version = r.u32()?;
        if version != TOKEN_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let vocab_size = r.u32()?;
        let width = r.u8()?;
        let flags = TokenFlags::from_bits(r.u8()?)?;
        let frame_rate_hz = r.f32()?;
        let num_tokens = r.u64()?;
        let run_length_section_bytes = r.u64()?;
        if vocab_size == 0 {
            return Err(Error::CorruptPayload("vocab_size is zero".into()));
        }
        if width != bit_width(vocab_size) {
            return Err(Error::CorruptPayload(format!(
                "bit width {width} does not match vocab_size {vocab_size}"
            )));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::CorruptPayload(format!("frame rate {frame_rate_hz}")));
        }
        if run_length_section_bytes > 0 && !flags.deduped {
            return Err(Error::CorruptPayload(
                "run-length section without the deduped flag".into(),
            ));
        }
        Ok(TokenFileHeader {
            vocab_size,
            bit_width: width,
            flags,
            frame_rate_hz,
            num_tokens,
            run_length_section_bytes,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = Self::parse_header(bytes)?;
        let body = &bytes[TOKEN_HEADER_BYTES..];
        let rl_len = header.run_length_section_bytes;
        if rl_len > body.len() as u64 {
            return Err(Error::CorruptPayload("run-length section is truncated".into()));
        }
        let (rl, payload) = body.split_at(rl_len as usize);
        // Masked streams drop their runs; any other de-duplicated stream
        // carries a run-length section, empty only for an empty stream.
        let expects_runs = header.flags.deduped && !header.flags.masked;
        let run_lengths = if rl_len > 0 || expects_runs {
            let runs = varint::read_all_u32(rl)?;
            if runs.contains(&0) {
                return Err(Error::CorruptPayload("zero run length".into()));
            }
            if !header.flags.subworded && runs.len() as u64 != header.num_tokens {
                return Err(Error::CorruptPayload(format!(
                    "{} run lengths for {} tokens",
                    runs.len(),
                    header.num_tokens
                )));
            }
            Some(runs)
        } else {
            None
        };
        let expected = payload_bytes(header.num_tokens, header.bit_width);
        if payload.len() as u64 != expected {
            return Err(Error::CorruptPayload(format!(
                "payload is {} bytes, header implies {expected}",
                payload.len()
            )));
        }
        let file = Self {
            header,
            run_lengths,
            payload: payload.to_vec(),
        };
        file.decode_ids()?;
        Ok(file)
    }

    fn decode_ids(&self) -> Result<Vec<u32>> {
        let ids = unpack_bits(&self.payload, self.header.bit_width, self.header.num_tokens)?;
        if let Some(&id) = ids.iter().find(|&&id| id >= self.header.vocab_size) {
            return Err(Error::CorruptPayload(format!(
                "id {id} out of range for vocab_size {}",
                self.header.vocab_size
            )));
        }
        Ok(ids)
    }

    /// Recovers the piece sequence of a subworded file.
    pub fn to_piece_sequence(&self, utterance_id: &str, model: &SubwordModel) -> Result<PieceSequence> {
        if !self.header.flags.subworded {
            return Err(Error::CorruptPayload("file is not subworded".into()));
        }
        if self.header.vocab_size != model.len() as u32 {
            return Err(Error::VocabMismatch {
                expected: model.len() as u32,
                got: self.header.vocab_size,
            });
        }
        Ok(PieceSequence {
            utterance_id: utterance_id.to_string(),
            piece_ids: self.decode_ids()?,
            model_fingerprint: model.fingerprint(),
            frame_rate_hz: self.header.frame_rate_hz,
            base_run_lengths: self.run_lengths.clone(),
        })
    }
}

fn encoded_runs(runs: &[u32]) -> Vec<u8> {
    let mut out = Vec::new();
    for &r in runs {
        varint::write_u32(r, &mut out);
    }
    out
}

/// Packs a token stream. Run lengths, when present, are stored and set the
/// `deduped` flag.
pub fn pack(tokens: &TokenSequence, flags: TokenFlags) -> PackedTokenFile {
    PackedTokenFile::build(
        tokens.tokens(),
        tokens.vocab_size(),
        tokens.frame_rate_hz(),
        flags,
        tokens.run_lengths(),
    )
}

/// Packs a subword segmentation over the model's piece inventory.
pub fn pack_pieces(pieces: &PieceSequence, model: &SubwordModel, masked: bool) -> PackedTokenFile {
    PackedTokenFile::build(
        &pieces.piece_ids,
        model.len() as u32,
        pieces.frame_rate_hz,
        TokenFlags {
            deduped: pieces.base_run_lengths.is_some(),
            subworded: true,
            masked,
        },
        pieces.base_run_lengths.as_deref(),
    )
}

/// Exact inverse of [`pack`]. Run lengths come back attached unless the file
/// holds subword pieces (see [`PackedTokenFile::to_piece_sequence`]).
pub fn unpack(file: &PackedTokenFile, utterance_id: &str) -> Result<TokenSequence> {
    let ids = file.decode_ids()?;
    let runs = if file.header.flags.subworded {
        None
    } else {
        file.run_lengths.clone()
    };
    TokenSequence::with_run_lengths(
        utterance_id,
        ids,
        file.header.vocab_size,
        file.header.frame_rate_hz,
        runs,
    )
    .map_err(|e| Error::CorruptPayload(e.to_string()))
}

pub fn write_token_file(file: &PackedTokenFile, path: &Path) -> Result<()> {
    fsutil::atomic_write(path, &file.to_bytes())
}

pub fn read_token_file(path: &Path) -> Result<PackedTokenFile> {
    PackedTokenFile::from_bytes(&fsutil::read_all(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::dedup;

    fn seq(t: &[u32], vocab: u32) -> TokenSequence {
        TokenSequence::new("u", t.to_vec(), vocab, 50.0).unwrap()
    }

    #[test]
    fn empty_deduped_stream_keeps_its_runs() {
        let d = dedup(&seq(&[], 5)).unwrap();
        let back = PackedTokenFile::from_bytes(&pack(&d, TokenFlags::default()).to_bytes()).unwrap();
        assert_eq!(unpack(&back, "u").unwrap(), d);
    }

    #[test]
    fn header_layout() {
        let f = pack(
            &seq(&[1, 2], 16),
            TokenFlags {
                masked: true,
                ..Default::default()
            },
        );
        let b = f.to_bytes();
        assert_eq!(&b[..4], b"DSTK");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 16);
        assert_eq!(b[12], 4);
        assert_eq!(b[13], 0b100);
        assert_eq!(f32::from_le_bytes(b[14..18].try_into().unwrap()), 50.0);
        assert_eq!(u64::from_le_bytes(b[18..26].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(b[26..34].try_into().unwrap()), 0);
        assert_eq!(&b[34..], &[0x21]);
        assert_eq!(b.len() as u64, f.byte_len());
    }

    #[test]
    fn dedup_runs_round_trip() {
        let d = dedup(&seq(&[3, 3, 3, 1, 2, 2], 4)).unwrap();
        let f = pack(&d, TokenFlags::default());
        assert!(f.header.flags.deduped);
        let back = PackedTokenFile::from_bytes(&f.to_bytes()).unwrap();
        assert_eq!(unpack(&back, "u").unwrap(), d);
    }

    #[test]
    fn rejects_corruption() {
        let f = pack(&seq(&[1, 2, 0], 3), TokenFlags::default());
        let b = f.to_bytes();
        // one byte short
        assert!(matches!(
            PackedTokenFile::from_bytes(&b[..b.len() - 1]),
            Err(Error::CorruptPayload(_))
        ));
        // nonzero padding: 3 ids × 2 bits leave 2 high bits
        let mut p = b.clone();
        *p.last_mut().unwrap() |= 0x80;
        assert!(matches!(PackedTokenFile::from_bytes(&p), Err(Error::CorruptPayload(_))));
        // id 3 ≥ vocab 3
        let mut p = b.clone();
        *p.last_mut().unwrap() |= 0x03;
        assert!(matches!(PackedTokenFile::from_bytes(&p), Err(Error::CorruptPayload(_))));
        // wrong magic
        let mut p = b.clone();
        p[3] = b'X';
        assert!(matches!(PackedTokenFile::from_bytes(&p), Err(Error::BadMagic { .. })));
        // bit width inconsistent with vocab
        let mut p = b.clone();
        p[12] = 3;
        assert!(matches!(PackedTokenFile::from_bytes(&p), Err(Error::CorruptPayload(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.dstk");
        let f = pack(&seq(&[0, 1999, 7], 2000), TokenFlags::default());
        write_token_file(&f, &path).unwrap();
        let back = read_token_file(&path).unwrap();
        assert_eq!(back, f);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), TOKEN_HEADER_BYTES as u64 + 5);
    }
}
