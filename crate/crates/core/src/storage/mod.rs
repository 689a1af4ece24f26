//! Bit-packed token files (`DSTK`) and the storage-size model.
//!
//! Token file layout, all integers little-endian:
//!
//! | field                     | type |
//! |---------------------------|------|
//! | magic `DSTK`              | 4 B  |
//! | version = 1               | u32  |
//! | vocab_size                | u32  |
//! | bit_width                 | u8   |
//! | flags (deduped, subworded, masked) | u8 |
//! | frame_rate_hz             | f32  |
//! | num_tokens                | u64  |
//! | run-length section bytes  | u64  |
//! | run lengths (LEB128)      | …    |
//! | payload                   | ceil(num_tokens × bit_width / 8) B |

mod bitpack;
mod measure;
mod size;
mod token_file;
mod varint;

pub use bitpack::{bit_width, pack_bits, payload_bytes, unpack_bits};
pub use measure::{measure_corpus, measure_token_dir, token_files, CorpusSizeReport, TokenDirSummary};
pub use size::{bits_to_gb, size_bits, SizeModel};
pub use token_file::{
    pack, pack_pieces, read_token_file, unpack, write_token_file, PackedTokenFile, TokenFileHeader, TokenFlags,
    TOKEN_HEADER_BYTES, TOKEN_MAGIC, TOKEN_VERSION,
};
