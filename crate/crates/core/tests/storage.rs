use disctok::storage::{
    measure_corpus, pack, pack_pieces, read_token_file, unpack, write_token_file, PackedTokenFile, TokenFlags,
};
use disctok::tokenize::{decode, dedup, encode, unigram_train, SubwordTrainConfig};
use disctok::TokenSequence;
use proptest::prelude::*;

fn sticky(vocab: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec((0..vocab, any::<bool>()), 0..300).prop_map(|steps| {
        let mut out: Vec<u32> = Vec::with_capacity(steps.len());
        for (t, repeat) in steps {
            match out.last() {
                Some(&prev) if repeat => out.push(prev),
                _ => out.push(t),
            }
        }
        out
    })
}

proptest! {
    #[test]
    fn packed_files_survive_bytes(ids in sticky(37), deduped in any::<bool>()) {
        let s = TokenSequence::new("u", ids, 37, 50.0).unwrap();
        let s = if deduped { dedup(&s).unwrap() } else { s };
        let f = pack(&s, TokenFlags::default());
        prop_assert_eq!(f.header.flags.deduped, deduped);
        let back = PackedTokenFile::from_bytes(&f.to_bytes()).unwrap();
        prop_assert_eq!(unpack(&back, "u").unwrap(), s);
    }

    #[test]
    fn truncated_files_are_rejected(ids in sticky(5), cut in 1usize..8) {
        let s = TokenSequence::new("u", ids, 5, 50.0).unwrap();
        let bytes = pack(&s, TokenFlags::default()).to_bytes();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(PackedTokenFile::from_bytes(&bytes[..keep]).is_err() || keep == bytes.len());
    }
}

#[test]
fn subword_files_decode_to_the_original_frames() {
    let corpus: Vec<TokenSequence> = (0..40u32)
        .map(|u| {
            let ids = (0..120u32).map(|i| ((i / 3 + u) * 7 % 11) % 6).collect();
            TokenSequence::new(format!("u{u}"), ids, 6, 50.0).unwrap()
        })
        .collect();
    let deduped: Vec<TokenSequence> = corpus.iter().map(|s| dedup(s).unwrap()).collect();
    let (model, _) = unigram_train(&deduped, 30, &SubwordTrainConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (raw, d) in corpus.iter().zip(&deduped) {
        let pieces = encode(&model, d).unwrap();
        let path = dir.path().join(format!("{}.dstk", raw.utterance_id()));
        write_token_file(&pack_pieces(&pieces, &model, false), &path).unwrap();
        let file = read_token_file(&path).unwrap();
        assert!(file.header.flags.subworded && file.header.flags.deduped);
        let back = decode(&model, &file.to_piece_sequence(raw.utterance_id(), &model).unwrap()).unwrap();
        assert_eq!(disctok::tokenize::expand(&back).unwrap(), *raw);
    }
    let report = measure_corpus(dir.path(), None).unwrap();
    assert_eq!(report.summary.num_files, 40);
    assert_eq!(report.summary.num_frames, Some(40 * 120));
    assert!((report.duration_s - 96.0).abs() < 1e-9);
}
