use disctok::feature_io::{synth_corpus, SynthConfig};
use disctok::kmeans::{assign, lloyd_fit, load_codebook, save_codebook, subsample_frames, KMeansConfig};
use disctok::{Codebook, FrameMatrix};

fn corpus_frames(cfg: &SynthConfig) -> FrameMatrix {
    let corpus = synth_corpus(cfg).unwrap();
    let mut all = FrameMatrix::empty(cfg.dim);
    for s in &corpus.sequences {
        for row in s.frames().rows() {
            all.push_row(row);
        }
    }
    all
}

fn fit_with_threads(data: &FrameMatrix, threads: usize, chunk: usize) -> Codebook {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let cfg = KMeansConfig {
        seed: 4,
        chunk_size: chunk,
        ..Default::default()
    };
    pool.install(|| lloyd_fit(data, 12, &cfg).unwrap())
}

#[test]
fn fit_is_bitwise_identical_across_thread_counts() {
    let data = corpus_frames(&SynthConfig {
        num_utts: 40,
        num_clusters: 12,
        separation: 3.0,
        ..Default::default()
    });
    let one = fit_with_threads(&data, 1, 1000);
    for threads in [2, 3, 8] {
        let other = fit_with_threads(&data, threads, 1000);
        assert_eq!(one.to_bytes(), other.to_bytes());
        assert_eq!(one.meta().inertia_history, other.meta().inertia_history);
    }
}

#[test]
fn codebook_file_round_trip_preserves_assignments() {
    let cfg = SynthConfig {
        num_utts: 10,
        ..Default::default()
    };
    let data = corpus_frames(&cfg);
    let cb = lloyd_fit(&data, 16, &KMeansConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cb.dscb");
    save_codebook(&cb, &path).unwrap();
    let back = load_codebook(&path).unwrap();
    assert_eq!(back.centroids(), cb.centroids());
    assert_eq!(back.meta().final_inertia, cb.meta().final_inertia);

    let corpus = synth_corpus(&cfg).unwrap();
    for s in &corpus.sequences {
        assert_eq!(assign(&cb, s).unwrap(), assign(&back, s).unwrap());
    }
}

#[test]
fn subsample_is_seeded_and_bounded() {
    let cfg = SynthConfig {
        num_utts: 12,
        frames_per_utt: 50,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_corpus(&cfg).unwrap().write_features(dir.path()).unwrap();
    let a = subsample_frames(&manifest, 100, 1).unwrap();
    let b = subsample_frames(&manifest, 100, 1).unwrap();
    let c = subsample_frames(&manifest, 100, 2).unwrap();
    assert_eq!(a.num_rows(), 100);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(subsample_frames(&manifest, 10_000, 1).unwrap().num_rows(), 600);
}
