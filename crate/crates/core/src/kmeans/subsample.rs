use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature_io::CorpusManifest;
use crate::matrix::FrameMatrix;

/// Sorted, distinct global frame indices drawn uniformly without replacement.
/// Returns every index when the corpus has at most `target` frames.
pub fn sample_frame_indices(total: usize, target: usize, seed: u64) -> Vec<usize> {
    if target >= total {
        return (0..total).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, total, target).into_vec();
    idx.sort_unstable();
    idx
}

/// Gathers a uniform frame subsample of the whole corpus for k-means fitting.
pub fn subsample_frames(manifest: &CorpusManifest, target_frames: usize, seed: u64) -> Result<FrameMatrix> {
    if target_frames == 0 {
        return Err(Error::InvalidConfig("subsample target must be ≥ 1".into()));
    }
    let total = manifest.total_frames() as usize;
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let picked = sample_frame_indices(total, target_frames, seed);

    // Split the sorted global indices into per-file local indices.
    let mut per_file: Vec<Vec<usize>> = Vec::with_capacity(manifest.len());
    let mut cursor = 0;
    let mut offset = 0usize;
    for e in manifest.entries() {
        let end = offset + e.num_frames as usize;
        let mut local = Vec::new();
        while cursor < picked.len() && picked[cursor] < end {
            local.push(picked[cursor] - offset);
            cursor += 1;
        }
        per_file.push(local);
        offset = end;
    }

    let blocks: Vec<Option<FrameMatrix>> = manifest
        .entries()
        .par_iter()
        .zip(per_file.par_iter())
        .map(|(e, local)| {
            if local.is_empty() {
                return Ok(None);
            }
            let seq = manifest.load(e)?;
            let mut m = FrameMatrix::empty(seq.dim());
            for &i in local {
                m.push_row(seq.frames().row(i));
            }
            Ok(Some(m))
        })
        .collect::<Result<_>>()?;

    let mut out: Option<FrameMatrix> = None;
    for b in blocks.into_iter().flatten() {
        match &mut out {
            None => out = Some(b),
            Some(acc) => {
                if acc.dim() != b.dim() {
                    return Err(Error::DimMismatch {
                        expected: acc.dim(),
                        got: b.dim(),
                    });
                }
                for row in b.rows() {
                    acc.push_row(row);
                }
            }
        }
    }
    out.ok_or(Error::EmptyCorpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_io::{synth_corpus, SynthConfig};

    #[test]
    fn clamps_to_corpus_size() {
        assert_eq!(sample_frame_indices(10, 20, 1), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn exact_count_of_distinct_indices() {
        let idx = sample_frame_indices(1_000_000, 10_000, 5);
        assert_eq!(idx.len(), 10_000);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(*idx.last().unwrap() < 1_000_000);
        assert_eq!(idx, sample_frame_indices(1_000_000, 10_000, 5));
        assert_ne!(idx, sample_frame_indices(1_000_000, 10_000, 6));
    }

    #[test]
    fn subsample_reads_the_right_frames() {
        let cfg = SynthConfig {
            num_utts: 4,
            frames_per_utt: 5,
            dim: 2,
            num_clusters: 3,
            seed: 1,
            ..SynthConfig::default()
        };
        let corpus = synth_corpus(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = corpus.write_features(dir.path()).unwrap();

        let all = subsample_frames(&manifest, 100, 0).unwrap();
        assert_eq!(all.num_rows(), 20);
        let flat: Vec<f32> = corpus
            .sequences
            .iter()
            .flat_map(|s| s.frames().as_slice().to_vec())
            .collect();
        assert_eq!(all.as_slice(), flat.as_slice());

        let some = subsample_frames(&manifest, 7, 3).unwrap();
        assert_eq!(some.num_rows(), 7);
        for (row, g) in some.rows().zip(sample_frame_indices(20, 7, 3)) {
            assert_eq!(row, all.row(g));
        }
        assert_eq!(some, subsample_frames(&manifest, 7, 3).unwrap());
    }

    #[test]
    fn empty_corpus() {
        let m = CorpusManifest::new(Vec::new(), ".").unwrap();
        assert!(matches!(subsample_frames(&m, 5, 0), Err(Error::EmptyCorpus)));
    }
}
