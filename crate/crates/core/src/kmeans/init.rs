use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Codebook, TrainingMeta};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, FrameMatrix};

const DIST_CHUNK: usize = 4096;

/// Number of distinct rows, counting at most `limit`. `-0.0` and `0.0` are
/// the same value here.
pub fn count_distinct_rows(data: &FrameMatrix, limit: usize) -> usize {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    for row in data.rows() {
        if seen.len() >= limit {
            break;
        }
        seen.insert(row.iter().map(|&v| (v + 0.0).to_bits()).collect());
    }
    seen.len()
}

pub(crate) fn check_fit_input(data: &FrameMatrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be ≥ 1".into()));
    }
    if u32::try_from(k).is_err() {
        return Err(Error::InvalidConfig("k too large".into()));
    }
    if let Some(index) = data.first_non_finite() {
        return Err(Error::NonFiniteValue { index });
    }
    let found = count_distinct_rows(data, k);
    if found < k {
        return Err(Error::TooFewDistinctPoints { needed: k, found });
    }
    Ok(())
}

/// Ordered sum over fixed-size chunks, independent of the thread count.
pub(crate) fn chunked_sum(values: &[f64], chunk: usize) -> f64 {
    values
        .par_chunks(chunk.max(1))
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// k-means++ seeding: the first centroid is a uniformly drawn row, each
/// further one is drawn with probability proportional to its squared distance
/// from the nearest centroid chosen so far.
pub fn kmeans_pp_init(data: &FrameMatrix, k: usize, seed: u64) -> Result<Codebook> {
    check_fit_input(data, k)?;
    let n = data.num_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| squared_distance(data.row(i), data.row(first)))
        .collect();

    while chosen.len() < k {
        let total = chunked_sum(&d2, DIST_CHUNK);
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        let mut last_positive = None;
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            last_positive = Some(i);
            acc += d;
            if acc > target {
                pick = Some(i);
                break;
            }
        }
        // `last_positive` covers rounding between `total` and the running sum.
        let next = pick
            .or(last_positive)
            .expect("distinct-row check guarantees a positive distance");
        chosen.push(next);
        let c = data.row(next);
        d2.par_iter_mut().enumerate().for_each(|(i, d)| {
            let nd = squared_distance(data.row(i), c);
            if nd < *d {
                *d = nd;
            }
        });
    }

    let inertia = chunked_sum(&d2, DIST_CHUNK);
    let mut centroids = FrameMatrix::empty(data.dim());
    for &i in &chosen {
        centroids.push_row(data.row(i));
    }
    Codebook::new(
        centroids,
        TrainingMeta {
            seed,
            iterations_run: 0,
            final_inertia: inertia,
            inertia_history: vec![inertia],
        },
    )
}
