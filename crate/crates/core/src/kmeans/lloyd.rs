use rayon::prelude::*;

use super::init::{check_fit_input, chunked_sum};
use super::{kmeans_pp_init, nearest_centroid, Codebook, KMeansConfig, TrainingMeta};
use crate::error::Result;
use crate::matrix::FrameMatrix;

struct Assignment {
    labels: Vec<u32>,
    dists: Vec<f64>,
    inertia: f64,
}

fn assign_step(data: &FrameMatrix, centroids: &FrameMatrix, chunk: usize) -> Assignment {
    let pairs: Vec<(u32, f64)> = data
        .as_slice()
        .par_chunks(chunk * data.dim())
        .flat_map_iter(|block| {
            block
                .chunks_exact(data.dim())
                .map(|row| nearest_centroid(centroids, row))
                .collect::<Vec<_>>()
        })
        .collect();
    let (labels, dists): (Vec<u32>, Vec<f64>) = pairs.into_iter().unzip();
    let inertia = chunked_sum(&dists, chunk);
    Assignment { labels, dists, inertia }
}

/// Mean of each cluster's members, summed in point order per cluster so the
/// result does not depend on scheduling. Empty clusters take the points
/// farthest from their assigned centroid.
fn update_step(data: &FrameMatrix, current: &FrameMatrix, asg: &Assignment) -> FrameMatrix {
    let k = current.num_rows();
    let dim = data.dim();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in asg.labels.iter().enumerate() {
        members[c as usize].push(i);
    }

    let mut rows: Vec<Vec<f32>> = members
        .par_iter()
        .enumerate()
        .map(|(c, idx)| {
            if idx.is_empty() {
                return current.row(c).to_vec();
            }
            let mut sum = vec![0.0f64; dim];
            for &i in idx {
                for (s, &v) in sum.iter_mut().zip(data.row(i)) {
                    *s += v as f64;
                }
            }
            let n = idx.len() as f64;
            sum.into_iter().map(|s| (s / n) as f32).collect()
        })
        .collect();

    let empty: Vec<usize> = (0..k).filter(|&c| members[c].is_empty()).collect();
    if !empty.is_empty() {
        let mut order: Vec<usize> = (0..asg.dists.len()).filter(|&i| asg.dists[i] > 0.0).collect();
        order.sort_by(|&a, &b| asg.dists[b].total_cmp(&asg.dists[a]).then(a.cmp(&b)));
        for (c, &i) in empty.iter().zip(&order) {
            rows[*c] = data.row(i).to_vec();
        }
    }

    FrameMatrix::from_vec(rows.into_iter().flatten().collect(), dim)
}

/// Lloyd's algorithm from a k-means++ start. Iterates until the relative
/// inertia improvement drops to `rel_tol` or below, or `max_iters` updates
/// have run. An update that would raise the inertia (possible only through
/// rounding of the means) is discarded and ends the fit, so the recorded
/// history is non-increasing.
///
/// With `restarts > 1` the fit is repeated with seeds `seed, seed + 1, ...`
/// and the lowest final inertia wins (earliest on ties). The winning seed is
/// recorded in the codebook.
pub fn lloyd_fit(data: &FrameMatrix, k: usize, config: &KMeansConfig) -> Result<Codebook> {
    config.validate()?;
    check_fit_input(data, k)?;
    let mut best = fit_once(data, k, config, config.seed)?;
    for r in 1..config.restarts {
        let cb = fit_once(data, k, config, config.seed.wrapping_add(r as u64))?;
        if cb.meta().final_inertia < best.meta().final_inertia {
            best = cb;
        }
    }
    Ok(best)
}

fn fit_once(data: &FrameMatrix, k: usize, config: &KMeansConfig, seed: u64) -> Result<Codebook> {
    let chunk = config.chunk_size;
    let seeded = kmeans_pp_init(data, k, seed)?;
    let mut centroids = seeded.centroids().clone();
    let mut asg = assign_step(data, &centroids, chunk);
    let mut history = vec![asg.inertia];
    let mut iterations = 0;

    while iterations < config.max_iters {
        let candidate = update_step(data, &centroids, &asg);
        let next = assign_step(data, &candidate, chunk);
        if next.inertia > asg.inertia {
            break;
        }
        let prev = asg.inertia;
        centroids = candidate;
        asg = next;
        iterations += 1;
        history.push(asg.inertia);
        if prev - asg.inertia <= config.rel_tol * prev {
            break;
        }
    }

    Codebook::new(
        centroids,
        TrainingMeta {
            seed,
            iterations_run: iterations,
            final_inertia: asg.inertia,
            inertia_history: history,
        },
    )
}
