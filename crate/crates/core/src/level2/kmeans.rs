//! Lloyd's k-means clustering.
//!
//! Centers initialize to the first k points of a seeded shuffle. Center
//! recomputation accumulates per-cluster sums over fixed 4096-point blocks
//! folded in block order — the documented summation contract shared with the
//! single-threaded reference, which makes parallel and sequential results
//! bit-identical.

use crate::error::{Error, Result};
use crate::parallel::{par_chunks_mut, par_map_blocks};
use crate::rng::CounterRng;

const BLOCK: usize = 4096;

/// Dense n x d point cloud, row-major.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub n: usize,
    pub d: usize,
    pub coords: Vec<f64>,
}

impl PointSet {
    pub fn random(n: usize, d: usize, rng: &mut CounterRng, lo: f64, hi: f64) -> PointSet {
        let mut coords = vec![0.0; n * d];
        rng.fill_f64(&mut coords, lo, hi);
        PointSet { n, d, coords }
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    /// k x d, row-major.
    pub centers: Vec<f64>,
    pub assignments: Vec<u32>,
    pub iterations_used: usize,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
}

/// First k points after a seeded shuffle.
pub fn seeded_centers(points: &PointSet, k: usize, rng: &mut CounterRng) -> Vec<f64> {
    let mut order: Vec<usize> = (0..points.n).collect();
    rng.shuffle(&mut order);
    let mut centers = Vec::with_capacity(k * points.d);
    for &idx in order.iter().take(k) {
        centers.extend_from_slice(points.point(idx));
    }
    centers
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/// Nearest center by squared Euclidean distance, lowest index on ties.
#[inline]
fn nearest(point: &[f64], centers: &[f64], d: usize) -> (u32, f64) {
    let mut best = 0u32;
    let mut best_dist = f64::INFINITY;
    for (c, center) in centers.chunks(d).enumerate() {
        let dist = squared_distance(point, center);
        if dist < best_dist {
            best_dist = dist;
            best = c as u32;
        }
    }
    (best, best_dist)
}

fn assign(points: &PointSet, centers: &[f64], assignments: &mut [u32], workers: usize) -> f64 {
    let d = points.d;
    par_chunks_mut(workers, assignments, |offset, chunk| {
        for (i, slot) in chunk.iter_mut().enumerate() {
            *slot = nearest(points.point(offset + i), centers, d).0;
        }
    });
    // WCSS over fixed blocks folded in block order.
    let partials = par_map_blocks(workers, points.n, BLOCK, |_, range| {
        let mut acc = 0.0;
        for i in range {
            let c = assignments[i] as usize;
            acc += squared_distance(points.point(i), &centers[c * d..(c + 1) * d]);
        }
        acc
    });
    partials.into_iter().sum()
}

fn recompute_centers(
    points: &PointSet,
    assignments: &[u32],
    k: usize,
    previous: &[f64],
    workers: usize,
) -> Vec<f64> {
    let d = points.d;
    let partials = par_map_blocks(workers, points.n, BLOCK, |_, range| {
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0u64; k];
        for i in range {
            let c = assignments[i] as usize;
            counts[c] += 1;
            let point = points.point(i);
            for (dst, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(point) {
                *dst += v;
            }
        }
        (sums, counts)
    });
    let mut sums = vec![0.0f64; k * d];
    let mut counts = vec![0u64; k];
    for (block_sums, block_counts) in partials {
        for (dst, v) in sums.iter_mut().zip(block_sums) {
            *dst += v;
        }
        for (dst, v) in counts.iter_mut().zip(block_counts) {
            *dst += v;
        }
    }
    let mut centers = vec![0.0f64; k * d];
    for c in 0..k {
        if counts[c] == 0 {
            // Empty cluster keeps its previous center.
            centers[c * d..(c + 1) * d].copy_from_slice(&previous[c * d..(c + 1) * d]);
        } else {
            for j in 0..d {
                centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
            }
        }
    }
    centers
}

/// Runs Lloyd's iteration from the given initial centers until assignments
/// stop changing or `max_iters` update steps have run.
pub fn kmeans(
    points: &PointSet,
    initial_centers: &[f64],
    max_iters: usize,
    workers: usize,
) -> Result<KmeansResult> {
    let k = initial_centers.len() / points.d.max(1);
    if k == 0 || k > points.n {
        return Err(Error::InvalidInput(format!(
            "k = {k} must be in 1..={}",
            points.n
        )));
    }
    if max_iters < 1 {
        return Err(Error::InvalidInput("max_iters must be >= 1".to_string()));
    }
    let mut centers = initial_centers.to_vec();
    let mut assignments = vec![u32::MAX; points.n];
    let mut scratch = vec![u32::MAX; points.n];
    let mut wcss_history = Vec::new();
    let mut iterations_used = 0;
    loop {
        let wcss = assign(points, &centers, &mut scratch, workers);
        wcss_history.push(wcss);
        if scratch == assignments {
            break;
        }
        std::mem::swap(&mut assignments, &mut scratch);
        if iterations_used == max_iters {
            break;
        }
        centers = recompute_centers(points, &assignments, k, &centers, workers);
        iterations_used += 1;
    }
    Ok(KmeansResult {
        centers,
        assignments,
        iterations_used,
        wcss_history,
    })
}

/// Single-threaded reference following the same summation contract.
pub fn kmeans_reference(
    points: &PointSet,
    initial_centers: &[f64],
    max_iters: usize,
) -> Result<KmeansResult> {
    let d = points.d;
    let k = initial_centers.len() / d.max(1);
    if k == 0 || k > points.n {
        return Err(Error::InvalidInput(format!(
            "k = {k} must be in 1..={}",
            points.n
        )));
    }
    let mut centers = initial_centers.to_vec();
    let mut assignments = vec![u32::MAX; points.n];
    let mut wcss_history = Vec::new();
    let mut iterations_used = 0;
    loop {
        let mut next = vec![0u32; points.n];
        for i in 0..points.n {
            next[i] = nearest(points.point(i), &centers, d).0;
        }
        // blocked WCSS, folded in block order
        let mut wcss = 0.0;
        for block in (0..points.n).step_by(BLOCK) {
            let mut acc = 0.0;
            for i in block..(block + BLOCK).min(points.n) {
                let c = next[i] as usize;
                acc += squared_distance(points.point(i), &centers[c * d..(c + 1) * d]);
            }
            wcss += acc;
        }
        wcss_history.push(wcss);
        if next == assignments {
            break;
        }
        assignments = next;
        if iterations_used == max_iters {
            break;
        }
        // blocked center sums, folded in block order
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0u64; k];
        for block in (0..points.n).step_by(BLOCK) {
            let mut block_sums = vec![0.0f64; k * d];
            let mut block_counts = vec![0u64; k];
            for i in block..(block + BLOCK).min(points.n) {
                let c = assignments[i] as usize;
                block_counts[c] += 1;
                for j in 0..d {
                    block_sums[c * d + j] += points.point(i)[j];
                }
            }
            for (dst, v) in sums.iter_mut().zip(block_sums) {
                *dst += v;
            }
            for (dst, v) in counts.iter_mut().zip(block_counts) {
                *dst += v;
            }
        }
        let previous = centers.clone();
        for c in 0..k {
            if counts[c] == 0 {
                centers[c * d..(c + 1) * d].copy_from_slice(&previous[c * d..(c + 1) * d]);
            } else {
                for j in 0..d {
                    centers[c * d + j] = sums[c * d + j] / counts[c] as f64;
                }
            }
        }
        iterations_used += 1;
    }
    Ok(KmeansResult {
        centers,
        assignments,
        iterations_used,
        wcss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_on_exact_clusters_converge_in_one_iteration() {
        // Points sit at exactly k distinct locations; centers start there.
        let mut coords = Vec::new();
        let sites = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        for rep in 0..5 {
            for site in &sites {
                coords.push(site[0]);
                coords.push(site[1]);
                let _ = rep;
            }
        }
        let points = PointSet {
            n: 15,
            d: 2,
            coords,
        };
        let initial: Vec<f64> = sites.iter().flatten().cloned().collect();
        let result = kmeans(&points, &initial, 10, 2).unwrap();
        assert_eq!(result.iterations_used, 1);
        for (i, &a) in result.assignments.iter().enumerate() {
            assert_eq!(a as usize, i % 3);
        }
    }

    #[test]
    fn k_equals_one_gives_the_mean() {
        let mut rng = CounterRng::new(4, "kmeans-test");
        let points = PointSet::random(100, 3, &mut rng, -1.0, 1.0);
        let initial = points.point(0).to_vec();
        let result = kmeans(&points, &initial, 10, 1).unwrap();
        // blocked contract degenerates to a plain sum at this size
        for j in 0..3 {
            let mean: f64 = (0..100).map(|i| points.point(i)[j]).sum::<f64>() / 100.0;
            assert!((result.centers[j] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_matches_sequential_reference_exactly() {
        let mut rng = CounterRng::new(5, "kmeans-test");
        let points = PointSet::random(500, 4, &mut rng, 0.0, 100.0);
        let initial = seeded_centers(&points, 8, &mut rng.split(1));
        let par = kmeans(&points, &initial, 20, 3).unwrap();
        let seq = kmeans_reference(&points, &initial, 20).unwrap();
        assert_eq!(par.assignments, seq.assignments);
        assert_eq!(par.centers, seq.centers);
        assert_eq!(par.iterations_used, seq.iterations_used);
        assert_eq!(par.wcss_history, seq.wcss_history);
    }

    #[test]
    fn wcss_never_increases() {
        let mut rng = CounterRng::new(6, "kmeans-test");
        let points = PointSet::random(400, 6, &mut rng, 0.0, 10.0);
        let initial = seeded_centers(&points, 5, &mut rng.split(9));
        let result = kmeans(&points, &initial, 30, 2).unwrap();
        for pair in result.wcss_history.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-12,
                "WCSS rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let points = PointSet {
            n: 2,
            d: 1,
            coords: vec![0.0, 1.0],
        };
        let initial = vec![0.0, 0.5, 1.0];
        assert!(kmeans(&points, &initial, 5, 1).is_err());
    }
}
