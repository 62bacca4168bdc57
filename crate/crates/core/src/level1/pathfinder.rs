//! Grid shortest path: dynamic program from the top row to the bottom row.
//!
//! `next[j] = cost[i][j] + min(prev[j-1], prev[j], prev[j+1])` with indices
//! clamped at the grid edges; the answer is the minimum over the bottom row.
//! Rows are computed in parallel column bands with a barrier per row.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Barrier;

use crate::error::{Error, Result};
use crate::parallel::join_workers;
use crate::rng::CounterRng;

/// Non-negative per-cell step costs, row-major.
#[derive(Debug, Clone)]
pub struct GridCostMap {
    pub rows: usize,
    pub cols: usize,
    pub cost: Vec<u32>,
}

impl GridCostMap {
    pub fn random(rows: usize, cols: usize, max_cost: u32, rng: &CounterRng) -> GridCostMap {
        let cost = (0..rows * cols)
            .map(|i| (rng.at(i as u64) % (max_cost as u64 + 1)) as u32)
            .collect();
        GridCostMap { rows, cols, cost }
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidInput("empty grid".to_string()));
        }
        if self.cost.len() != self.rows * self.cols {
            return Err(Error::InvalidInput("cost length mismatch".to_string()));
        }
        Ok(())
    }

    pub fn column_reversed(&self) -> GridCostMap {
        let mut cost = Vec::with_capacity(self.cost.len());
        for row in self.cost.chunks(self.cols) {
            cost.extend(row.iter().rev());
        }
        GridCostMap {
            rows: self.rows,
            cols: self.cols,
            cost,
        }
    }
}

#[inline]
fn min3(a: u64, b: u64, c: u64) -> u64 {
    a.min(b).min(c)
}

/// Minimum total path cost, parallel over column bands.
pub fn pathfinder(map: &GridCostMap, workers: usize) -> Result<u64> {
    map.validate()?;
    let (rows, cols) = (map.rows, map.cols);
    let workers = workers.clamp(1, cols);
    // Double-buffered wavefront; relaxed atomics carry plain values between
    // per-row barriers.
    let buf: [Vec<AtomicU64>; 2] = [
        (0..cols)
            .map(|j| AtomicU64::new(map.cost[j] as u64))
            .collect(),
        (0..cols).map(|_| AtomicU64::new(0)).collect(),
    ];
    let barrier = Barrier::new(workers);
    join_workers(workers, |lane| {
        let chunk = cols.div_ceil(workers);
        let start = lane * chunk;
        let end = ((lane + 1) * chunk).min(cols);
        for i in 1..rows {
            let prev = &buf[(i - 1) % 2];
            let next = &buf[i % 2];
            for j in start..end {
                let left = prev[j.saturating_sub(1)].load(Ordering::Relaxed);
                let mid = prev[j].load(Ordering::Relaxed);
                let right = prev[(j + 1).min(cols - 1)].load(Ordering::Relaxed);
                next[j].store(
                    map.cost[i * cols + j] as u64 + min3(left, mid, right),
                    Ordering::Relaxed,
                );
            }
            barrier.wait();
        }
    });
    let last = &buf[(rows - 1) % 2];
    Ok((0..cols)
        .map(|j| last[j].load(Ordering::Relaxed))
        .min()
        .unwrap())
}

/// Single-threaded reference of the same recurrence.
pub fn pathfinder_sequential(map: &GridCostMap) -> Result<u64> {
    map.validate()?;
    let cols = map.cols;
    let mut prev: Vec<u64> = map.cost[..cols].iter().map(|&c| c as u64).collect();
    let mut next = vec![0u64; cols];
    for i in 1..map.rows {
        for j in 0..cols {
            let best = min3(
                prev[j.saturating_sub(1)],
                prev[j],
                prev[(j + 1).min(cols - 1)],
            );
            next[j] = map.cost[i * cols + j] as u64 + best;
        }
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(prev.into_iter().min().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive enumeration of every top-to-bottom path (oracle for tiny
    /// grids).
    fn enumerate_paths(map: &GridCostMap) -> u64 {
        fn walk(map: &GridCostMap, row: usize, col: usize, acc: u64) -> u64 {
            let acc = acc + map.cost[row * map.cols + col] as u64;
            if row + 1 == map.rows {
                return acc;
            }
            let mut best = u64::MAX;
            for dj in [-1i64, 0, 1] {
                let next = col as i64 + dj;
                if next >= 0 && (next as usize) < map.cols {
                    best = best.min(walk(map, row + 1, next as usize, acc));
                }
            }
            best
        }
        (0..map.cols)
            .map(|start| walk(map, 0, start, 0))
            .min()
            .unwrap()
    }

    #[test]
    fn single_cell_grid() {
        let map = GridCostMap {
            rows: 1,
            cols: 1,
            cost: vec![7],
        };
        assert_eq!(pathfinder(&map, 1).unwrap(), 7);
    }

    #[test]
    fn all_zero_grid_costs_nothing() {
        let map = GridCostMap {
            rows: 4,
            cols: 4,
            cost: vec![0; 16],
        };
        assert_eq!(pathfinder(&map, 2).unwrap(), 0);
    }

    #[test]
    fn random_5x5_matches_exhaustive_enumeration() {
        let rng = CounterRng::new(3, "pathfinder-test");
        let map = GridCostMap::random(5, 5, 9, &rng);
        let expected = enumerate_paths(&map);
        assert_eq!(pathfinder(&map, 3).unwrap(), expected);
        assert_eq!(pathfinder_sequential(&map).unwrap(), expected);
    }

    #[test]
    fn result_invariant_under_column_reversal() {
        let rng = CounterRng::new(5, "pathfinder-test");
        let map = GridCostMap::random(12, 9, 9, &rng);
        assert_eq!(
            pathfinder(&map, 2).unwrap(),
            pathfinder(&map.column_reversed(), 2).unwrap()
        );
    }

    #[test]
    fn parallel_matches_sequential_on_larger_grid() {
        let rng = CounterRng::new(8, "pathfinder-test");
        let map = GridCostMap::random(64, 101, 9, &rng);
        assert_eq!(
            pathfinder(&map, 4).unwrap(),
            pathfinder_sequential(&map).unwrap()
        );
    }

    #[test]
    fn empty_grid_is_an_error() {
        let map = GridCostMap {
            rows: 0,
            cols: 0,
            cost: vec![],
        };
        assert!(pathfinder(&map, 1).is_err());
    }
}
