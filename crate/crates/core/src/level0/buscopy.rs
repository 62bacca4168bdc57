//! Transfer-cost curve: repeated buffer-to-buffer copies of varying sizes
//! between two preallocated regions (the portable stand-in for a host/device
//! bus, measured in both directions).

use std::hint::black_box;
use std::time::Instant;

use crate::error::Result;
use crate::rng::CounterRng;
use crate::util::ensure_memory;

use super::{median, BandwidthPoint, BandwidthSweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyDirection {
    AToB,
    BToA,
}

/// Default sweep: 1 KiB doubling up to `max_bytes`, plus the endpoint itself.
pub fn copy_sweep_sizes(max_bytes: usize) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut s = 1024;
    while s < max_bytes {
        sizes.push(s);
        s *= 2;
    }
    sizes.push(max_bytes);
    sizes
}

pub struct CopyBandwidth {
    a: Vec<u8>,
    b: Vec<u8>,
    direction: CopyDirection,
}

impl CopyBandwidth {
    pub fn new(direction: CopyDirection, max_bytes: usize, seed: u64) -> Result<CopyBandwidth> {
        ensure_memory(max_bytes as u64 * 2)?;
        let rng = CounterRng::new(seed, "busspeed");
        let a: Vec<u8> = (0..max_bytes)
            .map(|i| rng.at((i / 8) as u64).to_le_bytes()[i % 8])
            .collect();
        let b = vec![0u8; max_bytes];
        Ok(CopyBandwidth { a, b, direction })
    }

    /// Per size: `reps` timed samples, each a batch of copies sized to give
    /// the clock something to measure; throughput from the median per-copy
    /// time.
    pub fn run(&mut self, sizes: &[usize], reps: usize) -> Result<BandwidthSweepResult> {
        let mut points = Vec::with_capacity(sizes.len());
        for &size in sizes {
            assert!(size <= self.a.len());
            // batch small copies so one sample is >= ~64 KiB of traffic
            let batch = (64 * 1024 / size).max(1);
            let mut samples = Vec::with_capacity(reps);
            for _ in 0..reps {
                let started = Instant::now();
                for _ in 0..batch {
                    match self.direction {
                        CopyDirection::AToB => self.b[..size].copy_from_slice(&self.a[..size]),
                        CopyDirection::BToA => self.a[..size].copy_from_slice(&self.b[..size]),
                    }
                    black_box(());
                }
                samples.push(started.elapsed().as_secs_f64() / batch as f64);
            }
            let per_copy = median(&mut samples).max(1e-12);
            points.push(BandwidthPoint {
                bytes: size,
                gbytes_per_sec: size as f64 / per_copy / 1e9,
            });
        }
        Ok(BandwidthSweepResult { points })
    }

    /// Destination equals source over the largest copied size.
    pub fn buffers_match(&self, size: usize) -> bool {
        self.a[..size] == self.b[..size]
    }

    pub fn source_checksum(&self, size: usize) -> u64 {
        crate::util::fnv1a64(&self.a[..size])
    }
}

/// Convenience wrapper: allocate, sweep, and verify in one call.
pub fn copy_bandwidth(
    direction: CopyDirection,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<BandwidthSweepResult> {
    let max = sizes.iter().copied().max().unwrap_or(1024);
    let mut copier = CopyBandwidth::new(direction, max, seed)?;
    let sweep = copier.run(sizes, reps)?;
    if !copier.buffers_match(max) {
        return Err(crate::error::Error::InvalidInput(
            "copy verification failed: buffers differ".to_string(),
        ));
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copy_leaves_buffers_byte_equal() {
        let sizes = copy_sweep_sizes(16 * 1024);
        let mut copier = CopyBandwidth::new(CopyDirection::AToB, 16 * 1024, 1).unwrap();
        copier.run(&sizes, 4).unwrap();
        assert!(copier.buffers_match(16 * 1024));
    }

    #[test]
    fn single_size_gives_single_point() {
        let sweep = copy_bandwidth(CopyDirection::AToB, &[1024], 16, 2).unwrap();
        assert_eq!(sweep.points.len(), 1);
        assert_eq!(sweep.points[0].bytes, 1024);
        assert!(sweep.points[0].gbytes_per_sec > 0.0);
    }

    #[test]
    fn default_sweep_covers_paper_range() {
        let sizes = copy_sweep_sizes(500 * 1024);
        assert_eq!(sizes[0], 1024);
        assert_eq!(*sizes.last().unwrap(), 500 * 1024);
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn directions_agree_within_a_quarter() {
        let _serial = crate::util::timing_test_guard();
        // Symmetric host memory: both directions run the same copy loop, so
        // their throughputs land within 25%. Measure the directions in
        // adjacent pairs and take the median ratio, so a descheduling burst
        // during one short window cannot fake an asymmetry.
        let sizes = [256 * 1024];
        let mut down = CopyBandwidth::new(CopyDirection::AToB, sizes[0], 3).unwrap();
        let mut up = CopyBandwidth::new(CopyDirection::BToA, sizes[0], 3).unwrap();
        down.run(&sizes, 4).unwrap();
        up.run(&sizes, 4).unwrap();
        let mut ratios: Vec<f64> = (0..7)
            .map(|_| {
                let d = down.run(&sizes, 16).unwrap().points[0].gbytes_per_sec;
                let u = up.run(&sizes, 16).unwrap().points[0].gbytes_per_sec;
                (d / u).max(u / d)
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        let median = ratios[ratios.len() / 2];
        assert!(
            median < 1.25,
            "direction asymmetry {median:.3} exceeds 25% (samples {ratios:?})"
        );
        assert!(down.buffers_match(sizes[0]));
    }
}
