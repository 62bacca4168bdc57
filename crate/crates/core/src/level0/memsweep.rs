//! Memory-hierarchy bandwidth: working-set sweep that exposes cache levels.
//!
//! Patterns: `read` (streaming wrapping sum), `write` (streaming fill), and
//! `triad` (`a[i] = b[i] + s*c[i]`). The working-set size counts all buffers
//! a pattern touches.

use std::time::Instant;

use crate::error::Result;
use crate::parallel::{par_chunks_mut, par_map_blocks};
use crate::rng::CounterRng;
use crate::util::ensure_memory;

use super::{median, BandwidthPoint, BandwidthSweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemPattern {
    Read,
    Write,
    Triad,
}

impl MemPattern {
    pub fn parse(s: &str) -> Result<MemPattern> {
        match s {
            "read" => Ok(MemPattern::Read),
            "write" => Ok(MemPattern::Write),
            "triad" => Ok(MemPattern::Triad),
            other => Err(crate::error::Error::invalid_param(
                "pattern",
                format!("`{other}` is not read/write/triad"),
            )),
        }
    }
}

/// Cache-line-friendly reduction block (in u64 words).
const SUM_BLOCK: usize = 1 << 16;

/// Default sweep: `min_bytes` doubling up to `max_bytes` (endpoint included).
pub fn working_set_sweep(min_bytes: usize, max_bytes: usize) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut s = min_bytes.max(1024);
    while s < max_bytes {
        sizes.push(s);
        s *= 2;
    }
    sizes.push(max_bytes);
    sizes
}

/// Last-level-cache size estimate used to scale the default sweep. Values
/// reported inside containers are unreliable, so the reading is capped.
pub fn llc_estimate_bytes() -> usize {
    const CAP: usize = 32 * 1024 * 1024;
    const DEFAULT: usize = 8 * 1024 * 1024;
    for index in (0..=4).rev() {
        let path = format!("/sys/devices/system/cpu/cpu0/cache/index{index}/size");
        if let Ok(text) = std::fs::read_to_string(&path) {
            let text = text.trim();
            if let Some(kb) = text.strip_suffix('K').and_then(|v| v.parse::<usize>().ok()) {
                return (kb * 1024).min(CAP);
            }
            if let Some(mb) = text.strip_suffix('M').and_then(|v| v.parse::<usize>().ok()) {
                return (mb * 1024 * 1024).min(CAP);
            }
        }
    }
    DEFAULT
}

pub struct MemorySweep {
    pattern: MemPattern,
    // read/write use `words`; triad uses the three f64 arrays
    words: Vec<u64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    scalar: f64,
    fill_token: u64,
    pub read_checksum: u64,
    pub read_checksum_expected: u64,
}

impl MemorySweep {
    pub fn new(
        pattern: MemPattern,
        max_bytes: usize,
        scalar: f64,
        seed: u64,
    ) -> Result<MemorySweep> {
        ensure_memory(max_bytes as u64 + 64)?;
        let rng = CounterRng::new(seed, "devicemem");
        let mut sweep = MemorySweep {
            pattern,
            words: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            c: Vec::new(),
            scalar,
            fill_token: 0,
            read_checksum: 0,
            read_checksum_expected: 0,
        };
        match pattern {
            MemPattern::Read | MemPattern::Write => {
                let n = max_bytes / 8;
                sweep.words = (0..n).map(|i| rng.at(i as u64)).collect();
            }
            MemPattern::Triad => {
                let n = max_bytes / 24;
                sweep.a = vec![0.0; n];
                let mut b = vec![0.0; n];
                let mut c = vec![0.0; n];
                let mut r = rng.clone();
                r.fill_f64(&mut b, -1.0, 1.0);
                r.fill_f64(&mut c, -1.0, 1.0);
                sweep.b = b;
                sweep.c = c;
            }
        }
        Ok(sweep)
    }

    /// Sustained bandwidth per working set (median over `reps`).
    pub fn run(
        &mut self,
        working_sets: &[usize],
        reps: usize,
        workers: usize,
    ) -> Result<BandwidthSweepResult> {
        let mut points = Vec::with_capacity(working_sets.len());
        for &ws in working_sets {
            let mut samples = Vec::with_capacity(reps);
            // enough traversals that tiny working sets still get a timeable sample
            let traversals = (4 * 1024 * 1024 / ws).clamp(1, 64);
            for _ in 0..reps {
                let started = Instant::now();
                for _ in 0..traversals {
                    self.traverse(ws, workers);
                }
                samples.push(started.elapsed().as_secs_f64() / traversals as f64);
            }
            let secs = median(&mut samples).max(1e-12);
            points.push(BandwidthPoint {
                bytes: ws,
                gbytes_per_sec: ws as f64 / secs / 1e9,
            });
        }
        Ok(BandwidthSweepResult { points })
    }

    fn traverse(&mut self, working_set: usize, workers: usize) {
        match self.pattern {
            MemPattern::Read => {
                let n = (working_set / 8).min(self.words.len());
                let words = &self.words[..n];
                let partials = par_map_blocks(workers, n, SUM_BLOCK, |_, range| {
                    words[range]
                        .iter()
                        .fold(0u64, |acc, &w| acc.wrapping_add(w))
                });
                self.read_checksum = partials.into_iter().fold(0u64, u64::wrapping_add);
            }
            MemPattern::Write => {
                self.fill_token = self.fill_token.wrapping_add(0x9E37_79B9);
                let token = self.fill_token;
                let n = (working_set / 8).min(self.words.len());
                par_chunks_mut(workers, &mut self.words[..n], |_, chunk| {
                    chunk.fill(token);
                });
            }
            MemPattern::Triad => {
                let n = (working_set / 24).min(self.a.len());
                let (b, c, s) = (&self.b, &self.c, self.scalar);
                par_chunks_mut(workers, &mut self.a[..n], |off, chunk| {
                    for (i, dst) in chunk.iter_mut().enumerate() {
                        *dst = b[off + i] + s * c[off + i];
                    }
                });
            }
        }
    }

    /// Pattern-specific correctness check against a sequential recomputation.
    pub fn verify(&mut self, largest_ws: usize) -> std::result::Result<String, String> {
        match self.pattern {
            MemPattern::Read => {
                let n = (largest_ws / 8).min(self.words.len());
                let expected = self.words[..n]
                    .iter()
                    .fold(0u64, |acc, &w| acc.wrapping_add(w));
                self.read_checksum_expected = expected;
                if self.read_checksum == expected {
                    Ok(format!(
                        "read checksum {expected:016x} matches sequential sum"
                    ))
                } else {
                    Err(format!(
                        "read checksum {:016x} != sequential {expected:016x}",
                        self.read_checksum
                    ))
                }
            }
            MemPattern::Write => {
                let n = (largest_ws / 8).min(self.words.len());
                let token = self.fill_token;
                if self.words[..n].iter().all(|&w| w == token) {
                    Ok(format!("buffer uniformly holds fill token {token:016x}"))
                } else {
                    Err("write pattern left non-uniform buffer".to_string())
                }
            }
            MemPattern::Triad => {
                let n = (largest_ws / 24).min(self.a.len());
                let step = (n / 100).max(1); // 1% sample
                for i in (0..n).step_by(step) {
                    let expected = self.b[i] + self.scalar * self.c[i];
                    if self.a[i].to_bits() != expected.to_bits() {
                        return Err(format!(
                            "triad mismatch at {i}: {} != {expected}",
                            self.a[i]
                        ));
                    }
                }
                Ok(format!(
                    "triad sample matches recomputation; fnv64 {:016x}",
                    crate::util::checksum_f64s(&self.a[..n])
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triad_with_zero_scalar_copies_b() {
        let mut sweep = MemorySweep::new(MemPattern::Triad, 24 * 1024, 0.0, 1).unwrap();
        sweep.run(&[24 * 1024], 2, 2).unwrap();
        assert_eq!(sweep.a, sweep.b);
    }

    #[test]
    fn read_checksum_matches_sequential() {
        let mut sweep = MemorySweep::new(MemPattern::Read, 64 * 1024, 3.0, 2).unwrap();
        sweep.run(&[64 * 1024], 2, 3).unwrap();
        assert!(sweep.verify(64 * 1024).is_ok());
    }

    #[test]
    fn write_leaves_uniform_buffer() {
        let mut sweep = MemorySweep::new(MemPattern::Write, 32 * 1024, 3.0, 3).unwrap();
        sweep.run(&[32 * 1024], 3, 2).unwrap();
        assert!(sweep.verify(32 * 1024).is_ok());
    }

    #[test]
    fn triad_verification_samples_match() {
        let mut sweep = MemorySweep::new(MemPattern::Triad, 3 * 1024 * 1024, 3.0, 4).unwrap();
        sweep.run(&[3 * 1024 * 1024], 2, 4).unwrap();
        assert!(sweep.verify(3 * 1024 * 1024).is_ok());
    }

    #[test]
    fn small_working_set_beats_dram_sized_working_set() {
        let _serial = crate::util::timing_test_guard();
        // Cache effect: 16 KiB lives in L1; 8x the LLC estimate cannot.
        let llc = llc_estimate_bytes();
        let big = 8 * llc;
        let mut sweep = MemorySweep::new(MemPattern::Read, big, 3.0, 5).unwrap();
        let result = sweep.run(&[16 * 1024, big], 5, 1).unwrap();
        let small_bw = result.points[0].gbytes_per_sec;
        let big_bw = result.points[1].gbytes_per_sec;
        assert!(
            small_bw > big_bw,
            "16 KiB {small_bw:.2} GB/s should beat {big} bytes {big_bw:.2} GB/s"
        );
    }

    #[test]
    fn sweep_shape_is_deterministic() {
        let sizes = working_set_sweep(16 * 1024, 1024 * 1024);
        assert_eq!(sizes.first(), Some(&(16 * 1024)));
        assert_eq!(sizes.last(), Some(&(1024 * 1024)));
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
    }
}
