//! Peak floating-point throughput: unrolled multiply-add chains with
//! independent accumulators on every worker.
//!
//! Each chain iterates `x <- x*a + b` with `a` just under 1 and `b` its
//! fixed-point complement, so values stay near 1.0 and never overflow. Every
//! iteration counts as 2 flops per accumulator (one multiply, one add —
//! fused or not). On x86-64 with FMA the chains run as eight independent
//! 256-bit register chains (enough in flight to saturate both FMA ports);
//! elsewhere a scalar fallback keeps the same contract. Half precision is
//! storage-emulated: values round through `f16` every step while arithmetic
//! runs in f32, for architectures without native half support.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use crate::error::Result;
use crate::parallel::join_workers;

/// Scalar-fallback accumulator count (the vector paths use more lanes; see
/// `FlopsOutcome::accumulators_per_lane`).
pub const SCALAR_ACCUMULATORS: usize = 16;

const MUL: f64 = 0.999_999;
const ADD: f64 = 0.000_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F16,
    F32,
    F64,
}

impl Precision {
    pub fn parse(s: &str) -> Result<Precision> {
        match s {
            "f16" => Ok(Precision::F16),
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(crate::error::Error::invalid_param(
                "precision",
                format!("`{other}` is not f16/f32/f64"),
            )),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Precision::F16 => "f16",
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlopsOutcome {
    pub gflops: f64,
    pub precision: Precision,
    /// Independent accumulator chains per worker lane.
    pub accumulators_per_lane: usize,
    /// Total multiply-adds * 2, across all lanes.
    pub total_flops: f64,
    /// True when the half-precision path went through software conversion.
    pub emulated: bool,
    /// All accumulators finished finite and nonzero.
    pub accumulators_ok: bool,
    pub checksum: u64,
}

fn seed_value(lane: usize, index: usize, spread: f64) -> f64 {
    1.0 + (lane * 64 + index) as f64 * spread
}

#[cfg(target_arch = "x86_64")]
mod fma_chains {
    use std::arch::x86_64::*;

    pub const F32_LANES: usize = 64; // 8 chains x 8 lanes
    pub const F64_LANES: usize = 32; // 8 chains x 4 lanes

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn chain_f32(iters: u64, seeds: &[f32; F32_LANES]) -> [f32; F32_LANES] {
        unsafe {
            let a = _mm256_set1_ps(super::MUL as f32);
            let b = _mm256_set1_ps(super::ADD as f32);
            let mut acc = [_mm256_setzero_ps(); 8];
            for (k, chunk) in seeds.chunks_exact(8).enumerate() {
                acc[k] = _mm256_loadu_ps(chunk.as_ptr());
            }
            for _ in 0..iters {
                for v in acc.iter_mut() {
                    *v = _mm256_fmadd_ps(*v, a, b);
                }
            }
            let mut out = [0f32; F32_LANES];
            for (k, v) in acc.iter().enumerate() {
                _mm256_storeu_ps(out[k * 8..].as_mut_ptr(), *v);
            }
            out
        }
    }

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn chain_f64(iters: u64, seeds: &[f64; F64_LANES]) -> [f64; F64_LANES] {
        unsafe {
            let a = _mm256_set1_pd(super::MUL);
            let b = _mm256_set1_pd(super::ADD);
            let mut acc = [_mm256_setzero_pd(); 8];
            for (k, chunk) in seeds.chunks_exact(4).enumerate() {
                acc[k] = _mm256_loadu_pd(chunk.as_ptr());
            }
            for _ in 0..iters {
                for v in acc.iter_mut() {
                    *v = _mm256_fmadd_pd(*v, a, b);
                }
            }
            let mut out = [0f64; F64_LANES];
            for (k, v) in acc.iter().enumerate() {
                _mm256_storeu_pd(out[k * 4..].as_mut_ptr(), *v);
            }
            out
        }
    }
}

fn chain_f32_generic(iters: u64, lane: usize) -> Vec<f64> {
    let (a, b) = (MUL as f32, ADD as f32);
    let mut acc = [0f32; SCALAR_ACCUMULATORS];
    for (i, v) in acc.iter_mut().enumerate() {
        *v = seed_value(lane, i, 1.0e-6) as f32;
    }
    for _ in 0..iters {
        for v in acc.iter_mut() {
            *v = *v * a + b;
        }
    }
    acc.iter().map(|&v| v as f64).collect()
}

fn chain_f64_generic(iters: u64, lane: usize) -> Vec<f64> {
    let (a, b) = (MUL, ADD);
    let mut acc = [0f64; SCALAR_ACCUMULATORS];
    for (i, v) in acc.iter_mut().enumerate() {
        *v = seed_value(lane, i, 1.0e-6);
    }
    for _ in 0..iters {
        for v in acc.iter_mut() {
            *v = *v * a + b;
        }
    }
    acc.to_vec()
}

/// Every step stores back through f16 (round-to-nearest-even), arithmetic in
/// f32.
fn chain_f16_emulated(iters: u64, lane: usize) -> Vec<f64> {
    use half::f16;
    let a = f16::from_f32(MUL as f32);
    let b = f16::from_f32(ADD as f32);
    let mut acc = [f16::from_f32(0.0); SCALAR_ACCUMULATORS];
    for (i, v) in acc.iter_mut().enumerate() {
        *v = f16::from_f32(seed_value(lane, i, 1.0e-3) as f32);
    }
    for _ in 0..iters {
        for v in acc.iter_mut() {
            *v = f16::from_f32(v.to_f32() * a.to_f32() + b.to_f32());
        }
    }
    acc.iter().map(|v| v.to_f32() as f64).collect()
}

/// Chain count actually used per lane for this precision on this machine.
pub fn accumulators_per_lane(precision: Precision) -> usize {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("fma") && std::arch::is_x86_feature_detected!("avx2") {
        return match precision {
            Precision::F32 => fma_chains::F32_LANES,
            Precision::F64 => fma_chains::F64_LANES,
            Precision::F16 => SCALAR_ACCUMULATORS,
        };
    }
    let _ = precision;
    SCALAR_ACCUMULATORS
}

fn run_lane(precision: Precision, iters: u64, lane: usize) -> Vec<f64> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("fma") && std::arch::is_x86_feature_detected!("avx2") {
        match precision {
            Precision::F32 => {
                let mut seeds = [0f32; fma_chains::F32_LANES];
                for (i, v) in seeds.iter_mut().enumerate() {
                    *v = seed_value(lane, i, 1.0e-6) as f32;
                }
                return unsafe { fma_chains::chain_f32(iters, &seeds) }
                    .iter()
                    .map(|&v| v as f64)
                    .collect();
            }
            Precision::F64 => {
                let mut seeds = [0f64; fma_chains::F64_LANES];
                for (i, v) in seeds.iter_mut().enumerate() {
                    *v = seed_value(lane, i, 1.0e-6);
                }
                return unsafe { fma_chains::chain_f64(iters, &seeds) }.to_vec();
            }
            Precision::F16 => {}
        }
    }
    match precision {
        Precision::F32 => chain_f32_generic(iters, lane),
        Precision::F64 => chain_f64_generic(iters, lane),
        Precision::F16 => chain_f16_emulated(iters, lane),
    }
}

/// Runs the chains on `workers` lanes; GFLOPS counts 2 flops per iteration
/// per accumulator across all lanes.
pub fn max_flops(precision: Precision, iters_per_accumulator: u64, workers: usize) -> FlopsOutcome {
    let lanes = accumulators_per_lane(precision);
    let all_ok = AtomicU64::new(1);
    let checksum = AtomicU64::new(0);
    let started = Instant::now();
    join_workers(workers, |lane| {
        let acc = run_lane(precision, iters_per_accumulator, lane);
        if !acc.iter().all(|v| v.is_finite() && *v != 0.0) {
            all_ok.store(0, Ordering::Relaxed);
        }
        let mut hasher = crate::util::Fnv1a::new();
        hasher.update_f64s(&acc);
        checksum.fetch_xor(hasher.finish(), Ordering::Relaxed);
    });
    let seconds = started.elapsed().as_secs_f64().max(1e-9);
    let total_flops =
        2.0 * lanes as f64 * iters_per_accumulator as f64 * workers as f64;
    FlopsOutcome {
        gflops: total_flops / seconds / 1e9,
        precision,
        accumulators_per_lane: lanes,
        total_flops,
        emulated: precision == Precision::F16,
        accumulators_ok: all_ok.load(Ordering::Relaxed) == 1,
        checksum: checksum.load(Ordering::Relaxed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_throughput_is_positive_and_finite() {
        let out = max_flops(Precision::F32, 1 << 18, 1);
        assert!(out.gflops.is_finite() && out.gflops > 0.0);
        assert!(out.accumulators_ok);
        assert!(out.accumulators_per_lane >= 8);
    }

    #[test]
    fn f64_is_not_meaningfully_faster_than_f32() {
        let _serial = crate::util::timing_test_guard();
        // Back-to-back pairs hit near-identical machine conditions; the
        // median ratio shrugs off scheduler/steal-time bursts.
        max_flops(Precision::F32, 1 << 18, 1);
        max_flops(Precision::F64, 1 << 18, 1);
        let mut ratios: Vec<f64> = (0..5)
            .map(|_| {
                let f32_gflops = max_flops(Precision::F32, 1 << 22, 1).gflops;
                let f64_gflops = max_flops(Precision::F64, 1 << 22, 1).gflops;
                f64_gflops / f32_gflops
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        let median = ratios[ratios.len() / 2];
        assert!(
            median <= 1.1,
            "median f64/f32 throughput ratio {median:.3} (samples {ratios:?})"
        );
    }

    #[test]
    fn half_precision_emulation_stays_finite() {
        let out = max_flops(Precision::F16, 1 << 12, 1);
        assert!(out.accumulators_ok);
        assert!(out.emulated);
    }

    #[test]
    fn more_workers_do_not_lose_throughput() {
        let _serial = crate::util::timing_test_guard();
        let hw = crate::parallel::hardware_workers();
        let single = max_flops(Precision::F32, 1 << 20, 1);
        let multi = max_flops(Precision::F32, 1 << 20, hw);
        if hw > 1 {
            assert!(
                multi.gflops >= single.gflops,
                "multi {:.2} < single {:.2}",
                multi.gflops,
                single.gflops
            );
        } else {
            // Degenerate on a single-core host: same configuration twice.
            assert!(multi.gflops > 0.0 && single.gflops > 0.0);
        }
    }
}
