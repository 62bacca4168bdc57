//! Level 0: microbenchmarks for low-level hardware characteristics.

pub mod bench;
pub mod buscopy;
pub mod maxflops;
pub mod memsweep;

pub use buscopy::{copy_bandwidth, copy_sweep_sizes, CopyBandwidth, CopyDirection};
pub use maxflops::{max_flops, FlopsOutcome, Precision};
pub use memsweep::{working_set_sweep, MemPattern, MemorySweep};

/// One point of a bandwidth sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthPoint {
    pub bytes: usize,
    pub gbytes_per_sec: f64,
}

/// Bandwidth as a function of transfer size or working-set size.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BandwidthSweepResult {
    pub points: Vec<BandwidthPoint>,
}

impl BandwidthSweepResult {
    pub fn peak(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.gbytes_per_sec)
            .fold(0.0, f64::max)
    }
}

pub(crate) fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}
