//! Harness adapters for the level-0 microbenchmarks.

use crate::error::Result;
use crate::harness::{Benchmark, BenchmarkDescriptor, Instance, VerifyOutcome};
use crate::params::{param_set, ParamSet, ParamSetExt, ParamSpec};
use crate::util::size_label;

use super::buscopy::{copy_sweep_sizes, CopyBandwidth, CopyDirection};
use super::maxflops::{max_flops, FlopsOutcome, Precision};
use super::memsweep::{working_set_sweep, MemPattern, MemorySweep};
use super::BandwidthSweepResult;

fn sweep_metrics(sweep: &BandwidthSweepResult, compute_seconds: f64) -> Vec<(String, f64)> {
    let mut metrics = vec![
        ("gbytes_per_sec".to_string(), sweep.peak()),
        ("sweep_seconds".to_string(), compute_seconds),
    ];
    for point in &sweep.points {
        metrics.push((
            format!("gbps_{}", size_label(point.bytes)),
            point.gbytes_per_sec,
        ));
    }
    metrics
}

// ── BusSpeed pair ────────────────────────────────────────────────────────

/// Buffer-to-buffer transfer curve; `download` copies a->b, `readback` the
/// reverse.
pub struct BusSpeedBenchmark {
    pub direction: CopyDirection,
}

impl Benchmark for BusSpeedBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        let name = match self.direction {
            CopyDirection::AToB => "busspeed-download",
            CopyDirection::BToA => "busspeed-readback",
        };
        BenchmarkDescriptor {
            name: name.to_string(),
            level: 0,
            dwarf: None,
            domain: None,
            primary_metric: "gbytes_per_sec".to_string(),
            params: vec![
                ParamSpec::int(
                    "max_kb",
                    1,
                    1 << 24,
                    "top of the transfer-size sweep in KiB",
                ),
                ParamSpec::int("reps", 1, 10_000, "timed repetitions per sweep point"),
            ],
            presets: [500, 2000, 8000, 32000]
                .map(|kb: i64| param_set(&[("max_kb", kb.into()), ("reps", 16.into())])),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, _workers: usize) -> Result<Box<dyn Instance>> {
        let max_bytes = params.usize("max_kb")? * 1024;
        let sizes = copy_sweep_sizes(max_bytes);
        Ok(Box::new(BusSpeedInstance {
            copier: CopyBandwidth::new(self.direction, max_bytes, seed)?,
            sizes,
            reps: params.usize("reps")?,
            max_bytes,
            sweep: BandwidthSweepResult::default(),
        }))
    }
}

struct BusSpeedInstance {
    copier: CopyBandwidth,
    sizes: Vec<usize>,
    reps: usize,
    max_bytes: usize,
    sweep: BandwidthSweepResult,
}

impl Instance for BusSpeedInstance {
    fn kernel(&mut self) {
        self.sweep = self
            .copier
            .run(&self.sizes, self.reps)
            .expect("sizes validated");
    }

    fn verify(&mut self) -> VerifyOutcome {
        if self.copier.buffers_match(self.max_bytes) {
            VerifyOutcome::pass(format!(
                "buffers byte-equal after final repetition; source fnv64 {:016x}; {} sweep points",
                self.copier.source_checksum(self.max_bytes),
                self.sweep.points.len()
            ))
        } else {
            VerifyOutcome::fail("destination differs from source".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        sweep_metrics(&self.sweep, compute_seconds)
    }
}

// ── DeviceMem ────────────────────────────────────────────────────────────

pub struct DeviceMemBenchmark;

impl Benchmark for DeviceMemBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "devicemem".to_string(),
            level: 0,
            dwarf: None,
            domain: None,
            primary_metric: "gbytes_per_sec".to_string(),
            params: vec![
                ParamSpec::choice("pattern", &["read", "write", "triad"], "access pattern"),
                ParamSpec::int(
                    "min_kb",
                    1,
                    1 << 20,
                    "bottom of the working-set sweep in KiB",
                ),
                ParamSpec::int("max_mb", 1, 1 << 14, "top of the working-set sweep in MiB"),
                ParamSpec::int("reps", 1, 1000, "timed repetitions per working set"),
                ParamSpec::float("scalar", -1e6, 1e6, "triad scale factor"),
            ],
            presets: [256, 512, 1024, 2048].map(|mb: i64| {
                param_set(&[
                    ("pattern", "triad".into()),
                    ("min_kb", 16.into()),
                    ("max_mb", mb.into()),
                    ("reps", 3.into()),
                    ("scalar", 3.0.into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        let pattern = MemPattern::parse(params.str("pattern")?)?;
        let max_bytes = params.usize("max_mb")? * 1024 * 1024;
        let min_bytes = params.usize("min_kb")? * 1024;
        if min_bytes > max_bytes {
            return Err(crate::error::Error::invalid_param(
                "min_kb",
                "sweep bottom exceeds sweep top",
            ));
        }
        Ok(Box::new(DeviceMemInstance {
            sweep: MemorySweep::new(pattern, max_bytes, params.f64("scalar")?, seed)?,
            working_sets: working_set_sweep(min_bytes, max_bytes),
            reps: params.usize("reps")?,
            workers,
            max_bytes,
            result: BandwidthSweepResult::default(),
        }))
    }
}

struct DeviceMemInstance {
    sweep: MemorySweep,
    working_sets: Vec<usize>,
    reps: usize,
    workers: usize,
    max_bytes: usize,
    result: BandwidthSweepResult,
}

impl Instance for DeviceMemInstance {
    fn kernel(&mut self) {
        self.result = self
            .sweep
            .run(&self.working_sets, self.reps, self.workers)
            .expect("sweep validated");
    }

    fn verify(&mut self) -> VerifyOutcome {
        match self.sweep.verify(self.max_bytes) {
            Ok(detail) => VerifyOutcome::pass(detail),
            Err(detail) => VerifyOutcome::fail(detail),
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        sweep_metrics(&self.result, compute_seconds)
    }
}

// ── MaxFlops ─────────────────────────────────────────────────────────────

pub struct MaxFlopsBenchmark;

impl Benchmark for MaxFlopsBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "maxflops".to_string(),
            level: 0,
            dwarf: None,
            domain: None,
            primary_metric: "gflops".to_string(),
            params: vec![
                ParamSpec::choice("precision", &["f16", "f32", "f64"], "arithmetic precision"),
                ParamSpec::int(
                    "iters",
                    1,
                    1 << 40,
                    "multiply-add iterations per accumulator per worker",
                ),
            ],
            presets: [1, 2, 3, 4].map(|class| {
                param_set(&[
                    ("precision", "f32".into()),
                    ("iters", (1i64 << (22 + 2 * class)).into()),
                ])
            }),
        }
    }

    fn prepare(&self, params: &ParamSet, _seed: u64, workers: usize) -> Result<Box<dyn Instance>> {
        Ok(Box::new(MaxFlopsInstance {
            precision: Precision::parse(params.str("precision")?)?,
            iters: params.u64("iters")?,
            workers,
            outcome: None,
        }))
    }
}

struct MaxFlopsInstance {
    precision: Precision,
    iters: u64,
    workers: usize,
    outcome: Option<FlopsOutcome>,
}

impl Instance for MaxFlopsInstance {
    fn kernel(&mut self) {
        self.outcome = Some(max_flops(self.precision, self.iters, self.workers));
    }

    fn verify(&mut self) -> VerifyOutcome {
        let outcome = self.outcome.as_ref().expect("kernel ran");
        if outcome.accumulators_ok {
            let mode = if outcome.emulated {
                "; f16 storage software-emulated (round-to-nearest-even, f32 arithmetic)"
            } else {
                ""
            };
            VerifyOutcome::pass(format!(
                "all accumulators finite and nonzero; fnv64 {:016x}{mode}",
                outcome.checksum
            ))
        } else {
            VerifyOutcome::fail("accumulator went non-finite or zero".to_string())
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        let outcome = self.outcome.as_ref().expect("kernel ran");
        // gflops re-derived from this pass's wall time so per-pass samples vary
        let mut metrics = vec![(
            "gflops".to_string(),
            outcome.total_flops / compute_seconds / 1e9,
        )];
        if outcome.emulated {
            metrics.push(("f16_emulated".to_string(), 1.0));
        }
        metrics
    }
}
