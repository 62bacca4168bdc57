//! Benchmark registry, configuration resolution, and timed execution.
//!
//! A benchmark registers a [`BenchmarkDescriptor`] (name, level, parameter
//! schema, four preset parameter sets) and a factory producing an
//! [`Instance`]. The harness resolves the effective parameters, stages the
//! seeded input once, repeats the compute region for the requested number of
//! passes on a monotonic clock, runs the benchmark's verifier once on the
//! final pass output, and folds the samples into a [`ResultRecord`].

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ParamSet, ParamSpec, SizeClass};
use crate::report::{EnvironmentSnapshot, MetricSummary, ResultRecord, ScalingPoint};
use crate::stats::Stats;

/// Per-pass wall-clock measurements. `setup_seconds` covers data generation
/// and staging (the first pass carries the one-time generation cost),
/// `compute_seconds` covers only the kernel-equivalent region; verification
/// is never inside either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub setup_seconds: f64,
    pub compute_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyVerdict {
    Pass,
    Fail,
    Skipped,
}

/// Verifier output: the verdict plus a deterministic description of the
/// verification artifacts (checksums, error bounds). For a fixed
/// (benchmark, params, seed) the detail string is identical across runs and
/// worker counts.
#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub verdict: VerifyVerdict,
    pub detail: String,
}

impl VerifyOutcome {
    pub fn pass(detail: impl Into<String>) -> Self {
        VerifyOutcome {
            verdict: VerifyVerdict::Pass,
            detail: detail.into(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        VerifyOutcome {
            verdict: VerifyVerdict::Fail,
            detail: detail.into(),
        }
    }
}

/// Static description of a registered benchmark.
#[derive(Debug, Clone)]
pub struct BenchmarkDescriptor {
    pub name: String,
    /// 0 = microbenchmark, 1 = parallel primitive, 2 = application kernel.
    pub level: u8,
    pub dwarf: Option<String>,
    pub domain: Option<String>,
    /// Metric highlighted in listings and used as the plot fallback.
    pub primary_metric: String,
    pub params: Vec<ParamSpec>,
    /// Default parameters for size classes 1-4 (each class is roughly 4x the
    /// work of the previous one).
    pub presets: [ParamSet; 4],
}

impl BenchmarkDescriptor {
    fn validate(&self) -> Result<()> {
        let err = |message: &str| Error::InvalidDescriptor {
            benchmark: self.name.clone(),
            message: message.to_string(),
        };
        if self.name.is_empty() {
            return Err(err("empty name"));
        }
        if self.level > 2 {
            return Err(err("level must be 0, 1, or 2"));
        }
        let keys: Vec<&String> = self.params.iter().map(|p| &p.key).collect();
        for preset in &self.presets {
            for key in preset.keys() {
                if !keys.contains(&key) {
                    return Err(err(&format!("preset key `{key}` missing from schema")));
                }
            }
            for key in &keys {
                if !preset.contains_key(*key) {
                    return Err(err(&format!(
                        "parameter `{key}` has no value in some preset"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One prepared run of a benchmark: seeded input held in memory, a repeatable
/// compute region, and a verifier for the final output.
pub trait Instance: Send {
    /// Restores working state so the next `kernel` call sees identical input.
    fn stage(&mut self) {}

    /// The timed compute region.
    fn kernel(&mut self);

    /// Checks the output of the last `kernel` call against the benchmark's
    /// oracle. Runs once per benchmark run, after the final pass.
    fn verify(&mut self) -> VerifyOutcome;

    /// Derived metric samples for one pass that took `compute_seconds`.
    /// Names and order must not vary between passes.
    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)>;
}

pub trait Benchmark: Send + Sync {
    fn descriptor(&self) -> BenchmarkDescriptor;

    /// Generates seeded input and returns a runnable instance. `workers` is
    /// the parallelism width of the compute region.
    fn prepare(&self, params: &ParamSet, seed: u64, workers: usize) -> Result<Box<dyn Instance>>;
}

// ── Registry ─────────────────────────────────────────────────────────────

#[derive(Default)]
pub struct Registry {
    benchmarks: BTreeMap<String, Box<dyn Benchmark>>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn register(&mut self, benchmark: Box<dyn Benchmark>) -> Result<()> {
        let desc = benchmark.descriptor();
        desc.validate()?;
        if self.benchmarks.contains_key(&desc.name) {
            return Err(Error::DuplicateBenchmark(desc.name));
        }
        self.benchmarks.insert(desc.name.clone(), benchmark);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&dyn Benchmark> {
        self.benchmarks
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownBenchmark(name.to_string()))
    }

    /// Descriptors sorted by (level, name).
    pub fn list(&self) -> Vec<BenchmarkDescriptor> {
        let mut all: Vec<BenchmarkDescriptor> =
            self.benchmarks.values().map(|b| b.descriptor()).collect();
        all.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.name.cmp(&b.name)));
        all
    }

    pub fn len(&self) -> usize {
        self.benchmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.benchmarks.is_empty()
    }
}

// ── Run configuration ────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub benchmark: String,
    pub size_class: SizeClass,
    pub custom_params: ParamSet,
    pub passes: u32,
    pub seed: u64,
    pub workers: usize,
    pub concurrent_instances: usize,
    pub output_format: OutputFormat,
    pub output_path: Option<std::path::PathBuf>,
}

impl RunConfig {
    pub fn new(benchmark: &str) -> RunConfig {
        RunConfig {
            benchmark: benchmark.to_string(),
            size_class: SizeClass::Preset(1),
            custom_params: ParamSet::new(),
            passes: 5,
            seed: 42,
            workers: crate::parallel::hardware_workers(),
            concurrent_instances: 1,
            output_format: OutputFormat::Json,
            output_path: None,
        }
    }

    pub fn with_size(mut self, size_class: SizeClass) -> Self {
        self.size_class = size_class;
        self
    }

    pub fn with_passes(mut self, passes: u32) -> Self {
        self.passes = passes;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_param(mut self, key: &str, value: crate::params::ParamValue) -> Self {
        self.custom_params.insert(key.to_string(), value);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.passes < 1 {
            return Err(Error::invalid_param("passes", "must be >= 1"));
        }
        if self.workers < 1 {
            return Err(Error::invalid_param("workers", "must be >= 1"));
        }
        if self.concurrent_instances < 1 {
            return Err(Error::invalid_param("concurrent", "must be >= 1"));
        }
        Ok(())
    }
}

/// Merges preset parameters with user overrides (overrides win) and validates
/// the result against the descriptor's schema. `custom` starts from the
/// class-1 presets and requires at least one override.
pub fn resolve_config(config: &RunConfig, descriptor: &BenchmarkDescriptor) -> Result<ParamSet> {
    config.validate()?;
    let base = match config.size_class {
        SizeClass::Preset(n) => {
            if !(1..=4).contains(&n) {
                return Err(Error::invalid_param("size", "preset class must be 1-4"));
            }
            descriptor.presets[(n - 1) as usize].clone()
        }
        SizeClass::Custom => {
            if config.custom_params.is_empty() {
                return Err(Error::CustomRequiresParams);
            }
            descriptor.presets[0].clone()
        }
    };
    let mut effective = base;
    for (key, value) in &config.custom_params {
        let spec = descriptor
            .params
            .iter()
            .find(|p| &p.key == key)
            .ok_or_else(|| Error::UnknownParam {
                benchmark: descriptor.name.clone(),
                key: key.clone(),
            })?;
        spec.validate(value)?;
        effective.insert(key.clone(), value.clone());
    }
    // Presets themselves must satisfy the schema too.
    for spec in &descriptor.params {
        let value = effective
            .get(&spec.key)
            .ok_or_else(|| Error::invalid_param(&spec.key, "missing required parameter"))?;
        spec.validate(value)?;
    }
    Ok(effective)
}

// ── Execution ────────────────────────────────────────────────────────────

fn elapsed_secs(from: Instant) -> f64 {
    from.elapsed().as_secs_f64().max(1e-9)
}

fn fold_metrics(per_pass: &[Vec<(String, f64)>]) -> Result<BTreeMap<String, MetricSummary>> {
    let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for pass in per_pass {
        for (name, value) in pass {
            samples.entry(name.clone()).or_default().push(*value);
        }
    }
    let passes = per_pass.len();
    let mut out = BTreeMap::new();
    for (name, values) in samples {
        if values.len() != passes {
            return Err(Error::InvalidInput(format!(
                "metric `{name}` reported {} samples for {passes} passes",
                values.len()
            )));
        }
        let stats = Stats::from_samples(&values);
        out.insert(
            name,
            MetricSummary {
                samples: values,
                stats,
            },
        );
    }
    Ok(out)
}

/// Executes one benchmark run: setup, one untimed warmup, `passes` timed
/// passes, one verification, statistics.
pub fn run(registry: &Registry, config: &RunConfig) -> Result<ResultRecord> {
    let benchmark = registry.get(&config.benchmark)?;
    let descriptor = benchmark.descriptor();
    let effective = resolve_config(config, &descriptor)?;

    let generated_at = Instant::now();
    let mut instance = benchmark.prepare(&effective, config.seed, config.workers)?;
    let generation_seconds = elapsed_secs(generated_at);

    // Warmup: one untimed execution of the compute region.
    instance.stage();
    instance.kernel();

    let mut timings = Vec::with_capacity(config.passes as usize);
    let mut per_pass_metrics = Vec::with_capacity(config.passes as usize);
    for pass in 0..config.passes {
        let stage_at = Instant::now();
        instance.stage();
        let stage_seconds = stage_at.elapsed().as_secs_f64();
        let kernel_at = Instant::now();
        instance.kernel();
        let compute_seconds = elapsed_secs(kernel_at);
        let setup_seconds = if pass == 0 {
            generation_seconds + stage_seconds
        } else {
            stage_seconds
        };
        per_pass_metrics.push(instance.metrics(compute_seconds));
        timings.push(Timing {
            setup_seconds,
            compute_seconds,
        });
    }

    let outcome = instance.verify();
    let metrics = if outcome.verdict == VerifyVerdict::Pass {
        fold_metrics(&per_pass_metrics)?
    } else {
        // Failed runs never report derived performance metrics as valid.
        BTreeMap::new()
    };
    let compute_samples: Vec<f64> = timings.iter().map(|t| t.compute_seconds).collect();

    Ok(ResultRecord {
        schema_version: crate::report::SCHEMA_VERSION,
        benchmark: descriptor.name.clone(),
        effective_params: effective,
        seed: config.seed,
        passes: config.passes,
        workers: config.workers,
        concurrent_instances: 1,
        compute_stats: Stats::from_samples(&compute_samples),
        timings,
        metrics,
        metrics_valid: outcome.verdict == VerifyVerdict::Pass,
        primary_metric: descriptor.primary_metric.clone(),
        verified: outcome.verdict,
        verification_detail: outcome.detail,
        baseline_seconds: None,
        scaling: None,
        environment: EnvironmentSnapshot::capture(),
        timestamp: chrono::Utc::now(),
    })
}

/// Wall time of one concurrent launch of the given instances' kernels over a
/// pool of `workers` threads. Instances are staged (untimed) beforehand.
fn concurrent_launch(instances: &mut [Box<dyn Instance>], workers: usize) -> f64 {
    for inst in instances.iter_mut() {
        inst.stage();
    }
    let k = instances.len();
    let queue = AtomicUsize::new(0);
    // Hand each worker exclusive access to a rotating set of instances via a
    // work index; instances never run twice because the index is unique.
    let cells: Vec<std::sync::Mutex<&mut Box<dyn Instance>>> =
        instances.iter_mut().map(std::sync::Mutex::new).collect();
    let started = Instant::now();
    crate::parallel::join_workers(workers.min(k), |_lane| loop {
        let i = queue.fetch_add(1, Ordering::Relaxed);
        if i >= k {
            break;
        }
        cells[i].lock().expect("instance lock").kernel();
    });
    elapsed_secs(started)
}

/// Concurrent-instance throughput study: launches `k` isolated instances of
/// the benchmark's compute region simultaneously over the worker pool and
/// reports aggregate throughput plus speedup over sequential execution.
/// Instance kernels run single-threaded; `workers` bounds how many run at
/// once. Setup/staging time is excluded from the scaling metrics.
pub fn run_concurrent(registry: &Registry, config: &RunConfig) -> Result<ResultRecord> {
    let benchmark = registry.get(&config.benchmark)?;
    let descriptor = benchmark.descriptor();
    let effective = resolve_config(config, &descriptor)?;
    let k = config.concurrent_instances;

    let generated_at = Instant::now();
    let mut instances: Vec<Box<dyn Instance>> = (0..k)
        .map(|_| benchmark.prepare(&effective, config.seed, 1))
        .collect::<Result<_>>()?;
    let generation_seconds = elapsed_secs(generated_at);

    // Baseline: one instance, one worker (mean over passes, after warmup).
    concurrent_launch(&mut instances[..1], 1);
    let mut baseline_samples = Vec::with_capacity(config.passes as usize);
    for _ in 0..config.passes {
        baseline_samples.push(concurrent_launch(&mut instances[..1], 1));
    }
    let baseline = Stats::from_samples(&baseline_samples).mean;

    // Scaling table over powers of two up to k (always including k).
    let mut table_sizes = Vec::new();
    let mut j = 1;
    while j < k {
        table_sizes.push(j);
        j *= 2;
    }
    table_sizes.push(k);
    let mut scaling = Vec::new();
    let mut final_timings = Vec::new();
    let mut per_pass_metrics = Vec::new();
    for &j in &table_sizes {
        concurrent_launch(&mut instances[..j], config.workers); // warmup
        let mut samples = Vec::with_capacity(config.passes as usize);
        for pass in 0..config.passes {
            let stage_probe = Instant::now();
            let wall = concurrent_launch(&mut instances[..j], config.workers);
            samples.push(wall);
            if j == k {
                let total = stage_probe.elapsed().as_secs_f64();
                final_timings.push(Timing {
                    setup_seconds: if pass == 0 && scaling.is_empty() {
                        generation_seconds + (total - wall).max(0.0)
                    } else {
                        (total - wall).max(0.0)
                    },
                    compute_seconds: wall,
                });
                let speedup = if j == 1 {
                    1.0
                } else {
                    (j as f64 * baseline) / wall
                };
                per_pass_metrics.push(vec![
                    ("aggregate_instances_per_sec".to_string(), j as f64 / wall),
                    ("speedup".to_string(), speedup),
                ]);
            }
        }
        let mean = Stats::from_samples(&samples).mean;
        scaling.push(ScalingPoint {
            instances: j,
            mean_seconds: mean,
            instances_per_second: j as f64 / mean,
            speedup: if j == 1 {
                1.0
            } else {
                (j as f64 * baseline) / mean
            },
        });
    }

    let outcome = instances[0].verify();
    let metrics = if outcome.verdict == VerifyVerdict::Pass {
        fold_metrics(&per_pass_metrics)?
    } else {
        BTreeMap::new()
    };
    let compute_samples: Vec<f64> = final_timings.iter().map(|t| t.compute_seconds).collect();

    Ok(ResultRecord {
        schema_version: crate::report::SCHEMA_VERSION,
        benchmark: descriptor.name.clone(),
        effective_params: effective,
        seed: config.seed,
        passes: config.passes,
        workers: config.workers,
        concurrent_instances: k,
        compute_stats: Stats::from_samples(&compute_samples),
        timings: final_timings,
        metrics,
        metrics_valid: outcome.verdict == VerifyVerdict::Pass,
        primary_metric: "speedup".to_string(),
        verified: outcome.verdict,
        verification_detail: outcome.detail,
        baseline_seconds: Some(baseline),
        scaling: Some(scaling),
        environment: EnvironmentSnapshot::capture(),
        timestamp: chrono::Utc::now(),
    })
}
