//! Registry, configuration-resolution, and execution contracts.

use std::sync::Mutex;

use heterobench_core::error::Error;
use heterobench_core::harness::{
    resolve_config, run, run_concurrent, Benchmark, BenchmarkDescriptor, Instance, Registry,
    RunConfig, VerifyOutcome, VerifyVerdict,
};
use heterobench_core::params::{param_set, ParamSet, ParamSpec, ParamValue, SizeClass};
use heterobench_core::suite::standard_registry;

static TIMING_GATE: Mutex<()> = Mutex::new(());

/// Minimal controllable benchmark for harness-behavior tests.
struct TestBenchmark {
    verdict: VerifyVerdict,
}

struct TestInstance {
    verdict: VerifyVerdict,
    spins: u64,
    acc: u64,
}

impl Benchmark for TestBenchmark {
    fn descriptor(&self) -> BenchmarkDescriptor {
        BenchmarkDescriptor {
            name: "testbench".to_string(),
            level: 0,
            dwarf: None,
            domain: None,
            primary_metric: "ops_per_sec".to_string(),
            params: vec![ParamSpec::int("spins", 1, 1 << 40, "busy-work amount")],
            presets: [1, 2, 3, 4].map(|class| param_set(&[("spins", (10_000i64 * class).into())])),
        }
    }

    fn prepare(
        &self,
        params: &ParamSet,
        _seed: u64,
        _workers: usize,
    ) -> Result<Box<dyn Instance>, Error> {
        use heterobench_core::params::ParamSetExt;
        Ok(Box::new(TestInstance {
            verdict: self.verdict,
            spins: params.u64("spins")?,
            acc: 0,
        }))
    }
}

impl Instance for TestInstance {
    fn kernel(&mut self) {
        let mut h = 0u64;
        for i in 0..self.spins {
            h = h.wrapping_mul(6364136223846793005).wrapping_add(i);
        }
        self.acc = std::hint::black_box(h);
    }

    fn verify(&mut self) -> VerifyOutcome {
        VerifyOutcome {
            verdict: self.verdict,
            detail: format!("acc {:016x}", self.acc),
        }
    }

    fn metrics(&self, compute_seconds: f64) -> Vec<(String, f64)> {
        vec![(
            "ops_per_sec".to_string(),
            self.spins as f64 / compute_seconds,
        )]
    }
}

fn test_registry(verdict: VerifyVerdict) -> Registry {
    let mut registry = Registry::new();
    registry
        .register(Box::new(TestBenchmark { verdict }))
        .unwrap();
    registry
}

#[test]
fn registering_the_same_name_twice_is_an_error() {
    let mut registry = standard_registry().unwrap();
    let err = registry
        .register(Box::new(heterobench_core::level1::bench::GupsBenchmark))
        .unwrap_err();
    assert!(matches!(err, Error::DuplicateBenchmark(name) if name == "gups"));
}

#[test]
fn empty_registry_lists_nothing() {
    let registry = Registry::new();
    assert!(registry.list().is_empty());
    assert!(registry.is_empty());
}

#[test]
fn full_roster_counts_twenty_five() {
    let registry = standard_registry().unwrap();
    assert_eq!(registry.list().len(), 25);
}

#[test]
fn preset_passthrough_resolves_class_defaults() {
    let registry = standard_registry().unwrap();
    let descriptor = registry.get("gemm").unwrap().descriptor();
    let config = RunConfig::new("gemm");
    let params = resolve_config(&config, &descriptor).unwrap();
    assert_eq!(params["n"], ParamValue::Int(256));
    assert_eq!(params["precision"], ParamValue::Text("f32".to_string()));
}

#[test]
fn overrides_win_and_other_defaults_remain() {
    let registry = standard_registry().unwrap();
    let descriptor = registry.get("gemm").unwrap().descriptor();
    let config = RunConfig::new("gemm").with_param("n", ParamValue::Int(384));
    let params = resolve_config(&config, &descriptor).unwrap();
    assert_eq!(params["n"], ParamValue::Int(384));
    assert_eq!(params["ta"], ParamValue::Int(0));
    assert_eq!(params["alpha"], ParamValue::Float(1.0));
}

#[test]
fn custom_size_without_overrides_is_an_error() {
    let registry = standard_registry().unwrap();
    let descriptor = registry.get("sort").unwrap().descriptor();
    let config = RunConfig::new("sort").with_size(SizeClass::Custom);
    assert!(matches!(
        resolve_config(&config, &descriptor),
        Err(Error::CustomRequiresParams)
    ));
}

#[test]
fn unknown_parameter_key_is_an_error() {
    let registry = standard_registry().unwrap();
    let descriptor = registry.get("sort").unwrap().descriptor();
    let config = RunConfig::new("sort").with_param("bogus", ParamValue::Int(1));
    assert!(matches!(
        resolve_config(&config, &descriptor),
        Err(Error::UnknownParam { key, .. }) if key == "bogus"
    ));
}

#[test]
fn out_of_range_parameter_is_an_error() {
    let registry = standard_registry().unwrap();
    let descriptor = registry.get("gemm").unwrap().descriptor();
    let config = RunConfig::new("gemm").with_param("n", ParamValue::Int(0));
    assert!(matches!(
        resolve_config(&config, &descriptor),
        Err(Error::InvalidParam { .. })
    ));
}

#[test]
fn single_pass_yields_single_sample_with_zero_stddev() {
    let registry = test_registry(VerifyVerdict::Pass);
    let config = RunConfig::new("testbench").with_passes(1);
    let record = run(&registry, &config).unwrap();
    assert_eq!(record.timings.len(), 1);
    let stats = &record.metrics["ops_per_sec"].stats;
    assert_eq!(stats.n, 1);
    assert_eq!(stats.stddev, 0.0);
}

#[test]
fn five_passes_yield_five_samples_and_one_verdict() {
    let registry = test_registry(VerifyVerdict::Pass);
    let config = RunConfig::new("testbench").with_passes(5);
    let record = run(&registry, &config).unwrap();
    assert_eq!(record.passes, 5);
    assert_eq!(record.timings.len(), 5);
    assert_eq!(record.metrics["ops_per_sec"].samples.len(), 5);
    assert_eq!(record.metrics["ops_per_sec"].stats.n, 5);
    assert_eq!(record.verified, VerifyVerdict::Pass);
    assert!(record.metrics_valid);
    // one-time generation cost lands on the first pass
    assert!(record.timings[0].setup_seconds >= record.timings[1].setup_seconds);
    assert!(record.timings.iter().all(|t| t.compute_seconds > 0.0));
}

#[test]
fn failed_verification_reports_no_valid_metrics() {
    let registry = test_registry(VerifyVerdict::Fail);
    let config = RunConfig::new("testbench").with_passes(2);
    let record = run(&registry, &config).unwrap();
    assert_eq!(record.verified, VerifyVerdict::Fail);
    assert!(!record.metrics_valid);
    assert!(record.metrics.is_empty());
    assert_eq!(record.timings.len(), 2);
}

#[test]
fn oversize_parameters_are_rejected_with_resource_error() {
    let registry = standard_registry().unwrap();
    let config = RunConfig::new("gups")
        .with_size(SizeClass::Custom)
        .with_param("table_log2", ParamValue::Int(34));
    assert!(matches!(
        run(&registry, &config),
        Err(Error::ResourceExhausted { .. })
    ));
}

#[test]
fn concurrent_with_one_instance_has_unit_speedup() {
    let _serial = TIMING_GATE.lock().unwrap();
    let registry = test_registry(VerifyVerdict::Pass);
    let mut config = RunConfig::new("testbench").with_passes(2);
    config.concurrent_instances = 1;
    let record = run_concurrent(&registry, &config).unwrap();
    assert_eq!(record.concurrent_instances, 1);
    let speedup = &record.metrics["speedup"];
    assert!(speedup.samples.iter().all(|&s| s == 1.0));
    assert!(record.baseline_seconds.is_some());
    let scaling = record.scaling.as_ref().unwrap();
    assert_eq!(scaling.len(), 1);
    assert_eq!(scaling[0].instances, 1);
    assert_eq!(scaling[0].speedup, 1.0);
}

#[test]
fn concurrent_instances_on_one_worker_cannot_speed_up() {
    let _serial = TIMING_GATE.lock().unwrap();
    let registry = test_registry(VerifyVerdict::Pass);
    let mut config = RunConfig::new("testbench")
        .with_passes(3)
        .with_workers(1)
        .with_param("spins", ParamValue::Int(2_000_000));
    config.concurrent_instances = 3;
    let record = run_concurrent(&registry, &config).unwrap();
    let speedup = record.metrics["speedup"].stats.mean;
    assert!(
        speedup <= 1.35,
        "speedup {speedup} with a single worker should stay near 1"
    );
    let scaling = record.scaling.as_ref().unwrap();
    assert_eq!(
        scaling.iter().map(|p| p.instances).collect::<Vec<_>>(),
        vec![1, 2, 3]
    );
}

#[test]
fn identical_configs_produce_identical_verification_artifacts() {
    let registry = standard_registry().unwrap();
    let config = RunConfig::new("bfs")
        .with_passes(1)
        .with_size(SizeClass::Custom)
        .with_param("n", ParamValue::Int(2000))
        .with_param("degree", ParamValue::Int(4));
    let a = run(&registry, &config).unwrap();
    let b = run(&registry, &config).unwrap();
    assert_eq!(a.verification_detail, b.verification_detail);
    assert_eq!(a.effective_params, b.effective_params);
    assert_eq!(a.verified, b.verified);
    // different worker counts must not change the artifacts either
    let c = run(&registry, &config.clone().with_workers(3)).unwrap();
    assert_eq!(a.verification_detail, c.verification_detail);
}
