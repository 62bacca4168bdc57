//! Result records and their JSON/CSV serialization.
//!
//! The JSON layout is versioned and documented in `docs/result-schema.md`.
//! The CSV layout is one row per pass plus a `summary` row whose cells are
//! the per-column means; the header is
//! `benchmark,pass,setup_s,compute_s,<metric columns>`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{OutputFormat, Timing, VerifyVerdict};
use crate::params::ParamSet;
use crate::stats::Stats;

pub const SCHEMA_VERSION: u32 = 1;

/// Per-pass samples of one derived metric plus their statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub samples: Vec<f64>,
    pub stats: Stats,
}

/// One point of the concurrent-instance scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub instances: usize,
    pub mean_seconds: f64,
    pub instances_per_second: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSnapshot {
    pub os: String,
    pub cpu_model: String,
    pub logical_cores: usize,
    pub memory_bytes: u64,
    pub suite_version: String,
}

impl EnvironmentSnapshot {
    pub fn capture() -> EnvironmentSnapshot {
        EnvironmentSnapshot {
            os: os_description(),
            cpu_model: cpu_model(),
            logical_cores: crate::parallel::hardware_workers(),
            memory_bytes: total_memory_bytes(),
            suite_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

fn os_description() -> String {
    if let Ok(text) = std::fs::read_to_string("/etc/os-release") {
        for line in text.lines() {
            if let Some(name) = line.strip_prefix("PRETTY_NAME=") {
                return name.trim_matches('"').to_string();
            }
        }
    }
    format!("{} {}", std::env::consts::OS, std::env::consts::ARCH)
}

fn cpu_model() -> String {
    if let Ok(text) = std::fs::read_to_string("/proc/cpuinfo") {
        for line in text.lines() {
            if let Some((key, value)) = line.split_once(':') {
                if key.trim() == "model name" {
                    return value.trim().to_string();
                }
            }
        }
    }
    "unknown".to_string()
}

fn total_memory_bytes() -> u64 {
    if let Ok(text) = std::fs::read_to_string("/proc/meminfo") {
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("MemTotal:") {
                if let Ok(kb) = rest.trim().trim_end_matches(" kB").trim().parse::<u64>() {
                    return kb * 1024;
                }
            }
        }
    }
    0
}

/// Complete result of one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub benchmark: String,
    pub effective_params: ParamSet,
    pub seed: u64,
    pub passes: u32,
    pub workers: usize,
    pub concurrent_instances: usize,
    pub timings: Vec<Timing>,
    /// Statistics over the per-pass compute times.
    pub compute_stats: Stats,
    /// Derived metrics (empty when verification failed; a failed record never
    /// reports performance numbers as valid).
    pub metrics: BTreeMap<String, MetricSummary>,
    pub metrics_valid: bool,
    pub primary_metric: String,
    pub verified: VerifyVerdict,
    pub verification_detail: String,
    /// Sequential single-instance baseline used for speedup (stored in the
    /// record so plots never depend on record ordering).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scaling: Option<Vec<ScalingPoint>>,
    pub environment: EnvironmentSnapshot,
    pub timestamp: DateTime<Utc>,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<ResultRecord> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Metric columns in CSV order (sorted by name).
    fn metric_names(&self) -> Vec<&String> {
        self.metrics.keys().collect()
    }

    pub fn to_csv(&self) -> String {
        let names = self.metric_names();
        let mut out = String::from("benchmark,pass,setup_s,compute_s");
        for name in &names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (pass, timing) in self.timings.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}",
                self.benchmark, pass, timing.setup_seconds, timing.compute_seconds
            ));
            for name in &names {
                out.push_str(&format!(",{}", self.metrics[*name].samples[pass]));
            }
            out.push('\n');
        }
        // Summary row: per-column means.
        let n = self.timings.len() as f64;
        let setup_mean: f64 = self.timings.iter().map(|t| t.setup_seconds).sum::<f64>() / n;
        let compute_mean: f64 = self.timings.iter().map(|t| t.compute_seconds).sum::<f64>() / n;
        out.push_str(&format!(
            "{},summary,{},{}",
            self.benchmark, setup_mean, compute_mean
        ));
        for name in &names {
            out.push_str(&format!(",{}", self.metrics[*name].stats.mean));
        }
        out.push('\n');
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

/// Writes a record to `path` in the requested format.
pub fn emit(record: &ResultRecord, format: OutputFormat, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(record.render(format).as_bytes())?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn sample_record(passes: usize) -> ResultRecord {
        let samples: Vec<f64> = (0..passes).map(|i| 10.0 + i as f64).collect();
        let mut metrics = BTreeMap::new();
        metrics.insert(
            "gflops".to_string(),
            MetricSummary {
                stats: Stats::from_samples(&samples),
                samples,
            },
        );
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            benchmark: "gemm".to_string(),
            effective_params: crate::params::param_set(&[("n", 256.into())]),
            seed: 42,
            passes: passes as u32,
            workers: 2,
            concurrent_instances: 1,
            timings: (0..passes)
                .map(|i| Timing {
                    setup_seconds: if i == 0 { 0.5 } else { 0.0 },
                    compute_seconds: 0.25 + i as f64 * 0.01,
                })
                .collect(),
            compute_stats: Stats::from_samples(
                &(0..passes)
                    .map(|i| 0.25 + i as f64 * 0.01)
                    .collect::<Vec<_>>(),
            ),
            metrics,
            metrics_valid: true,
            primary_metric: "gflops".to_string(),
            verified: VerifyVerdict::Pass,
            verification_detail: "oracle match".to_string(),
            baseline_seconds: None,
            scaling: None,
            environment: EnvironmentSnapshot::capture(),
            timestamp: Utc::now(),
        }
    }

    #[test]
    fn json_round_trip_is_identity() {
        let record = sample_record(3);
        let parsed = ResultRecord::from_json(&record.to_json()).unwrap();
        assert_eq!(record, parsed);
    }

    #[test]
    fn csv_has_pass_rows_plus_summary() {
        let record = sample_record(2);
        let csv = record.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4); // header + 2 passes + summary
        assert_eq!(lines[0], "benchmark,pass,setup_s,compute_s,gflops");
        assert!(lines[3].starts_with("gemm,summary,"));
    }

    #[test]
    fn csv_summary_matches_recomputed_stats() {
        let record = sample_record(4);
        let csv = record.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        let metric_col = 4;
        let pass_vals: Vec<f64> = lines[1..1 + 4]
            .iter()
            .map(|l| l.split(',').nth(metric_col).unwrap().parse().unwrap())
            .collect();
        let summary: f64 = lines[5]
            .split(',')
            .nth(metric_col)
            .unwrap()
            .parse()
            .unwrap();
        let mean = pass_vals.iter().sum::<f64>() / pass_vals.len() as f64;
        assert!((summary - mean).abs() < 1e-9);
    }

    #[test]
    fn environment_snapshot_is_populated() {
        let env = EnvironmentSnapshot::capture();
        assert!(!env.os.is_empty());
        assert!(!env.cpu_model.is_empty());
        assert!(env.logical_cores >= 1);
        assert!(!env.suite_version.is_empty());
    }

    #[test]
    fn emit_refuses_unwritable_path() {
        let record = sample_record(1);
        let err = emit(
            &record,
            OutputFormat::Json,
            Path::new("/nonexistent-dir/out.json"),
        );
        assert!(matches!(err, Err(Error::Io(_))));
    }

    #[test]
    fn emit_then_parse_reproduces_record() {
        let record = sample_record(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit(&record, OutputFormat::Json, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(ResultRecord::from_json(&text).unwrap(), record);
    }
}
