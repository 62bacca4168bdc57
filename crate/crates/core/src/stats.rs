//! Sample statistics attached to every recorded metric.

use serde::{Deserialize, Serialize};

/// Summary of a sample list. `stddev` uses the sample (n-1) denominator and
/// is zero for a single observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Two-pass mean/stddev over a non-empty sample list.
    pub fn from_samples(samples: &[f64]) -> Stats {
        assert!(!samples.is_empty(), "stats require at least one sample");
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            let ss: f64 = samples.iter().map(|&x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Stats {
            n,
            mean,
            stddev,
            min,
            max,
        }
    }
}
