//! Deterministic SVG charts for scaling studies.
//!
//! Given records of one benchmark that vary exactly one numeric parameter,
//! draws metric-vs-parameter (speedup when present, otherwise the record's
//! primary metric). Output bytes are a pure function of the input records.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::report::ResultRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 25.0;
const MARGIN_T: f64 = 45.0;
const MARGIN_B: f64 = 55.0;

struct Point {
    x: f64,
    y: f64,
}

/// Finds the single parameter whose value differs across records.
fn varied_parameter(records: &[ResultRecord]) -> Result<String> {
    let first = &records[0];
    let mut varied: Vec<String> = Vec::new();
    for key in first.effective_params.keys() {
        let v0 = &first.effective_params[key];
        if records
            .iter()
            .any(|r| r.effective_params.get(key) != Some(v0))
        {
            varied.push(key.clone());
        }
    }
    for r in records {
        for key in r.effective_params.keys() {
            if !first.effective_params.contains_key(key) {
                return Err(Error::NotComparable(format!(
                    "record has extra parameter `{key}`"
                )));
            }
        }
    }
    match varied.len() {
        0 => Err(Error::NotComparable(
            "no parameter varies across records".to_string(),
        )),
        1 => Ok(varied.remove(0)),
        _ => Err(Error::NotComparable(format!(
            "multiple parameters vary: {varied:?}"
        ))),
    }
}

fn metric_for(records: &[ResultRecord]) -> Result<String> {
    if records.iter().all(|r| r.metrics.contains_key("speedup")) {
        return Ok("speedup".to_string());
    }
    let name = records[0].primary_metric.clone();
    for r in records {
        if !r.metrics.contains_key(&name) {
            return Err(Error::NotComparable(format!(
                "record for `{}` lacks metric `{name}`",
                r.benchmark
            )));
        }
    }
    Ok(name)
}

/// Renders the chart to an SVG string.
pub fn scaling_svg(records: &[ResultRecord]) -> Result<String> {
    if records.len() < 2 {
        return Err(Error::NotComparable(
            "need at least two records".to_string(),
        ));
    }
    let benchmark = &records[0].benchmark;
    if records.iter().any(|r| &r.benchmark != benchmark) {
        return Err(Error::NotComparable(
            "records come from different benchmarks".to_string(),
        ));
    }
    let param = varied_parameter(records)?;
    let metric = metric_for(records)?;

    let mut points: Vec<Point> = records
        .iter()
        .map(|r| {
            let x = r
                .effective_params
                .get(&param)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| {
                    Error::NotComparable(format!("parameter `{param}` is not numeric"))
                })?;
            Ok(Point {
                x,
                y: r.metrics[&metric].stats.mean,
            })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.x.total_cmp(&b.x));

    let (x_min, x_max) = bounds(points.iter().map(|p| p.x));
    let (y_min, y_max) = bounds(points.iter().map(|p| p.y));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN_B - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{} — {} vs {}</text>",
        WIDTH / 2.0,
        xml_escape(benchmark),
        xml_escape(&metric),
        xml_escape(&param)
    );
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{:.2}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B
    );
    // Axis extremes.
    for (value, x) in [(x_min, sx(x_min)), (x_max, sx(x_max))] {
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_B + 18.0,
            fmt_num(value)
        );
    }
    for (value, y) in [(y_min, sy(y_min)), (y_max, sy(y_max))] {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 8.0,
            fmt_num(value)
        );
    }
    // Axis labels.
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0,
        xml_escape(&param)
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        xml_escape(&metric)
    );
    // Polyline plus point markers.
    let path: Vec<String> = points
        .iter()
        .map(|p| format!("{:.3},{:.3}", sx(p.x), sy(p.y)))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>",
        path.join(" ")
    );
    for p in &points {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"#1f77b4\"/>",
            sx(p.x),
            sy(p.y)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes the scaling chart for `records` to `path`.
pub fn plot_scaling(records: &[ResultRecord], path: &Path) -> Result<()> {
    let svg = scaling_svg(records)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        // Degenerate span; widen so the scale stays finite.
        lo -= 0.5;
        hi += 0.5;
    }
    (lo, hi)
}

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.6}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::param_set;
    use crate::report::MetricSummary;
    use crate::stats::Stats;

    fn record_with(benchmark: &str, n: i64, gflops: f64) -> ResultRecord {
        let mut r = crate::report::tests::sample_record(1);
        r.benchmark = benchmark.to_string();
        r.effective_params = param_set(&[("n", n.into())]);
        r.metrics.insert(
            "gflops".to_string(),
            MetricSummary {
                samples: vec![gflops],
                stats: Stats::from_samples(&[gflops]),
            },
        );
        r
    }

    #[test]
    fn two_points_produce_an_svg() {
        let records = vec![
            record_with("mandelbrot", 512, 1.0),
            record_with("mandelbrot", 1024, 2.0),
        ];
        let svg = scaling_svg(&records).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn different_benchmarks_are_not_comparable() {
        let records = vec![
            record_with("gemm", 512, 1.0),
            record_with("sort", 1024, 2.0),
        ];
        assert!(matches!(
            scaling_svg(&records),
            Err(Error::NotComparable(_))
        ));
    }

    #[test]
    fn single_record_is_rejected() {
        let records = vec![record_with("gemm", 512, 1.0)];
        assert!(scaling_svg(&records).is_err());
    }

    #[test]
    fn byte_output_is_deterministic_and_order_independent() {
        let a = vec![
            record_with("gemm", 512, 1.0),
            record_with("gemm", 1024, 2.0),
        ];
        let mut b = vec![
            record_with("gemm", 1024, 2.0),
            record_with("gemm", 512, 1.0),
        ];
        // Timestamps differ between constructions; plots must not read them.
        b[0].timestamp = a[1].timestamp;
        b[1].timestamp = a[0].timestamp;
        assert_eq!(scaling_svg(&a).unwrap(), scaling_svg(&b).unwrap());
    }
}
