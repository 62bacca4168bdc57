//! Command-line behavior: formats, exit codes, environment defaults.

use std::process::Command;

fn heterobench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heterobench"))
}

#[test]
fn list_prints_the_full_roster() {
    let out = heterobench().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 25);
    for name in ["gemm", "gups", "srad", "dnn-composite", "busspeed-download"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn list_params_documents_custom_parameters() {
    let out = heterobench().args(["list", "--params"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["table_log2", "degree", "len_a", "min_tile", "keep_prob"] {
        assert!(text.contains(key), "missing parameter doc for {key}");
    }
}

#[test]
fn run_emits_parseable_json_and_exits_zero() {
    let out = heterobench()
        .args([
            "run",
            "gups",
            "--size",
            "custom",
            "--param",
            "table_log2=10",
            "--param",
            "updates=4096",
            "--passes",
            "2",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["benchmark"], "gups");
    assert_eq!(record["verified"], "pass");
    assert_eq!(record["passes"], 2);
}

#[test]
fn csv_format_has_pass_rows_and_summary() {
    let out = heterobench()
        .args([
            "run",
            "gups",
            "--size",
            "custom",
            "--param",
            "table_log2=10",
            "--param",
            "updates=4096",
            "--passes",
            "3",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("benchmark,pass,setup_s,compute_s"));
    assert_eq!(lines.len(), 1 + 3 + 1); // header + passes + summary
    assert!(lines[4].starts_with("gups,summary,"));
}

#[test]
fn unwritable_output_path_fails_with_nonzero_exit() {
    let out = heterobench()
        .args([
            "run",
            "gups",
            "--size",
            "custom",
            "--param",
            "table_log2=10",
            "--param",
            "updates=64",
            "--passes",
            "1",
            "--out",
            "/nonexistent-dir/result.json",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_benchmark_fails() {
    let out = heterobench().args(["run", "nope"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown benchmark"));
}

#[test]
fn workers_default_comes_from_the_environment() {
    let out = heterobench()
        .env("HETEROBENCH_WORKERS", "3")
        .args([
            "run",
            "gups",
            "--size",
            "custom",
            "--param",
            "table_log2=10",
            "--param",
            "updates=4096",
            "--passes",
            "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["workers"], 3);
}

#[test]
fn custom_size_without_params_is_rejected() {
    let out = heterobench()
        .args(["run", "sort", "--size", "custom"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("custom"));
}

#[test]
fn plot_draws_an_svg_from_saved_records() {
    let dir = tempfile::tempdir().unwrap();
    for (i, size) in [64i64, 128].iter().enumerate() {
        let path = dir.path().join(format!("r{i}.json"));
        let out = heterobench()
            .args([
                "run",
                "mandelbrot",
                "--size",
                "custom",
                "--param",
                &format!("width={size}"),
                "--param",
                "height=64",
                "--param",
                "max_iter=64",
                "--passes",
                "1",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let svg_path = dir.path().join("scaling.svg");
    let out = heterobench()
        .args([
            "plot",
            dir.path().join("r0.json").to_str().unwrap(),
            dir.path().join("r1.json").to_str().unwrap(),
            "--out",
            svg_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("mandelbrot"));
}
