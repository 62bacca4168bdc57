//! `heterobench` — run the benchmark suite from the command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use heterobench_core::harness::{run, run_concurrent, OutputFormat, RunConfig, VerifyVerdict};
use heterobench_core::params::{parse_override, SizeClass};
use heterobench_core::plot::plot_scaling;
use heterobench_core::report::{emit, ResultRecord};
use heterobench_core::suite::standard_registry;

#[derive(Parser)]
#[command(
    name = "heterobench",
    version,
    about = "Portable heterogeneous-computing benchmark suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered benchmarks (level, name, metric, parameters)
    List {
        /// Also print every parameter with its default per size class
        #[arg(long)]
        params: bool,
    },
    /// Run one benchmark and emit its result record
    Run {
        /// Benchmark name (see `heterobench list`)
        name: String,
        /// Size class: 1-4 or `custom`
        #[arg(long, default_value = "1")]
        size: String,
        /// Parameter override `key=value` (repeatable)
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Timed passes over the compute region
        #[arg(long, default_value_t = 5)]
        passes: u32,
        /// Seed for all generated inputs
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Worker lanes for the compute region (defaults to logical CPUs)
        #[arg(long, env = "HETEROBENCH_WORKERS")]
        workers: Option<usize>,
        /// Concurrent-instance study: run K isolated instances at once
        #[arg(long, default_value_t = 1)]
        concurrent: usize,
        /// Output format: json or csv
        #[arg(long, default_value = "json")]
        format: String,
        /// Write the record here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every benchmark at one size class; exit 0 iff all verify
    Suite {
        /// Size class: 1-4
        #[arg(long, default_value = "1")]
        size: String,
        #[arg(long, default_value_t = 3)]
        passes: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, env = "HETEROBENCH_WORKERS")]
        workers: Option<usize>,
        /// Write the JSON array here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw an SVG scaling chart from result JSON files
    Plot {
        /// Result records (JSON) of one benchmark varying one parameter
        inputs: Vec<PathBuf>,
        /// Output SVG path
        #[arg(long)]
        out: PathBuf,
    },
}

fn effective_workers(workers: Option<usize>) -> usize {
    workers.unwrap_or_else(heterobench_core::parallel::hardware_workers)
}

fn parse_format(format: &str) -> anyhow::Result<OutputFormat> {
    match format {
        "json" => Ok(OutputFormat::Json),
        "csv" => Ok(OutputFormat::Csv),
        other => bail!("unknown format `{other}` (json or csv)"),
    }
}

fn cmd_list(show_params: bool) -> anyhow::Result<()> {
    let registry = standard_registry()?;
    let mut stdout = std::io::stdout().lock();
    for desc in registry.list() {
        writeln!(
            stdout,
            "L{} {:20} primary={} dwarf={} domain={}",
            desc.level,
            desc.name,
            desc.primary_metric,
            desc.dwarf.as_deref().unwrap_or("-"),
            desc.domain.as_deref().unwrap_or("-"),
        )?;
        if show_params {
            for spec in &desc.params {
                let defaults: Vec<String> = desc
                    .presets
                    .iter()
                    .map(|p| p[&spec.key].to_string())
                    .collect();
                writeln!(
                    stdout,
                    "     --param {}=...  {} [classes 1-4: {}]",
                    spec.key,
                    spec.help,
                    defaults.join(", ")
                )?;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    name: &str,
    size: &str,
    params: &[String],
    passes: u32,
    seed: u64,
    workers: Option<usize>,
    concurrent: usize,
    format: &str,
    out: Option<&PathBuf>,
) -> anyhow::Result<bool> {
    let registry = standard_registry()?;
    let mut config = RunConfig::new(name)
        .with_size(SizeClass::parse(size)?)
        .with_passes(passes)
        .with_seed(seed)
        .with_workers(effective_workers(workers));
    config.concurrent_instances = concurrent;
    config.output_format = parse_format(format)?;
    config.output_path = out.cloned();
    for raw in params {
        let (key, value) = parse_override(raw)?;
        config.custom_params.insert(key, value);
    }
    let record = if concurrent > 1 {
        run_concurrent(&registry, &config)?
    } else {
        run(&registry, &config)?
    };
    match &config.output_path {
        Some(path) => emit(&record, config.output_format, path)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let text = record.render(config.output_format);
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
    if record.verified != VerifyVerdict::Pass {
        eprintln!(
            "verification failed for {}: {}",
            record.benchmark, record.verification_detail
        );
    }
    Ok(record.verified == VerifyVerdict::Pass)
}

fn cmd_suite(
    size: &str,
    passes: u32,
    seed: u64,
    workers: Option<usize>,
    out: Option<&PathBuf>,
) -> anyhow::Result<bool> {
    let registry = standard_registry()?;
    let size_class = SizeClass::parse(size)?;
    let descriptors = registry.list();
    let total = descriptors.len();
    let mut records: Vec<ResultRecord> = Vec::with_capacity(total);
    let mut all_passed = true;
    for (i, desc) in descriptors.iter().enumerate() {
        let config = RunConfig::new(&desc.name)
            .with_size(size_class)
            .with_passes(passes)
            .with_seed(seed)
            .with_workers(effective_workers(workers));
        let started = std::time::Instant::now();
        let record = run(&registry, &config)?;
        let verdict = match record.verified {
            VerifyVerdict::Pass => "pass",
            VerifyVerdict::Fail => "FAIL",
            VerifyVerdict::Skipped => "skipped",
        };
        eprintln!(
            "[{:2}/{total}] {:20} {verdict} ({:.2}s)",
            i + 1,
            desc.name,
            started.elapsed().as_secs_f64()
        );
        all_passed &= record.verified == VerifyVerdict::Pass;
        records.push(record);
    }
    let json = serde_json::to_string_pretty(&records)?;
    match out {
        Some(path) => {
            std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{json}"),
    }
    Ok(all_passed)
}

fn cmd_plot(inputs: &[PathBuf], out: &std::path::Path) -> anyhow::Result<()> {
    if inputs.is_empty() {
        bail!("no input records");
    }
    let mut records = Vec::with_capacity(inputs.len());
    for path in inputs {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        records.push(ResultRecord::from_json(&text)?);
    }
    plot_scaling(&records, out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::List { params } => cmd_list(*params).map(|()| true),
        Command::Run {
            name,
            size,
            params,
            passes,
            seed,
            workers,
            concurrent,
            format,
            out,
        } => cmd_run(
            name,
            size,
            params,
            *passes,
            *seed,
            *workers,
            *concurrent,
            format,
            out.as_ref(),
        ),
        Command::Suite {
            size,
            passes,
            seed,
            workers,
            out,
        } => cmd_suite(size, *passes, *seed, *workers, out.as_ref()),
        Command::Plot { inputs, out } => cmd_plot(inputs, out).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
