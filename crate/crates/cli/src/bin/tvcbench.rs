use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use tvc::pipeline::{DecoderConfig, STAGES};
use tvc_cli::bench::{bench_decode, builtin_stream, kernel_rows, parse_kernel_list};
use tvc_cli::cli::{create_output, finish, flush, parse_args};
use tvc_cli::report::{BenchReport, ReportRow};
use tvc_cli::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Csv,
    Md,
}

/// Kernel speedups, decode scaling and stage breakdowns.
#[derive(Parser, Debug)]
#[command(name = "tvcbench", version)]
struct Args {
    /// Kernels to time: `all`, `none` or a comma-separated list.
    #[arg(long, default_value = "all")]
    kernels: String,
    /// Plane edge lengths for the kernel workloads.
    #[arg(long, value_delimiter = ',', default_value = "256")]
    sizes: Vec<usize>,
    /// Timed runs per measurement (after one warm-up run).
    #[arg(long, default_value_t = 21)]
    iters: usize,
    /// Decode streams: .tvc files or built-in `hd`, `natural`, `screen`.
    #[arg(long, value_delimiter = ',')]
    streams: Vec<String>,
    /// Worker counts for the decode runs.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    threads: Vec<usize>,
    /// Add stage breakdown rows for each stream (at the first worker count).
    #[arg(long)]
    profile: bool,
    #[arg(long, value_enum, default_value = "md")]
    report: ReportFormat,
    /// Report file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_stream(s: &str) -> anyhow::Result<(String, Vec<u8>)> {
    let path = PathBuf::from(s);
    if path.exists() {
        let data = std::fs::read(&path).with_context(|| format!("cannot read {s}"))?;
        let name = path.file_stem().map_or(s.to_string(), |n| n.to_string_lossy().into_owned());
        return Ok((name, data));
    }
    Ok((s.to_string(), builtin_stream(s)?))
}

fn run(args: Args) -> anyhow::Result<()> {
    let kernels = if args.kernels == "none" { Vec::new() } else { parse_kernel_list(&args.kernels)? };
    if args.sizes.iter().any(|&s| !(16..=4096).contains(&s) || s % 16 != 0) {
        return Err(CliError::format("kernel sizes must be multiples of 16 in [16, 4096]").into());
    }
    if args.threads.contains(&0) {
        return Err(CliError::format("thread counts must be positive").into());
    }
    let mut report = BenchReport::default();
    for &size in &args.sizes {
        let mut rows = kernel_rows(&kernels, size, args.iters);
        if args.sizes.len() > 1 {
            for r in rows.iter_mut() {
                r.path = format!("{}@{size}", r.path);
            }
        }
        report.rows.extend(rows);
    }
    let iters = args.iters.clamp(1, 5);
    for s in &args.streams {
        let (name, data) = load_stream(s)?;
        let (seq, _) = tvc::bitio::SequenceHeader::parse(&data).map_err(CliError::from)?;
        for (i, &t) in args.threads.iter().enumerate() {
            let cfg = DecoderConfig { workers: t, profiling: args.profile && i == 0, ..DecoderConfig::default() };
            let run = bench_decode(&data, &cfg, iters)?;
            let bits = if seq.bit_depth == 8 { "8bit" } else { "16bit" };
            report.rows.push(ReportRow::decode(&name, bits, t, run.fps));
            if cfg.profiling {
                report.rows.extend(STAGES.iter().map(|&st| ReportRow::stage(st.name(), &name, run.profile.percent(st))));
            }
        }
    }
    report.fill_scaling();
    for r in report.rows.iter().filter(|r| r.workers.is_some()) {
        let prev = report.rows.iter().filter(|p| p.name == r.name && p.workers < r.workers && p.workers.is_some()).filter_map(|p| p.fps).fold(0.0, f64::max);
        if r.fps.is_some_and(|f| f < prev) {
            eprintln!("tvcbench: flagged: {} fps drops at {} workers", r.name, r.workers.unwrap());
        }
    }
    report.validate()?;
    let text = match args.report {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Md => report.to_markdown(),
    };
    match &args.out {
        Some(p) => {
            let mut w = create_output(p)?;
            w.write_all(text.as_bytes()).context("write failed")?;
            flush(w)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match parse_args::<Args>() {
        Ok(a) => finish(run(a), "tvcbench"),
        Err(code) => code,
    }
}
