use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use tvc::pipeline::{Decoder, DecoderConfig, Frame, STAGES};
use tvc_cli::bench::bench_decode;
use tvc_cli::cli::{create_output, finish, flush, is_y4m, open_input, parse_args};
use tvc_cli::hash::{FrameHashes, Hasher};
use tvc_cli::report::{BenchReport, ReportRow};
use tvc_cli::y4m::{write_raw_frame, VideoFormat, Y4mWriter};
use tvc_cli::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Simd {
    Auto,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Csv,
    Md,
}

/// Decode a TVC stream.
#[derive(Parser, Debug)]
#[command(name = "tvcdec", version)]
struct Args {
    /// Input .tvc stream.
    #[arg(long, short)]
    input: PathBuf,
    /// Output file (.y4m for Y4M, anything else raw planar), or `none`.
    #[arg(long, short, default_value = "none")]
    output: String,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    simd: Simd,
    /// Print per-frame and sequence MD5 lines.
    #[arg(long)]
    md5: bool,
    /// Time repeated decodes and print the median fps.
    #[arg(long)]
    bench: bool,
    /// Print the stage time breakdown.
    #[arg(long)]
    profile: bool,
    /// Emit decode (and stage) rows as a report in place of the plain lines.
    #[arg(long, value_enum)]
    report: Option<ReportFormat>,
    /// Decode 8-bit streams on the 16-bit sample path.
    #[arg(long)]
    wide_path: bool,
    /// Disable per-CU motion-compensation jobs.
    #[arg(long)]
    no_sub_ctu: bool,
}

enum Sink {
    None,
    Y4m(Y4mWriter<std::io::BufWriter<std::fs::File>>),
    Raw(std::io::BufWriter<std::fs::File>, u8),
}

impl Sink {
    fn write(&mut self, f: &Frame) -> Result<(), CliError> {
        match self {
            Sink::None => Ok(()),
            Sink::Y4m(w) => w.write_frame(&f.planes),
            Sink::Raw(w, bd) => write_raw_frame(w, &f.planes, *bd),
        }
    }
}

fn run(args: Args) -> anyhow::Result<()> {
    let mut data = Vec::new();
    std::io::Read::read_to_end(&mut open_input(&args.input)?, &mut data).context("read failed")?;
    let mut cfg = DecoderConfig {
        force_scalar: args.simd == Simd::Off,
        profiling: args.profile,
        wide_path: args.wide_path,
        sub_ctu: !args.no_sub_ctu,
        ..DecoderConfig::default()
    };
    if let Some(t) = args.threads {
        cfg.workers = t;
    }
    let (seq, rest) = tvc::bitio::SequenceHeader::parse(&data).map_err(CliError::from)?;
    let format = VideoFormat { width: seq.width(), height: seq.height(), bit_depth: seq.bit_depth, chroma: seq.chroma_format };
    let mut sink = match args.output.as_str() {
        "none" => Sink::None,
        p if is_y4m(p.as_ref()) => Sink::Y4m(Y4mWriter::new(create_output(p.as_ref())?, format)?),
        p => Sink::Raw(create_output(p.as_ref())?, seq.bit_depth),
    };
    let mut hasher = Hasher::new(seq.bit_depth);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    let t = Instant::now();
    let mut dec = Decoder::open(seq, cfg.clone()).map_err(CliError::from)?;
    let mut n = 0;
    let mut emit = |f: Frame, out: &mut dyn Write| -> anyhow::Result<()> {
        let d = hasher.push(&f.planes);
        if args.md5 {
            writeln!(out, "{}", FrameHashes::frame_line(n, &d))?;
        }
        sink.write(&f)?;
        n += 1;
        Ok(())
    };
    for unit in tvc::pipeline::split_units(rest).map_err(CliError::from)? {
        dec.feed(unit).map_err(CliError::from)?;
    }
    while let Some(f) = dec.next_frame().map_err(CliError::from)? {
        emit(f, &mut out)?;
    }
    let elapsed = t.elapsed().as_secs_f64();
    let profile = dec.stage_profile();
    let path = if dec.storage_bits() == 8 { "8bit" } else { "16bit" };
    dec.close();
    let hashes = hasher.finish();
    if args.md5 {
        writeln!(out, "{}", hashes.sequence_line())?;
    }
    match sink {
        Sink::None => {}
        Sink::Y4m(w) => flush(w.finish()?)?,
        Sink::Raw(w, _) => flush(w)?,
    }
    let mut fps = n as f64 / elapsed.max(1e-9);
    eprintln!("tvcdec: {n} frames in {elapsed:.3} s ({fps:.2} fps, {} workers, {path} path)", cfg.workers);
    if args.bench {
        let run = bench_decode(&data, &DecoderConfig { profiling: false, ..cfg.clone() }, 5)?;
        fps = run.fps;
        if args.report.is_none() {
            writeln!(out, "fps {:.2}", fps)?;
        }
    }
    if args.profile && args.report.is_none() {
        for s in STAGES {
            writeln!(out, "{:<8} {:6.2}%", s.name(), profile.percent(s))?;
        }
    }
    if let Some(fmt) = args.report {
        let name = args.input.file_stem().map_or("stream".into(), |s| s.to_string_lossy().into_owned());
        let mut rep = BenchReport { rows: vec![ReportRow::decode(&name, path, cfg.workers, fps)] };
        if args.profile {
            rep.rows.extend(STAGES.iter().map(|&s| ReportRow::stage(s.name(), &name, profile.percent(s))));
        }
        match fmt {
            ReportFormat::Csv => rep.write_csv(&mut out)?,
            ReportFormat::Md => write!(out, "{}", rep.to_markdown())?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match parse_args::<Args>() {
        Ok(a) => finish(run(a), "tvcdec"),
        Err(code) => code,
    }
}
