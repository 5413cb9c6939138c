use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use tvc::bitio::{ChromaFormat, ToolFlags};
use tvc::encoder::{encode_sequence, mean_psnr, EncoderConfig, Gop, LmcsChoice, Video};
use tvc_cli::cli::{create_output, finish, flush, is_y4m, open_input, parse_args};
use tvc_cli::y4m::{read_raw, read_y4m, write_raw_frame, write_y4m, VideoFormat};
use tvc_cli::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GopArg {
    Ai,
    Ipp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ChromaArg {
    #[value(name = "420")]
    Yuv420,
    Mono,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LmcsArg {
    Identity,
    Contrast,
}

/// Encode Y4M or raw planar video into a TVC stream.
#[derive(Parser, Debug)]
#[command(name = "tvcenc", version)]
struct Args {
    /// Input video: .y4m, or raw planar (needs --width/--height).
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value_t = 8)]
    bitdepth: u8,
    #[arg(long, value_enum, default_value = "420")]
    chroma: ChromaArg,
    #[arg(long, default_value_t = 32)]
    qp: u32,
    #[arg(long, value_enum, default_value = "ipp")]
    gop: GopArg,
    #[arg(long, default_value_t = 64)]
    ctu: u32,
    /// Comma-separated tools (dblk,sao,alf,ccalf,lmcs,ibc,bdpcm), `all` or
    /// `none`. Default: all tools the input supports.
    #[arg(long)]
    tools: Option<String>,
    #[arg(long, value_enum, default_value = "contrast")]
    lmcs: LmcsArg,
    /// Encode at most this many frames.
    #[arg(long)]
    frames: Option<usize>,
    /// Vertical motion range in luma samples.
    #[arg(long, default_value_t = 32)]
    max_mv_y: u8,
    /// Reduced mode search.
    #[arg(long)]
    fast: bool,
    #[arg(long, short)]
    output: PathBuf,
    /// Write the encoder's reconstruction (.y4m or raw).
    #[arg(long)]
    recon: Option<PathBuf>,
}

fn load(args: &Args) -> anyhow::Result<Video> {
    let input = open_input(&args.input)?;
    if is_y4m(&args.input) {
        return Ok(read_y4m(input)?);
    }
    let (Some(width), Some(height)) = (args.width, args.height) else {
        return Err(CliError::format("raw input needs --width and --height").into());
    };
    if !matches!(args.bitdepth, 8 | 10) {
        return Err(CliError::format(format!("bit depth {} not 8 or 10", args.bitdepth)).into());
    }
    let chroma = match args.chroma {
        ChromaArg::Yuv420 => ChromaFormat::Yuv420,
        ChromaArg::Mono => ChromaFormat::Monochrome,
    };
    Ok(read_raw(input, VideoFormat { width, height, bit_depth: args.bitdepth, chroma })?)
}

fn config(args: &Args, video: &Video) -> Result<EncoderConfig, CliError> {
    if args.qp > 63 {
        return Err(CliError::format(format!("qp {} outside [0, 63]", args.qp)));
    }
    let log2_ctu = match args.ctu {
        32 => 5,
        64 => 6,
        c => return Err(CliError::format(format!("CTU size {c} not 32 or 64"))),
    };
    let tools = match &args.tools {
        Some(t) => ToolFlags::parse_list(t)?,
        None if video.chroma.has_chroma() => ToolFlags::all(),
        None => ToolFlags(ToolFlags::ALL & !ToolFlags::CCALF),
    };
    Ok(EncoderConfig {
        qp: args.qp as u8,
        gop: if args.gop == GopArg::Ai { Gop::AllIntra } else { Gop::Ippp },
        tools,
        log2_ctu,
        lmcs: if args.lmcs == LmcsArg::Identity { LmcsChoice::Identity } else { LmcsChoice::CannedContrast },
        frames: args.frames,
        max_mv_y: args.max_mv_y,
        fast: args.fast,
    })
}

fn run(args: Args) -> anyhow::Result<()> {
    let video = load(&args)?;
    let cfg = config(&args, &video)?;
    let (stream, recon) = encode_sequence(&video, &cfg).map_err(CliError::from)?;
    let mut out = create_output(&args.output)?;
    out.write_all(&stream).context("write failed")?;
    flush(out)?;
    if let Some(path) = &args.recon {
        let mut w = create_output(path)?;
        if is_y4m(path) {
            let v = Video { frames: recon.iter().map(|f| f.planes.clone()).collect(), ..video.clone() };
            write_y4m(&mut w, &v)?;
        } else {
            for f in &recon {
                write_raw_frame(&mut w, &f.planes, video.bit_depth)?;
            }
        }
        flush(w)?;
    }
    let coded = Video { frames: video.frames[..recon.len()].to_vec(), ..video };
    eprintln!("tvcenc: {} frames, {} bytes, luma PSNR {:.2} dB", recon.len(), stream.len(), mean_psnr(&coded, &recon));
    Ok(())
}

fn main() -> ExitCode {
    match parse_args::<Args>() {
        Ok(a) => finish(run(a), "tvcenc"),
        Err(code) => code,
    }
}
