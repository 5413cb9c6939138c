//! Kernel microbenchmarks and decode throughput runs.
//!
//! Kernel timings are medians over `iters` timed runs after one untimed
//! warm-up run, reported as ns per output sample. Decode runs report the
//! median fps over `iters` full decodes.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tvc::bitio::ChromaFormat;
use tvc::encoder::corpus::{synth, Content};
use tvc::encoder::{encode_sequence, EncoderConfig, Gop};
use tvc::kernels::deblock::{DeblockParams, EdgeGrid};
use tvc::kernels::intra::{BdpcmDir, IntraMode};
use tvc::kernels::lmcs::{lmcs_build_inverse, LmcsLut};
use tvc::kernels::sao::{Rect, SaoMode, SaoParams};
use tvc::kernels::transform::TransformKind;
use tvc::kernels::{Kernels, Pixel, Plane, Variant};
use tvc::pipeline::{decode_stream_profiled, DecoderConfig, StageProfile};

use crate::report::ReportRow;
use crate::CliError;

/// Benchmarked kernels. `iqit` is dequantization plus inverse transform of
/// 32×32 blocks; `dblk` covers both edge directions.
pub const BENCH_KERNELS: [&str; 10] = ["iqit", "dblk", "sao", "alf", "ccalf", "intra", "inter", "ibc", "bdpcm", "lmcs"];

pub fn parse_kernel_list(s: &str) -> Result<Vec<&'static str>, CliError> {
    if s == "all" {
        return Ok(BENCH_KERNELS.to_vec());
    }
    s.split(',')
        .map(|n| {
            let n = n.trim();
            BENCH_KERNELS.iter().copied().find(|k| *k == n).ok_or_else(|| CliError::format(format!("unknown kernel `{n}`")))
        })
        .collect()
}

struct Workload<P: Pixel> {
    size: usize,
    bd: u8,
    src: Plane<P>,
    dst: Plane<P>,
    chroma: Plane<P>,
    levels: Vec<i16>,
    deq: Vec<i16>,
    resid: Vec<i16>,
    refs: Vec<i32>,
    block: Vec<P>,
    vert: EdgeGrid,
    horz: EdgeGrid,
    lut: LmcsLut,
    line: Vec<P>,
}

impl<P: Pixel> Workload<P> {
    fn new(size: usize, bd: u8, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max = (1i32 << bd) - 1;
        let samples: Vec<u16> = (0..size * size)
            .map(|i| ((i % size) as i32 * 3 + (i / size) as i32 + rng.random_range(-12..=12)).clamp(0, max) as u16)
            .collect();
        let src = Plane::from_samples(size, size, bd, &samples);
        let chroma = Plane::from_samples(size / 2, size / 2, bd, &samples[..size * size / 4]);
        let levels: Vec<i16> = (0..1024).map(|i| if i % 7 == 0 { rng.random_range(-40..=40) } else { 0 }).collect();
        let mut vert = EdgeGrid::new(size, size, 4, 4);
        let mut horz = EdgeGrid::new(size, size, 4, 4);
        for y in (0..size).step_by(4) {
            for x in (8..size).step_by(8) {
                vert.set(x, y, 2);
                horz.set(y, x, 2);
            }
        }
        let mut cw = tvc::kernels::lmcs::uniform_counts(bd);
        cw[3] += cw[12] / 2;
        cw[12] -= cw[12] / 2;
        Self {
            size,
            bd,
            dst: src.clone(),
            line: (0..size * size).map(|i| P::from_i32(samples[i] as i32)).collect(),
            src,
            chroma,
            levels,
            deq: vec![0; 1024],
            resid: vec![0; 1024],
            refs: (0..65).map(|i| i * 7 % 200).collect(),
            block: vec![P::default(); 64 * 64],
            vert,
            horz,
            lut: lmcs_build_inverse(&cw, bd),
        }
    }

    /// Untimed preparation before one run.
    fn reset(&mut self, name: &str) {
        if name == "dblk" {
            self.dst = self.src.clone();
        }
    }

    /// One pass of `name` over the workload; returns the output sample count.
    fn run(&mut self, name: &str, k: &Kernels<P>) -> usize {
        let (n, bd) = (self.size, self.bd);
        let full = Rect::new(0, 0, n, n);
        match name {
            "iqit" => {
                for _ in 0..(n / 32) * (n / 32) {
                    (k.dequant)(&self.levels, 30, &mut self.deq);
                    (k.inverse_transform)(&self.deq, 32, TransformKind::Dct2, TransformKind::Dct2, bd, &mut self.resid);
                }
                n * n
            }
            "dblk" => {
                let prm = DeblockParams::new(37, bd);
                let mut v = self.dst.view_mut();
                (k.deblock_vertical)(&mut v, 0..n, &self.vert, &prm);
                (k.deblock_horizontal)(&mut v, 0..n, &self.horz, &prm);
                n * n
            }
            "sao" => {
                let prm = SaoParams { mode: SaoMode::Edge { class: 2 }, offsets: [2, 1, -1, -2] };
                (k.sao)(self.src.view(), &mut self.dst.view_mut(), full, &prm, bd);
                n * n
            }
            "alf" => {
                (k.alf)(self.src.view(), &mut self.dst.view_mut(), full, &[1, 2, 3, -1, 2, 4], bd);
                n * n
            }
            "ccalf" => {
                let c = n / 2;
                let mut out = self.chroma.clone();
                (k.ccalf)(self.chroma.view(), self.src.view(), &mut out.view_mut(), Rect::new(0, 0, c, c), &[4, -2, 6, 1, -3, 2, 0, 5], bd);
                c * c
            }
            "intra" => {
                for _ in 0..(n / 32) * (n / 32) {
                    (k.intra)(IntraMode::Planar, &self.refs, &self.refs, 32, &mut self.block[..1024]);
                }
                n * n
            }
            "inter" => {
                for by in (0..n).step_by(16) {
                    for bx in (0..n).step_by(16) {
                        (k.interp_luma)(self.src.view(), bx, by, 5, -3, 16, 16, bd, &mut self.block[..256]);
                    }
                }
                n * n
            }
            "ibc" => {
                for by in (16..n).step_by(16) {
                    for bx in (0..n).step_by(16) {
                        (k.ibc_copy)(&self.src, bx, by, 0, -16, 16, 16, &mut self.block[..256]);
                    }
                }
                n * (n - 16)
            }
            "bdpcm" => {
                let pred = vec![P::from_i32(1 << (bd - 1)); 256];
                for _ in 0..(n / 16) * (n / 16) {
                    (k.bdpcm)(&self.levels[..256], 16, BdpcmDir::Hor, 30, &pred, bd, &mut self.block[..256]);
                }
                n * n
            }
            "lmcs" => {
                let out = &mut self.block;
                for chunk in self.line.chunks(4096) {
                    (k.lmcs)(&self.lut, chunk, &mut out[..chunk.len()]);
                }
                n * n
            }
            other => panic!("unknown kernel {other}"),
        }
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn time_variant<P: Pixel>(w: &mut Workload<P>, name: &str, k: &Kernels<P>, iters: usize) -> f64 {
    w.reset(name);
    w.run(name, k);
    let mut per_sample = Vec::with_capacity(iters);
    for _ in 0..iters.max(1) {
        w.reset(name);
        let t = Instant::now();
        let n = w.run(name, k);
        per_sample.push(t.elapsed().as_nanos() as f64 / n as f64);
    }
    median(per_sample).max(1e-3)
}

/// Median ns/sample of the scalar and vector variants of `name` on a
/// `size × size` plane. Runs alternate between variants.
pub fn bench_kernel<P: Pixel>(name: &str, size: usize, bd: u8, iters: usize) -> (f64, f64) {
    let mut w = Workload::<P>::new(size, bd, 0xbe7c);
    let (ks, kv) = (Kernels::<P>::new(Variant::Scalar), Kernels::<P>::new(Variant::Vector));
    let (mut s, mut v) = (Vec::new(), Vec::new());
    let rounds = 3;
    for _ in 0..rounds {
        s.push(time_variant(&mut w, name, &ks, iters.div_ceil(rounds)));
        v.push(time_variant(&mut w, name, &kv, iters.div_ceil(rounds)));
    }
    (median(s), median(v))
}

/// Kernel rows for both sample paths (8-bit path at 8 bits, 16-bit path at 10).
pub fn kernel_rows(names: &[&str], size: usize, iters: usize) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for &name in names {
        let (s, v) = bench_kernel::<u8>(name, size, 8, iters);
        rows.push(ReportRow::kernel(name, "8bit", s, v));
        let (s, v) = bench_kernel::<u16>(name, size, 10, iters);
        rows.push(ReportRow::kernel(name, "16bit", s, v));
    }
    rows
}

/// Synthetic stream for decode measurements.
pub fn synthetic_stream(content: Content, width: usize, height: usize, qp: u8, frames: usize, bit_depth: u8) -> Result<Vec<u8>, CliError> {
    let video = synth(content, width, height, bit_depth, ChromaFormat::Yuv420, frames, 0xbe9c);
    let cfg = EncoderConfig { qp, gop: Gop::Ippp, fast: true, ..EncoderConfig::default() };
    Ok(encode_sequence(&video, &cfg)?.0)
}

/// Built-in decode streams, by name: `hd` is 1920×1088 (17+ CTU columns)
/// moving-block content at QP 37; `natural` and `screen` are 640×384
/// moving-block and screen content at QP 32.
pub fn builtin_stream(name: &str) -> Result<Vec<u8>, CliError> {
    match name {
        "hd" => synthetic_stream(Content::MovingBlocks, 1920, 1088, 37, 3, 8),
        "natural" => synthetic_stream(Content::MovingBlocks, 640, 384, 32, 4, 8),
        "screen" => synthetic_stream(Content::Screen, 640, 384, 32, 4, 8),
        other => Err(CliError::format(format!("unknown built-in stream `{other}`"))),
    }
}

#[derive(Clone, Debug)]
pub struct DecodeRun {
    pub fps: f64,
    pub frames: usize,
    pub profile: StageProfile,
}

/// Median fps over `iters` decodes after one warm-up decode. The profile is
/// summed over the timed runs.
pub fn bench_decode(stream: &[u8], config: &DecoderConfig, iters: usize) -> Result<DecodeRun, CliError> {
    decode_stream_profiled(stream, config.clone())?;
    let mut fps = Vec::new();
    let mut profile = StageProfile::default();
    let mut frames = 0;
    for _ in 0..iters.max(1) {
        let t = Instant::now();
        let (_, f, p) = decode_stream_profiled(stream, config.clone())?;
        let dt = t.elapsed().max(Duration::from_nanos(1));
        frames = f.len();
        fps.push(f.len() as f64 / dt.as_secs_f64());
        profile.add(&p);
    }
    Ok(DecodeRun { fps: median(fps), frames, profile })
}
