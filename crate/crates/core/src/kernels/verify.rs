//! Randomized equivalence checking between kernel tables, with timing.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::deblock::{DeblockParams, EdgeGrid};
use super::dispatch::{Kernels, Variant};
use super::intra::{BdpcmDir, IntraMode};
use super::lmcs::{lmcs_build_inverse, LMCS_PIECES};
use super::pixel::{Pixel, Plane};
use super::sao::{Rect, SaoMode, SaoParams};
use super::transform::{TransformKind, TRANSFORM_SIZES};
use crate::{Error, Result};

pub const KERNEL_NAMES: [&str; 13] = [
    "dequant",
    "inverse_transform",
    "intra",
    "interp_luma",
    "interp_chroma",
    "ibc_copy",
    "bdpcm",
    "add_residual",
    "deblock",
    "sao",
    "alf",
    "ccalf",
    "lmcs",
];

/// First mismatch found between two variants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub path: &'static str,
    pub bit_depth: u8,
    pub seed: u64,
    pub position: usize,
    pub expected: i32,
    pub actual: i32,
}

#[derive(Clone, Debug)]
pub struct KernelReport {
    pub name: String,
    /// Trials run per storage path.
    pub trials: usize,
    pub divergence: Option<Divergence>,
    pub scalar_ns: u64,
    pub vector_ns: u64,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }

    /// Scalar time over vector time.
    pub fn speedup(&self) -> f64 {
        self.scalar_ns as f64 / self.vector_ns.max(1) as f64
    }
}

fn plane<P: Pixel>(rng: &mut ChaCha8Rng, w: usize, h: usize, bd: u8) -> Plane<P> {
    let max = (1i32 << bd) - 1;
    let smooth = rng.random_bool(0.5);
    let base = rng.random_range(0..=max);
    let s: Vec<u16> = (0..w * h)
        .map(|i| {
            if smooth {
                let v = base + ((i % w) as i32 - (i / w) as i32) * 3 + rng.random_range(-8..=8);
                v.clamp(0, max) as u16
            } else {
                rng.random_range(0..=max) as u16
            }
        })
        .collect();
    Plane::from_samples(w, h, bd, &s)
}

fn rect(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Rect {
    let x0 = rng.random_range(0..w - 1);
    let y0 = rng.random_range(0..h - 1);
    Rect::new(x0, y0, rng.random_range(x0 + 1..=w), rng.random_range(y0 + 1..=h))
}

fn lmcs_counts(rng: &mut ChaCha8Rng, bd: u8) -> [u16; LMCS_PIECES] {
    let mut cw = [((1u32 << bd) / LMCS_PIECES as u32) as u16; LMCS_PIECES];
    for _ in 0..rng.random_range(0..200) {
        let (a, b) = (rng.random_range(0..LMCS_PIECES), rng.random_range(0..LMCS_PIECES));
        if cw[a] > 1 {
            cw[a] -= 1;
            cw[b] += 1;
        }
    }
    cw
}

fn samples_of<P: Pixel>(p: &Plane<P>) -> Vec<i32> {
    (0..p.height()).flat_map(|y| p.row(y).iter().map(|s| s.to_i32())).collect()
}

fn timed(f: impl FnOnce()) -> Duration {
    let t = Instant::now();
    f();
    t.elapsed()
}

/// Runs one randomized input, generated from `seed`, through `k`. Returns
/// the output samples and the time spent inside the kernel.
pub fn run_trial<P: Pixel>(name: &str, k: &Kernels<P>, seed: u64, bd: u8) -> Result<(Vec<i32>, Duration)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = (1i32 << bd) - 1;
    let r = &mut rng;
    let out = match name {
        "dequant" => {
            let n = r.random_range(1..=1024);
            let big = r.random_bool(0.2);
            let levels: Vec<i16> =
                (0..n).map(|_| if big { r.random() } else { r.random_range(-300..=300) }).collect();
            let qp = r.random_range(0..=63);
            let mut o = vec![0i16; n];
            let t = timed(|| (k.dequant)(&levels, qp, &mut o));
            (o.iter().map(|&v| v as i32).collect(), t)
        }
        "inverse_transform" => {
            let n = TRANSFORM_SIZES[r.random_range(0..4)];
            let kh = TransformKind::ALL[r.random_range(0..3)];
            let kv = TransformKind::ALL[r.random_range(0..3)];
            let density = r.random_range(0.02..1.0);
            let mag = [64, 1024, 32767][r.random_range(0..3)];
            let c: Vec<i16> = (0..n * n)
                .map(|_| if r.random_bool(density) { r.random_range(-mag..=mag) as i16 } else { 0 })
                .collect();
            let mut o = vec![0i16; n * n];
            let t = timed(|| (k.inverse_transform)(&c, n, kh, kv, bd, &mut o));
            (o.iter().map(|&v| v as i32).collect(), t)
        }
        "intra" => {
            let n = [4, 8, 16, 32, 64][r.random_range(0..5)];
            let mode = IntraMode::from_index(r.random_range(0..4));
            let top: Vec<i32> = (0..=2 * n).map(|_| r.random_range(0..=max)).collect();
            let left: Vec<i32> = (0..=2 * n).map(|_| r.random_range(0..=max)).collect();
            let mut o = vec![P::default(); n * n];
            let t = timed(|| (k.intra)(mode, &top, &left, n, &mut o));
            (o.iter().map(|s| s.to_i32()).collect(), t)
        }
        "interp_luma" | "interp_chroma" | "ibc_copy" => {
            let (pw, ph) = (96, 64);
            let p: Plane<P> = plane(r, pw, ph, bd);
            let w = [4, 8, 16, 32][r.random_range(0..4)];
            let h = [4, 8, 16, 32][r.random_range(0..4)];
            let bx = r.random_range(0..=pw - w);
            let by = r.random_range(0..=ph - h);
            let mut o = vec![P::default(); w * h];
            let t = if name == "ibc_copy" {
                let sx = r.random_range(0..=pw - w) as i32;
                let sy = r.random_range(0..=ph - h) as i32;
                timed(|| (k.ibc_copy)(&p.view(), bx, by, sx - bx as i32, sy - by as i32, w, h, &mut o))
            } else {
                let mvx = r.random_range(-160..=160);
                let mvy = r.random_range(-160..=160);
                let f = if name == "interp_luma" { k.interp_luma } else { k.interp_chroma };
                timed(|| f(p.view(), bx, by, mvx, mvy, w, h, bd, &mut o))
            };
            (o.iter().map(|s| s.to_i32()).collect(), t)
        }
        "bdpcm" => {
            let n = [4, 8, 16, 32][r.random_range(0..4)];
            let dir = if r.random() { BdpcmDir::Hor } else { BdpcmDir::Ver };
            let qp = r.random_range(0..=63);
            let levels: Vec<i16> = (0..n * n).map(|_| r.random_range(-60..=60)).collect();
            let pred: Vec<P> = (0..n * n).map(|_| P::from_i32(r.random_range(0..=max))).collect();
            let mut o = vec![P::default(); n * n];
            let t = timed(|| (k.bdpcm)(&levels, n, dir, qp, &pred, bd, &mut o));
            (o.iter().map(|s| s.to_i32()).collect(), t)
        }
        "add_residual" => {
            let n = [16, 64, 256, 1024, 4096][r.random_range(0..5)];
            let pred: Vec<P> = (0..n).map(|_| P::from_i32(r.random_range(0..=max))).collect();
            let res: Vec<i16> = (0..n).map(|_| r.random_range(-2 * max..=2 * max) as i16).collect();
            let mut o = vec![P::default(); n];
            let t = timed(|| (k.add_residual)(&pred, &res, bd, &mut o));
            (o.iter().map(|s| s.to_i32()).collect(), t)
        }
        "deblock" => {
            let (w, h) = (8 * r.random_range(2..16), 8 * r.random_range(2..10));
            let mut p: Plane<P> = plane(r, w, h, bd);
            let (sp, seg) = if r.random() { (4, 4) } else { (8, 4) };
            let mut vg = EdgeGrid::new(w, h, sp, seg);
            let mut hg = EdgeGrid::new(w, h, seg, sp);
            for b in vg.bs.iter_mut().chain(hg.bs.iter_mut()) {
                *b = r.random_range(0..3);
            }
            let prm = DeblockParams::new(r.random_range(0..=63), bd);
            let t = timed(|| {
                (k.deblock_vertical)(&mut p.view_mut(), 0..h, &vg, &prm);
                (k.deblock_horizontal)(&mut p.view_mut(), 0..h, &hg, &prm);
            });
            (samples_of(&p), t)
        }
        "sao" => {
            let (w, h) = (8 * r.random_range(2..16), 8 * r.random_range(2..10));
            let src: Plane<P> = plane(r, w, h, bd);
            let mut dst = Plane::<P>::new(w, h, bd);
            let mode = match r.random_range(0..3) {
                0 => SaoMode::Off,
                1 => SaoMode::Band { start: r.random_range(0..=28) },
                _ => SaoMode::Edge { class: r.random_range(0..4) },
            };
            let offsets = if mode == SaoMode::Off { [0; 4] } else { std::array::from_fn(|_| r.random_range(-31..=31)) };
            let prm = SaoParams { mode, offsets };
            let rc = rect(r, w, h);
            let t = timed(|| (k.sao)(src.view(), &mut dst.view_mut(), rc, &prm, bd));
            (samples_of(&dst), t)
        }
        "alf" => {
            let (w, h) = (8 * r.random_range(2..16), 8 * r.random_range(2..10));
            let src: Plane<P> = plane(r, w, h, bd);
            let mut dst = Plane::<P>::new(w, h, bd);
            let c: [i16; 6] = std::array::from_fn(|_| r.random_range(-64..=64));
            let rc = rect(r, w, h);
            let t = timed(|| (k.alf)(src.view(), &mut dst.view_mut(), rc, &c, bd));
            (samples_of(&dst), t)
        }
        "ccalf" => {
            let (w, h) = (4 * r.random_range(2..16), 4 * r.random_range(2..10));
            let luma: Plane<P> = plane(r, 2 * w, 2 * h, bd);
            let chroma: Plane<P> = plane(r, w, h, bd);
            let mut dst = Plane::<P>::new(w, h, bd);
            let mut c = [0i8; 8];
            let mut budget = 128i32;
            for v in c.iter_mut() {
                let m = r.random_range(0..=budget.min(127));
                budget -= m;
                *v = if r.random() { m as i8 } else { -(m as i8) };
            }
            let rc = rect(r, w, h);
            let t = timed(|| (k.ccalf)(chroma.view(), luma.view(), &mut dst.view_mut(), rc, &c, bd));
            (samples_of(&dst), t)
        }
        "lmcs" => {
            let lut = lmcs_build_inverse(&lmcs_counts(r, bd), bd);
            let n = r.random_range(1..=4096);
            let src: Vec<P> = (0..n).map(|_| P::from_i32(r.random_range(0..=max))).collect();
            let mut o = vec![P::default(); n];
            let t = timed(|| (k.lmcs)(&lut, &src, &mut o));
            (o.iter().map(|s| s.to_i32()).collect(), t)
        }
        other => return Err(Error::Config(format!("unknown kernel '{other}'"))),
    };
    Ok(out)
}

/// Compares two tables of one storage path over `trials` seeds.
pub fn verify_tables<P: Pixel>(
    name: &str,
    trials: usize,
    seed_base: u64,
    bd_for: impl Fn(usize) -> u8,
    reference: &Kernels<P>,
    candidate: &Kernels<P>,
) -> Result<(Option<Divergence>, Duration, Duration)> {
    let (mut ta, mut tb) = (Duration::ZERO, Duration::ZERO);
    for i in 0..trials {
        let seed = seed_base.wrapping_add(i as u64);
        let bd = bd_for(i);
        let (a, da) = run_trial(name, reference, seed, bd)?;
        let (b, db) = run_trial(name, candidate, seed, bd)?;
        ta += da;
        tb += db;
        if let Some(pos) = a.iter().zip(&b).position(|(x, y)| x != y).or((a.len() != b.len()).then_some(a.len().min(b.len()))) {
            let d = Divergence {
                path: P::NAME,
                bit_depth: bd,
                seed,
                position: pos,
                expected: a.get(pos).copied().unwrap_or(-1),
                actual: b.get(pos).copied().unwrap_or(-1),
            };
            return Ok((Some(d), ta, tb));
        }
    }
    Ok((None, ta, tb))
}

/// Checks scalar against lane-parallel for `name` on both storage paths
/// (8-bit; 16-bit at bit depth 10, every fourth trial at 8).
pub fn verify_kernel_pair(name: &str, trials: usize) -> Result<KernelReport> {
    if !KERNEL_NAMES.contains(&name) {
        return Err(Error::Config(format!("unknown kernel '{name}'")));
    }
    let seed_base = 0x5eed_0000 + KERNEL_NAMES.iter().position(|&n| n == name).unwrap() as u64 * 1_000_003;
    let (d8, s8, v8) =
        verify_tables::<u8>(name, trials, seed_base, |_| 8, &Kernels::new(Variant::Scalar), &Kernels::new(Variant::Vector))?;
    let mut report = KernelReport {
        name: name.to_string(),
        trials,
        divergence: d8,
        scalar_ns: s8.as_nanos() as u64,
        vector_ns: v8.as_nanos() as u64,
    };
    if report.divergence.is_none() {
        let (d16, s16, v16) = verify_tables::<u16>(
            name,
            trials,
            seed_base ^ 0xa5a5,
            |i| if i % 4 == 3 { 8 } else { 10 },
            &Kernels::new(Variant::Scalar),
            &Kernels::new(Variant::Vector),
        )?;
        report.divergence = d16;
        report.scalar_ns += s16.as_nanos() as u64;
        report.vector_ns += v16.as_nanos() as u64;
    }
    Ok(report)
}
