//! Seeded synthetic sources and the standard set of small test streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EncoderConfig, Gop, Video};
use crate::bitio::{ChromaFormat, ToolFlags};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Content {
    /// Smooth diagonal gradient with a slow drift.
    Gradient,
    /// Textured squares moving over a textured background.
    MovingBlocks,
    /// Glyph-like patterns on flat regions, with repeats.
    Screen,
    /// Uniform noise.
    Noise,
}

fn frame_luma(content: Content, w: usize, h: usize, bd: u8, t: usize, rng: &mut ChaCha8Rng, tex: &[i32]) -> Vec<u16> {
    let max = (1i32 << bd) - 1;
    let scale = 1i32 << (bd - 8);
    let mut out = vec![0u16; w * h];
    match content {
        Content::Gradient => {
            for y in 0..h {
                for x in 0..w {
                    let v = 32 + (x * 160 / w.max(1)) as i32 + (y * 48 / h.max(1)) as i32 + 2 * t as i32;
                    out[y * w + x] = (v * scale).clamp(0, max) as u16;
                }
            }
        }
        Content::MovingBlocks => {
            let tw = 64;
            for y in 0..h {
                for x in 0..w {
                    let bg = 60 + tex[(y % tw) * tw + (x % tw)] / 2 + (x as i32 / 4);
                    out[y * w + x] = (bg * scale).clamp(0, max) as u16;
                }
            }
            let blocks = [(8usize, 8usize, 3i32, 2i32, 24usize), (w / 2, h / 3, -2, 1, 16)];
            for (bx, by, dx, dy, s) in blocks {
                let ox = (bx as i32 + dx * t as i32).rem_euclid(w as i32) as usize;
                let oy = (by as i32 + dy * t as i32).rem_euclid(h as i32) as usize;
                for j in 0..s {
                    for i in 0..s {
                        let (x, y) = (ox + i, oy + j);
                        if x < w && y < h {
                            let v = 180 + tex[(j * 7 % tw) * tw + (i * 5 % tw)] / 3;
                            out[y * w + x] = (v * scale).clamp(0, max) as u16;
                        }
                    }
                }
            }
        }
        Content::Screen => {
            for v in out.iter_mut() {
                *v = (235 * scale) as u16;
            }
            let glyphs: Vec<[u8; 8]> = (0..6).map(|g| std::array::from_fn(|r| (tex[g * 8 + r] as u8).wrapping_mul(37) | 0x18)).collect();
            for line in 0..h / 12 {
                for col in 0..w / 10 {
                    if (line + col) % 5 == 4 {
                        continue;
                    }
                    let g = &glyphs[(line * 3 + col + t / 2) % glyphs.len()];
                    for (r, bits) in g.iter().enumerate() {
                        for b in 0..8 {
                            if bits >> b & 1 == 1 {
                                let (x, y) = (col * 10 + b + 1, line * 12 + r + 2);
                                if x < w && y < h {
                                    out[y * w + x] = (16 * scale) as u16;
                                }
                            }
                        }
                    }
                }
            }
            for y in h * 3 / 4..h {
                for x in 0..w / 3 {
                    out[y * w + x] = (90 * scale) as u16;
                }
            }
        }
        Content::Noise => {
            for v in out.iter_mut() {
                *v = rng.random_range(0..=max) as u16;
            }
        }
    }
    out
}

/// `frames` pictures of the given content; chroma planes are smooth fields.
pub fn synth(content: Content, width: usize, height: usize, bit_depth: u8, chroma: ChromaFormat, frames: usize, seed: u64) -> Video {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tex: Vec<i32> = (0..64 * 64).map(|_| rng.random_range(0..128)).collect();
    let scale = 1u32 << (bit_depth - 8);
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut planes = vec![frame_luma(content, width, height, bit_depth, t, &mut rng, &tex)];
        if chroma.has_chroma() {
            let (cw, ch) = (width / 2, height / 2);
            for p in 0..2 {
                let plane = (0..cw * ch)
                    .map(|i| {
                        let (x, y) = (i % cw, i / cw);
                        let base = if p == 0 { 100 + x * 40 / cw.max(1) } else { 150 - y * 40 / ch.max(1) };
                        (base as u32 + t as u32) as u16 * scale as u16
                    })
                    .collect();
                planes.push(plane);
            }
        }
        out.push(planes);
    }
    Video { width, height, bit_depth, chroma, frames: out }
}

pub struct CorpusEntry {
    pub name: String,
    pub video: Video,
    pub config: EncoderConfig,
}

/// Small streams covering I-only and IPPP coding, 8 and 10 bits, and tool
/// combinations including IBC and BDPCM.
pub fn standard_corpus() -> Vec<CorpusEntry> {
    let tools = |s: &str| ToolFlags::parse_list(s).expect("tool list");
    let specs: [(&str, Content, u8, ChromaFormat, Gop, &str, u8, u8); 12] = [
        ("gradient_i_8", Content::Gradient, 8, ChromaFormat::Yuv420, Gop::AllIntra, "all", 27, 6),
        ("gradient_p_10", Content::Gradient, 10, ChromaFormat::Yuv420, Gop::Ippp, "all", 32, 6),
        ("blocks_p_8", Content::MovingBlocks, 8, ChromaFormat::Yuv420, Gop::Ippp, "all", 30, 6),
        ("blocks_p_10", Content::MovingBlocks, 10, ChromaFormat::Yuv420, Gop::Ippp, "dblk,sao,alf", 28, 5),
        ("blocks_i_8_none", Content::MovingBlocks, 8, ChromaFormat::Yuv420, Gop::AllIntra, "none", 22, 5),
        ("screen_i_8_ibc", Content::Screen, 8, ChromaFormat::Yuv420, Gop::AllIntra, "ibc,bdpcm,dblk", 24, 5),
        ("screen_i_10_ibc", Content::Screen, 10, ChromaFormat::Yuv420, Gop::AllIntra, "ibc,bdpcm,sao", 30, 6),
        ("screen_p_8", Content::Screen, 8, ChromaFormat::Yuv420, Gop::Ippp, "all", 34, 6),
        ("noise_i_8", Content::Noise, 8, ChromaFormat::Yuv420, Gop::AllIntra, "dblk,sao", 37, 5),
        ("noise_p_10_mono", Content::Noise, 10, ChromaFormat::Monochrome, Gop::Ippp, "dblk,sao,alf,lmcs,bdpcm", 40, 5),
        ("gradient_i_10_mono", Content::Gradient, 10, ChromaFormat::Monochrome, Gop::AllIntra, "lmcs,alf,ibc", 20, 6),
        ("blocks_p_8_lmcs", Content::MovingBlocks, 8, ChromaFormat::Yuv420, Gop::Ippp, "lmcs,ccalf,alf,dblk", 26, 6),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(i, &(name, content, bd, chroma, gop, tl, qp, log2_ctu))| {
            let frames = if gop == Gop::Ippp { 3 } else { 2 };
            let (w, h) = if i % 3 == 0 { (96, 72) } else { (80, 64) };
            CorpusEntry {
                name: name.to_string(),
                video: synth(content, w, h, bd, chroma, frames, 0x7ec0 + i as u64),
                config: EncoderConfig { qp, gop, tools: tools(tl), log2_ctu, max_mv_y: 16, ..EncoderConfig::default() },
            }
        })
        .collect()
}
