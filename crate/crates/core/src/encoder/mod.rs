//! Test-stream encoder: quadtree mode decisions with an SSD + λ·bits cost,
//! motion and block-vector search, and filter parameter selection. The
//! reconstruction runs through the decoder's own block and filter code.

pub mod corpus;
mod filters;
mod rdo;
#[cfg(test)]
mod tests;

pub use filters::{pick_sao_params, ALF_CANDIDATES, CCALF_CANDIDATES};
pub use rdo::{lambda, motion_search_plane};

use crate::bitio::{ChromaFormat, PicType, PictureHeader, RangeEncoder, SequenceHeader, ToolFlags};
use crate::kernels::lmcs::{lmcs_build_forward, LmcsLut, LMCS_PIECES};
use crate::kernels::{Kernels, Plane, Variant};
use crate::pipeline::filter::build_edge_maps;
use crate::pipeline::recon::{PicInfo, PicPlanes};
use crate::pipeline::Frame;
use crate::syntax::{write_ctu, CtuCoder, PicParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gop {
    AllIntra,
    Ippp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmcsChoice {
    Identity,
    CannedContrast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderConfig {
    pub qp: u8,
    pub gop: Gop,
    pub tools: ToolFlags,
    pub log2_ctu: u8,
    pub lmcs: LmcsChoice,
    /// Code at most this many frames.
    pub frames: Option<usize>,
    /// Vertical motion range in integer luma samples.
    pub max_mv_y: u8,
    /// Reduced search: no 8×8 CUs, smaller motion and block-vector ranges.
    pub fast: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            qp: 32,
            gop: Gop::Ippp,
            tools: ToolFlags::all(),
            log2_ctu: 6,
            lmcs: LmcsChoice::CannedContrast,
            frames: None,
            max_mv_y: 32,
            fast: false,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self, chroma: ChromaFormat) -> Result<()> {
        if self.qp > 63 {
            return Err(Error::Config(format!("qp {} outside [0, 63]", self.qp)));
        }
        if !matches!(self.log2_ctu, 5 | 6) {
            return Err(Error::Config(format!("CTU size {} not 32 or 64", 1u32 << self.log2_ctu)));
        }
        if self.tools.ccalf() && !chroma.has_chroma() {
            return Err(Error::Config("CCALF requires 4:2:0 input".into()));
        }
        if self.tools.0 & !ToolFlags::ALL != 0 {
            return Err(Error::Config("unknown tool bits".into()));
        }
        Ok(())
    }
}

/// Raw input video: frames of tightly packed planes (Y, then Cb and Cr).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Video {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma: ChromaFormat,
    pub frames: Vec<Vec<Vec<u16>>>,
}

impl Video {
    pub fn plane_dims(&self, p: usize) -> (usize, usize) {
        if p == 0 {
            (self.width, self.height)
        } else {
            (self.width / 2, self.height / 2)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Config("no frames to encode".into()));
        }
        for f in &self.frames {
            if f.len() != self.chroma.num_planes() {
                return Err(Error::Config("frame plane count does not match the chroma format".into()));
            }
            for (p, pl) in f.iter().enumerate() {
                let (w, h) = self.plane_dims(p);
                if pl.len() != w * h {
                    return Err(Error::Config(format!("plane {p} holds {} samples, expected {}", pl.len(), w * h)));
                }
                if pl.iter().any(|&v| v as u32 >= 1 << self.bit_depth) {
                    return Err(Error::Config(format!("sample exceeds {}-bit range", self.bit_depth)));
                }
            }
        }
        Ok(())
    }
}

/// Codeword counts of the canned contrast-stretch LMCS table.
pub fn canned_lmcs(bit_depth: u8) -> [u16; LMCS_PIECES] {
    const D: [i32; LMCS_PIECES] = [-4, -2, 0, 2, 4, 4, 2, 0, 0, -2, -2, -2, 0, 0, 0, 0];
    let base = (1i32 << bit_depth) / 16;
    let unit = (1i32 << bit_depth) / 256;
    std::array::from_fn(|i| (base + D[i] * unit) as u16)
}

pub fn psnr(a: &[u16], b: &[u16], bit_depth: u8) -> f64 {
    let sse: f64 = a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum();
    if sse == 0.0 {
        return f64::INFINITY;
    }
    let max = ((1u32 << bit_depth) - 1) as f64;
    10.0 * (max * max * a.len() as f64 / sse).log10()
}

/// Mean luma PSNR over frames.
pub fn mean_psnr(video: &Video, recon: &[Frame]) -> f64 {
    let v: Vec<f64> = video.frames.iter().zip(recon).map(|(f, r)| psnr(&f[0], &r.planes[0], video.bit_depth).min(100.0)).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Encode `video`; returns the stream and the reconstruction the decoder
/// must reproduce.
pub fn encode_sequence(video: &Video, cfg: &EncoderConfig) -> Result<(Vec<u8>, Vec<Frame>)> {
    video.validate()?;
    cfg.validate(video.chroma)?;
    let count = cfg.frames.map_or(video.frames.len(), |n| n.min(video.frames.len()));
    if count == 0 {
        return Err(Error::Config("no frames to encode".into()));
    }
    let seq = SequenceHeader {
        width: u16::try_from(video.width).map_err(|_| Error::Config("width too large".into()))?,
        height: u16::try_from(video.height).map_err(|_| Error::Config("height too large".into()))?,
        bit_depth: video.bit_depth,
        chroma_format: video.chroma,
        log2_ctu_size: cfg.log2_ctu,
        frame_count: count as u32,
        tools: cfg.tools,
        max_mv_y: cfg.max_mv_y,
    };
    seq.validate().map_err(|e| Error::Config(e.to_string()))?;
    let mut out = seq.to_bytes()?;
    let k = Kernels::<u16>::new(Variant::Vector);
    let mut prev: Option<PicPlanes<u16>> = None;
    let mut recon = Vec::with_capacity(count);
    for n in 0..count {
        let pic_type = if n > 0 && cfg.gop == Gop::Ippp { PicType::P } else { PicType::I };
        let mut hdr = PictureHeader::new(pic_type, n as u32, cfg.qp);
        if cfg.tools.lmcs() {
            hdr.lmcs = Some(match cfg.lmcs {
                LmcsChoice::Identity => crate::kernels::lmcs::uniform_counts(video.bit_depth),
                LmcsChoice::CannedContrast => canned_lmcs(video.bit_depth),
            });
        }
        let src: Vec<Plane<u16>> = video.frames[n]
            .iter()
            .enumerate()
            .map(|(p, d)| {
                let (w, h) = video.plane_dims(p);
                Plane::from_samples(w, h, video.bit_depth, d)
            })
            .collect();
        let fwd = hdr.lmcs.as_ref().map(|cw| lmcs_build_forward(cw, video.bit_depth));
        let (planes, hdr, ctus) = encode_picture(&k, &seq, hdr, &src, fwd.as_ref(), prev.as_ref(), cfg)?;
        let pp = PicParams::new(&seq, &hdr);
        let mut enc = RangeEncoder::new();
        let mut cc = CtuCoder::new(pp);
        for ctu in &ctus {
            write_ctu(&mut enc, &mut cc, ctu)?;
        }
        hdr.write_unit(&seq, &enc.finish(), &mut out)?;
        // SAFETY: single-threaded; the planes are exclusively ours.
        let planes_out = unsafe { planes.final_samples() };
        recon.push(Frame {
            index: n,
            poc: n as u32,
            width: video.width,
            height: video.height,
            bit_depth: video.bit_depth,
            chroma: video.chroma,
            planes: planes_out,
        });
        prev = Some(planes);
    }
    Ok((out, recon))
}

#[allow(clippy::type_complexity)]
fn encode_picture(
    k: &Kernels<u16>,
    seq: &SequenceHeader,
    mut hdr: PictureHeader,
    src: &[Plane<u16>],
    fwd: Option<&LmcsLut>,
    prev: Option<&PicPlanes<u16>>,
    cfg: &EncoderConfig,
) -> Result<(PicPlanes<u16>, PictureHeader, Vec<crate::syntax::ParsedCtu>)> {
    let info = PicInfo::new(seq, &hdr);
    let planes = PicPlanes::<u16>::new(&info);
    let mut target = src.to_vec();
    if let Some(lut) = fwd {
        let t = &mut target[0];
        for y in 0..t.height() {
            for x in 0..t.width() {
                let v = lut.map(t.get(x, y));
                t.set(x, y, v);
            }
        }
    }
    // SAFETY: the previous picture is complete and only read from here on.
    let refs = match (prev, hdr.pic_type) {
        (Some(p), PicType::P) => Some(unsafe { p.final_rows(info.pp.height) }),
        _ => None,
    };
    let mut ctus = {
        let mut pe = rdo::PicEnc::new(k, &info, &planes, &target, refs.as_deref(), cfg);
        let mut ctus = Vec::with_capacity(info.pp.ctu_rows() * info.pp.ctu_cols());
        for r in 0..info.pp.ctu_rows() {
            for c in 0..info.pp.ctu_cols() {
                ctus.push(pe.encode_ctu(r, c));
            }
        }
        ctus
    };
    let edges = build_edge_maps(&info, &ctus);
    // SAFETY: as above.
    unsafe { filters::select_and_apply(k, &info, &planes, &mut ctus, &edges, src, &mut hdr) };
    Ok((planes, hdr, ctus))
}
