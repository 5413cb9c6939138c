//! Single-threaded decoding: CTUs in raster order and each filter applied
//! to the whole picture at once. Also random-syntax stream generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitio::{ChromaFormat, PicType, PictureHeader, RangeDecoder, RangeEncoder, SequenceHeader};
use crate::kernels::{Kernels, Pixel, Variant};
use crate::syntax::fuzz::random_ctu;
use crate::syntax::{parse_ctu, write_ctu, CtuCoder, PicParams};
use crate::{Error, Result};

use super::decoder::{split_units, Frame};
use super::filter::{build_edge_maps, filter_picture};
use super::profile::Profiler;
use super::recon::{recon_ctu, PicInfo, PicPlanes, Scratch};

pub fn decode_serial(data: &[u8], wide: bool, variant: Variant) -> Result<Vec<Frame>> {
    let (seq, rest) = SequenceHeader::parse(data)?;
    if seq.bit_depth == 8 && !wide {
        serial_path::<u8>(&seq, rest, variant)
    } else {
        serial_path::<u16>(&seq, rest, variant)
    }
}

fn serial_path<P: Pixel>(seq: &SequenceHeader, units: &[u8], variant: Variant) -> Result<Vec<Frame>> {
    let k = Kernels::<P>::new(variant);
    let prof = Profiler::new(false);
    let mut prev: Option<PicPlanes<P>> = None;
    let mut frames = vec![];
    let mut scratch = Scratch::default();
    for (index, unit) in split_units(units)?.into_iter().enumerate() {
        let (hdr, payload, _) = PictureHeader::parse_unit(seq, unit)?;
        let info = PicInfo::new(seq, &hdr);
        if hdr.pic_type == PicType::P && prev.is_none() {
            return Err(Error::format("pic_type", "first picture is not an I-picture"));
        }
        let picture_err = |e: Error| Error::Picture { picture: index, source: Box::new(e) };
        let mut dec = RangeDecoder::new(payload).map_err(picture_err)?;
        let mut cc = CtuCoder::new(info.pp);
        let mut ctus = vec![];
        for r in 0..info.pp.ctu_rows() {
            for c in 0..info.pp.ctu_cols() {
                ctus.push(parse_ctu(&mut dec, &mut cc, r, c).map_err(picture_err)?);
            }
        }
        let planes = PicPlanes::<P>::new(&info);
        // SAFETY: single-threaded; every plane is exclusively ours.
        unsafe {
            let refs = match (&prev, hdr.pic_type) {
                (Some(p), PicType::P) => Some(p.final_rows(info.pp.height)),
                _ => None,
            };
            for ctu in &ctus {
                recon_ctu(&k, &info, &planes, refs.as_deref(), ctu, &|_| None, &mut scratch, &prof);
            }
            filter_picture(&k, &info, &planes, &ctus, &build_edge_maps(&info, &ctus));
            frames.push(Frame {
                index,
                poc: hdr.poc,
                width: info.pp.width,
                height: info.pp.height,
                bit_depth: seq.bit_depth,
                chroma: seq.chroma_format,
                planes: planes.final_samples(),
            });
        }
        prev = Some(planes);
    }
    Ok(frames)
}

/// Stream of random valid syntax: every CU mode, residual and filter
/// parameter drawn at random. Picture 0 is intra, later ones follow `gop_p`.
pub fn random_stream(seed: u64, seq: &SequenceHeader, gop_p: bool) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = seq.to_bytes().unwrap();
    for n in 0..seq.frame_count {
        let pic_type = if n > 0 && gop_p { PicType::P } else { PicType::I };
        let mut hdr = PictureHeader::new(pic_type, n, rng.random_range(0..=51));
        if seq.tools.lmcs() && rng.random_bool(0.7) {
            hdr.lmcs = Some(random_lmcs(&mut rng, seq.bit_depth));
        }
        if seq.tools.alf() && rng.random_bool(0.8) {
            hdr.alf = Some(std::array::from_fn(|_| rng.random_range(-10..=10)));
        }
        if seq.tools.ccalf() && seq.chroma_format == ChromaFormat::Yuv420 && rng.random_bool(0.8) {
            hdr.ccalf = Some(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-16..=16))));
        }
        let pp = PicParams::new(seq, &hdr);
        let mut enc = RangeEncoder::new();
        let mut cc = CtuCoder::new(pp);
        for r in 0..pp.ctu_rows() {
            for c in 0..pp.ctu_cols() {
                let ctu = random_ctu(&mut rng, &pp, r, c);
                write_ctu(&mut enc, &mut cc, &ctu).unwrap();
            }
        }
        hdr.write_unit(seq, &enc.finish(), &mut out).unwrap();
    }
    out
}

/// Valid codeword counts: uniform pieces with random transfers between them.
pub fn random_lmcs<R: Rng>(rng: &mut R, bit_depth: u8) -> [u16; 16] {
    let base = (1u16 << bit_depth) / 16;
    let mut cw = [base; 16];
    for _ in 0..32 {
        let (a, b) = (rng.random_range(0..16), rng.random_range(0..16));
        let amt = rng.random_range(0..=base / 4);
        if cw[a] > amt {
            cw[a] -= amt;
            cw[b] += amt;
        }
    }
    cw
}
