use super::corpus::{standard_corpus, synth, Content};
use super::*;
use crate::bitio::SequenceHeader;
use crate::kernels::sao::{Rect, SaoMode};
use crate::pipeline::{decode_stream, split_units, DecoderConfig};
use crate::syntax::{parse_ctu, CuMode, MotionField};

fn decode(stream: &[u8]) -> Vec<Frame> {
    decode_stream(stream, DecoderConfig::with_workers(2)).expect("decode").1
}

fn small(content: Content, bd: u8, frames: usize) -> Video {
    synth(content, 64, 48, bd, ChromaFormat::Yuv420, frames, 11)
}

#[test]
fn decoder_reproduces_encoder_reconstruction() {
    for e in standard_corpus() {
        let (stream, recon) = encode_sequence(&e.video, &e.config).unwrap();
        let dec = decode(&stream);
        assert_eq!(dec.len(), recon.len(), "{}", e.name);
        for (a, b) in dec.iter().zip(&recon) {
            assert_eq!(a.planes, b.planes, "{} frame {}", e.name, a.index);
        }
    }
}

#[test]
fn intra_noise_closes() {
    let v = synth(Content::Noise, 64, 64, 8, ChromaFormat::Yuv420, 3, 9);
    let cfg = EncoderConfig { qp: 30, gop: Gop::AllIntra, ..EncoderConfig::default() };
    let (stream, recon) = encode_sequence(&v, &cfg).unwrap();
    let dec = decode(&stream);
    assert_eq!(dec.len(), 3);
    for (a, b) in dec.iter().zip(&recon) {
        assert_eq!(a.planes, b.planes);
    }
}

#[test]
fn encoding_is_deterministic() {
    let v = small(Content::Screen, 8, 2);
    let cfg = EncoderConfig { qp: 28, ..EncoderConfig::default() };
    assert_eq!(encode_sequence(&v, &cfg).unwrap().0, encode_sequence(&v, &cfg).unwrap().0);
}

#[test]
fn quality_falls_with_qp() {
    let v = small(Content::MovingBlocks, 8, 2);
    let mut last = f64::INFINITY;
    for qp in [0, 16, 32, 48] {
        let cfg = EncoderConfig { qp, ..EncoderConfig::default() };
        let (_, recon) = encode_sequence(&v, &cfg).unwrap();
        let p = mean_psnr(&v, &recon);
        assert!(p <= last + 0.1, "qp {qp}: {p} after {last}");
        last = p;
    }
    let at = |qp| mean_psnr(&v, &encode_sequence(&v, &EncoderConfig { qp, ..EncoderConfig::default() }).unwrap().1);
    assert!(at(0) > at(50) + 10.0);
}

#[test]
fn stream_size_falls_with_qp() {
    let v = small(Content::Gradient, 10, 2);
    let size = |qp| encode_sequence(&v, &EncoderConfig { qp, ..EncoderConfig::default() }).unwrap().0.len();
    assert!(size(10) > size(30));
    assert!(size(30) > size(50));
}

#[test]
fn rejects_bad_input() {
    let mut v = small(Content::Gradient, 8, 1);
    let cfg = EncoderConfig::default();
    assert!(encode_sequence(&v, &EncoderConfig { qp: 64, ..cfg.clone() }).is_err());
    assert!(encode_sequence(&v, &EncoderConfig { log2_ctu: 4, ..cfg.clone() }).is_err());
    assert!(encode_sequence(&v, &EncoderConfig { frames: Some(0), ..cfg.clone() }).is_err());
    v.frames[0][1].pop();
    assert!(encode_sequence(&v, &cfg).is_err());
    v.frames.clear();
    assert!(encode_sequence(&v, &cfg).is_err());
    let mono = synth(Content::Gradient, 64, 48, 8, ChromaFormat::Monochrome, 1, 1);
    assert!(encode_sequence(&mono, &cfg).is_err());
    let no_cc = EncoderConfig { tools: ToolFlags(ToolFlags::ALL & !ToolFlags::CCALF), ..cfg };
    assert!(encode_sequence(&mono, &no_cc).is_ok());
}

fn parse_all(stream: &[u8]) -> (SequenceHeader, Vec<(PictureHeader, Vec<crate::syntax::ParsedCtu>)>) {
    let (seq, rest) = SequenceHeader::parse(stream).unwrap();
    let mut out = Vec::new();
    for unit in split_units(rest).unwrap() {
        let (hdr, payload, _) = PictureHeader::parse_unit(&seq, unit).unwrap();
        let pp = PicParams::new(&seq, &hdr);
        let mut dec = crate::bitio::RangeDecoder::new(payload).unwrap();
        let mut cc = CtuCoder::new(pp);
        let cols = pp.ctu_cols();
        let ctus = (0..pp.ctu_rows() * cols).map(|i| parse_ctu(&mut dec, &mut cc, i / cols, i % cols).unwrap()).collect();
        out.push((hdr, ctus));
    }
    (seq, out)
}

#[test]
fn flat_picture_is_not_split() {
    let mut v = small(Content::Gradient, 8, 1);
    for p in v.frames[0].iter_mut() {
        p.fill(128);
    }
    let cfg = EncoderConfig { gop: Gop::AllIntra, tools: ToolFlags::none(), qp: 30, ..EncoderConfig::default() };
    let (stream, recon) = encode_sequence(&v, &cfg).unwrap();
    let (_, pics) = parse_all(&stream);
    for ctu in &pics[0].1 {
        for cu in &ctu.cus {
            // Full CUs stay whole; only the picture edge forces smaller ones.
            assert!(cu.size == 64 || cu.y + 64 > 48, "{cu:?}");
        }
    }
    assert!(recon[0].planes[0].iter().all(|&s| s == 128));
}

#[test]
fn static_scene_uses_the_predictor() {
    let v = synth(Content::MovingBlocks, 64, 48, 8, ChromaFormat::Yuv420, 1, 3);
    let mut v2 = v.clone();
    v2.frames.push(v.frames[0].clone());
    let cfg = EncoderConfig { qp: 20, tools: ToolFlags::none(), ..EncoderConfig::default() };
    let (stream, _) = encode_sequence(&v2, &cfg).unwrap();
    let (_, pics) = parse_all(&stream);
    let mut mf = MotionField::new(64, 48);
    for ctu in &pics[1].1 {
        for cu in &ctu.cus {
            if let CuMode::Inter { mv } = cu.mode {
                assert_eq!(mv, crate::syntax::derive_mvp(&mf, cu.x, cu.y, cu.size));
                mf.set_block(cu.x, cu.y, cu.size, Some(mv));
            } else {
                mf.set_block(cu.x, cu.y, cu.size, None);
            }
        }
    }
}

#[test]
fn motion_search_finds_a_shift() {
    // Frame 1 is frame 0 moved right by two samples: mv (-8, 0) in quarter units.
    let v = synth(Content::MovingBlocks, 64, 64, 8, ChromaFormat::Yuv420, 1, 5);
    let src = Plane::<u16>::from_samples(64, 64, 8, &v.frames[0][0]);
    let mut moved = Plane::<u16>::new(64, 64, 8);
    for y in 0..64 {
        for x in 0..64 {
            moved.set(x, y, src.get(x.saturating_sub(2), y));
        }
    }
    let k = Kernels::<u16>::new(Variant::Scalar);
    let mv = motion_search_plane(&k, &moved, src.view(), 16, 16, 16, (0, 0), 8, 128, 8);
    assert_eq!(mv, (-8, 0));
    let mv = motion_search_plane(&k, &moved, src.view(), 16, 16, 16, (-4, 0), 8, 128, 8);
    assert_eq!(mv, (-8, 0));
}

#[test]
fn motion_search_never_loses_to_the_predictor() {
    let a = synth(Content::MovingBlocks, 64, 64, 8, ChromaFormat::Monochrome, 2, 8);
    let cur = Plane::<u16>::from_samples(64, 64, 8, &a.frames[1][0]);
    let refp = Plane::<u16>::from_samples(64, 64, 8, &a.frames[0][0]);
    let k = Kernels::<u16>::new(Variant::Scalar);
    let sad = |mv: (i32, i32)| {
        let mut buf = vec![0u16; 256];
        (k.interp_luma)(refp.view(), 24, 8, mv.0, mv.1, 16, 16, 8, &mut buf);
        (0..256).map(|i| (cur.get(24 + i % 16, 8 + i / 16) - buf[i] as i32).unsigned_abs()).sum::<u32>()
    };
    for mvp in [(0, 0), (5, -3), (-13, 7), (40, 0)] {
        let mv = motion_search_plane(&k, &cur, refp.view(), 24, 8, 16, mvp, 8, 128, 8);
        assert!(sad(mv) <= sad(mvp), "{mvp:?} -> {mv:?}");
    }
}

#[test]
fn sao_stays_off_on_exact_input() {
    let v = small(Content::Screen, 8, 1);
    let src = Plane::<u16>::from_samples(64, 48, 8, &v.frames[0][0]);
    let prm = pick_sao_params(src.view(), &src, Rect::new(0, 0, 64, 48), 8);
    assert_eq!(prm.mode, SaoMode::Off);
}

#[test]
fn sao_corrects_a_band_shift() {
    let mut src = Plane::<u16>::new(32, 32, 8);
    for y in 0..32 {
        for x in 0..32 {
            src.set(x, y, 100 + ((x + y) % 4) as i32);
        }
    }
    let mut rec = src.clone();
    for y in 0..32 {
        for x in 0..32 {
            rec.set(x, y, src.get(x, y) - 5);
        }
    }
    let prm = pick_sao_params(rec.view(), &src, Rect::new(0, 0, 32, 32), 8);
    assert!(matches!(prm.mode, SaoMode::Band { .. }), "{prm:?}");
    assert!(prm.is_valid());
    assert!(prm.offsets.contains(&5));
}

#[test]
fn sao_offsets_stay_in_range() {
    let v = small(Content::Noise, 10, 1);
    let src = Plane::<u16>::from_samples(64, 48, 10, &v.frames[0][0]);
    let rec = Plane::<u16>::filled(64, 48, 10, 0);
    let prm = pick_sao_params(rec.view(), &src, Rect::new(0, 0, 64, 48), 10);
    assert!(prm.is_valid(), "{prm:?}");
}

#[test]
fn lossless_pictures_keep_filters_off() {
    let mut v = small(Content::Gradient, 8, 1);
    for p in v.frames[0].iter_mut() {
        p.fill(90);
    }
    let cfg = EncoderConfig { gop: Gop::AllIntra, qp: 0, lmcs: LmcsChoice::Identity, ..EncoderConfig::default() };
    let (stream, recon) = encode_sequence(&v, &cfg).unwrap();
    let (_, pics) = parse_all(&stream);
    let (hdr, ctus) = &pics[0];
    assert!(hdr.alf.is_none() && hdr.ccalf.is_none());
    assert!(ctus.iter().all(|c| c.sao.iter().all(|s| s.mode == SaoMode::Off)));
    assert_eq!(recon[0].planes, v.frames[0]);
}

#[test]
fn corpus_covers_the_syntax() {
    use std::collections::BTreeSet;
    let mut seen = BTreeSet::new();
    for e in standard_corpus() {
        let (stream, recon) = encode_sequence(&e.video, &e.config).unwrap();
        eprintln!("{:<20} {:>6} bytes  {:.2} dB", e.name, stream.len(), mean_psnr(&e.video, &recon));
        let (_, pics) = parse_all(&stream);
        for (hdr, ctus) in &pics {
            if hdr.alf.is_some() {
                seen.extend(ctus.iter().map(|c| format!("alf {}", c.alf)));
            }
            if hdr.ccalf.is_some() {
                seen.extend(ctus.iter().flat_map(|c| c.ccalf.map(|f| format!("ccalf {f}"))));
            }
            for ctu in ctus {
                for s in &ctu.sao {
                    seen.insert(match s.mode {
                        SaoMode::Off => "sao off",
                        SaoMode::Band { .. } => "sao band",
                        SaoMode::Edge { .. } => "sao edge",
                    }.to_string());
                }
                if ctu.cus.iter().any(|c| c.size < 1 << e.config.log2_ctu) {
                    seen.insert("split".into());
                }
                for cu in &ctu.cus {
                    seen.insert(match cu.mode {
                        CuMode::Intra(_) => "intra",
                        CuMode::Inter { .. } => "inter",
                        CuMode::Ibc { .. } => "ibc",
                        CuMode::Bdpcm(_) => "bdpcm",
                    }.to_string());
                    seen.insert(format!("mts {}", cu.mts_idx));
                }
            }
        }
    }
    let want = [
        "alf false", "alf true", "bdpcm", "ccalf false", "ccalf true", "ibc", "inter", "intra", "mts 0", "mts 1", "mts 2",
        "sao band", "sao edge", "sao off", "split",
    ];
    let missing: Vec<_> = want.iter().filter(|w| !seen.contains(**w)).collect();
    assert!(missing.is_empty(), "never coded: {missing:?}");
}

#[test]
fn canned_lmcs_is_a_valid_table() {
    for bd in [8, 10] {
        let cw = canned_lmcs(bd);
        assert_eq!(cw.iter().map(|&c| c as u32).sum::<u32>(), 1 << bd);
    }
}
