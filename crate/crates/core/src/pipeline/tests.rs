use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::filter::{band_limits, build_edge_maps, filter_picture, filter_row};
use super::graph::*;
use super::pool::JobQueue;
use super::profile::{Profiler, Stage};
use super::recon::{mc_predict, PicInfo, PicPlanes};
use super::reference::{decode_serial, random_stream};
use super::store::SharedPlane;
use super::*;
use crate::bitio::{ChromaFormat, PicType, PictureHeader, RangeEncoder, SequenceHeader, ToolFlags};
use crate::kernels::{Kernels, Pixel, Plane, Variant};
use crate::syntax::fuzz::random_ctu;
use crate::syntax::{wavefront_precedes, write_ctu, CtuCoder, CuMode, IntraMode, ParsedCtu, ParsedCu, PicParams, SaoParams};

fn seq(w: u16, h: u16, bd: u8, chroma: bool, log2_ctu: u8, frames: u32, tools: u8) -> SequenceHeader {
    SequenceHeader {
        width: w,
        height: h,
        bit_depth: bd,
        chroma_format: if chroma { ChromaFormat::Yuv420 } else { ChromaFormat::Monochrome },
        log2_ctu_size: log2_ctu,
        frame_count: frames,
        tools: ToolFlags(tools),
        max_mv_y: 24,
    }
}

fn shape(rows: usize, cols: usize) -> GridShape {
    GridShape { rows, cols, ctu: 64, height: rows * 64, max_mv_y: 64 }
}

#[test]
fn wavefront_dep_examples() {
    assert!(wavefront_deps(0, 0, 3, 4).is_empty());
    assert_eq!(wavefront_deps(1, 0, 3, 4), vec![(0, 1)]);
    assert_eq!(wavefront_deps(2, 3, 3, 4), vec![(2, 2), (1, 3)]);
}

#[test]
fn wavefront_closure_exhaustive() {
    for rows in 1..=8 {
        for cols in 1..=8 {
            for r in 0..rows {
                for c in 0..cols {
                    let mut seen = BTreeSet::new();
                    let mut stack = vec![(r, c)];
                    while let Some((a, b)) = stack.pop() {
                        for d in wavefront_deps(a, b, rows, cols) {
                            if seen.insert(d) {
                                stack.push(d);
                            }
                        }
                    }
                    for r2 in 0..rows {
                        for c2 in 0..cols {
                            let expect = (r2 < r && c2 <= c + (r - r2)) || (r2 == r && c2 < c);
                            assert_eq!(seen.contains(&(r2, c2)), expect, "{rows}x{cols} ({r},{c}) <- ({r2},{c2})");
                            assert_eq!(expect, wavefront_precedes(r2, c2, r, c, cols));
                        }
                    }
                }
            }
        }
    }
}

/// Steps of unbounded parallel execution; returns the widest step of ReconCtu jobs.
fn max_parallel_recon(jobs: &[JobSpec]) -> usize {
    let mut done: BTreeSet<JobKind> = BTreeSet::new();
    let mut widest = 0;
    while done.len() < jobs.len() {
        let ready: Vec<JobKind> =
            jobs.iter().filter(|j| !done.contains(&j.kind) && j.deps.iter().all(|d| done.contains(d))).map(|j| j.kind).collect();
        assert!(!ready.is_empty(), "stuck");
        widest = widest.max(ready.iter().filter(|k| matches!(k, JobKind::ReconCtu(..))).count());
        done.extend(ready);
    }
    widest
}

#[test]
fn job_graph_two_by_three() {
    let jobs = build_job_graph(0, PicType::I, shape(2, 3));
    let deps = |k: JobKind| jobs.iter().find(|j| j.kind == k).unwrap().deps.clone();
    assert_eq!(deps(JobKind::ReconCtu(0, 0, 0)), vec![JobKind::ParsePicture(0)]);
    assert_eq!(deps(JobKind::ReconCtu(0, 1, 0)), vec![JobKind::ParsePicture(0), JobKind::ReconCtu(0, 0, 1)]);
    assert_eq!(max_parallel_recon(&jobs), 2);
    assert!(jobs.iter().all(|j| j.gate.is_none()));
    assert!(is_acyclic(&jobs));
}

#[test]
fn job_graph_single_ctu_is_a_chain() {
    let jobs = build_job_graph(3, PicType::I, shape(1, 1));
    let kinds: Vec<JobKind> = jobs.iter().map(|j| j.kind).collect();
    assert_eq!(kinds, vec![JobKind::ParsePicture(3), JobKind::ReconCtu(3, 0, 0), JobKind::FilterRow(3, 0), JobKind::OutputPicture(3)]);
    for w in jobs.windows(2) {
        assert_eq!(w[1].deps, vec![w[0].kind]);
    }
}

#[test]
fn p_picture_gate_rows() {
    let g = GridShape { rows: 17, cols: 30, ctu: 64, height: 1080, max_mv_y: 64 };
    let jobs = build_job_graph(5, PicType::P, g);
    let gate = |r: usize| jobs.iter().find(|j| j.kind == JobKind::ReconCtu(5, r, 0)).unwrap().gate;
    assert_eq!(gate(0), Some((4, 132)));
    assert_eq!(gate(16), Some((4, 1080)));
}

#[test]
fn job_graphs_are_acyclic_and_cycles_are_detected() {
    for rows in 1..6 {
        for cols in 1..6 {
            assert!(is_acyclic(&build_job_graph(0, PicType::P, shape(rows, cols))));
        }
    }
    let mut jobs = build_job_graph(0, PicType::I, shape(2, 2));
    jobs[1].deps.push(JobKind::OutputPicture(0));
    assert!(!is_acyclic(&jobs));
}

#[test]
fn queue_is_fifo() {
    let q = std::sync::Arc::new(JobQueue::default());
    let q2 = q.clone();
    let consumer = std::thread::spawn(move || {
        let mut got = vec![];
        while let Some(v) = q2.pop() {
            got.push(v);
        }
        got
    });
    for i in 0..10_000 {
        q.push(i);
        if i % 1000 == 0 {
            q.push_all(std::iter::empty());
        }
    }
    q.close();
    assert_eq!(consumer.join().unwrap(), (0..10_000).collect::<Vec<_>>());
}

#[test]
fn finalized_rows_formula() {
    let s = seq(256, 200, 8, true, 6, 1, 0);
    let info = PicInfo::new(&s, &PictureHeader::new(PicType::I, 0, 30));
    assert_eq!(band_limits(&info, Some(0)).finalized, 56);
    assert_eq!(band_limits(&info, Some(2)).finalized, 184);
    assert_eq!(band_limits(&info, Some(3)).finalized, 200);
}

fn random_planes<P: Pixel>(info: &PicInfo, rng: &mut ChaCha8Rng) -> PicPlanes<P> {
    let mut planes = PicPlanes::<P>::new(info);
    let max = (1 << info.bit_depth) - 1;
    for p in 0..info.pp.num_planes() {
        let (w, h) = info.plane_dims(p);
        let mut pl = Plane::<P>::new(w, h, info.bit_depth);
        let smooth = rng.random_bool(0.5);
        for y in 0..h {
            for x in 0..w {
                let v = if smooth { ((x * 3 + y * 5) as i32 + rng.random_range(-6..6)).rem_euclid(max) } else { rng.random_range(0..=max) };
                pl.set(x, y, v);
            }
        }
        planes.dbk[p] = SharedPlane::new(pl);
    }
    planes
}

fn random_picture(rng: &mut ChaCha8Rng, s: &SequenceHeader) -> (PicInfo, Vec<ParsedCtu>) {
    let mut hdr = PictureHeader::new(if rng.random() { PicType::P } else { PicType::I }, 0, rng.random_range(10..50));
    if s.tools.alf() {
        hdr.alf = Some(std::array::from_fn(|_| rng.random_range(-12..=12)));
    }
    if s.tools.ccalf() && s.chroma_format.has_chroma() {
        hdr.ccalf = Some(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-16..=16))));
    }
    let pp = PicParams::new(s, &hdr);
    let ctus = (0..pp.ctu_rows()).flat_map(|r| (0..pp.ctu_cols()).map(move |c| (r, c))).map(|(r, c)| random_ctu(rng, &pp, r, c)).collect();
    (PicInfo::new(s, &hdr), ctus)
}

fn check_banded_filter<P: Pixel>(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chroma = rng.random_bool(0.7);
    let bd = if P::BITS == 8 { 8 } else { [8, 10][rng.random_range(0..2)] };
    let w = 8 * rng.random_range(4..30) as u16;
    let h = 8 * rng.random_range(4..30) as u16;
    let tools = rng.random_range(0..=ToolFlags::ALL) | if rng.random_bool(0.5) { 0x0F } else { 0 };
    let tools = if chroma { tools } else { tools & !ToolFlags::CCALF };
    let s = seq(w, h, bd, chroma, rng.random_range(5..=6), 1, tools);
    let (info, ctus) = random_picture(&mut rng, &s);
    let edges = build_edge_maps(&info, &ctus);
    let variant = if rng.random() { Variant::Scalar } else { Variant::Vector };
    let k = Kernels::<P>::new(variant);
    let mut r2 = rng.clone();
    let banded = random_planes::<P>(&info, &mut rng);
    let whole = random_planes::<P>(&info, &mut r2);
    let prof = Profiler::new(false);
    let mut fin = 0;
    unsafe {
        for r in 0..info.pp.ctu_rows() {
            let f = filter_row(&k, &info, &banded, &ctus, &edges, r, &prof);
            assert!(f >= fin);
            fin = f;
        }
        assert_eq!(fin, info.pp.height);
        filter_picture(&Kernels::<P>::new(Variant::Scalar), &info, &whole, &ctus, &edges);
        assert_eq!(banded.final_samples(), whole.final_samples(), "seed {seed} {}x{} tools {tools:#x}", w, h);
    }
}

#[test]
fn banded_filter_matches_whole_picture() {
    for seed in 0..40 {
        check_banded_filter::<u8>(seed);
        check_banded_filter::<u16>(1000 + seed);
    }
}

#[test]
fn filters_off_keep_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = seq(96, 64, 8, true, 5, 1, 0);
    let (info, ctus) = random_picture(&mut rng, &s);
    let planes = random_planes::<u8>(&info, &mut rng);
    unsafe {
        let before: Vec<Vec<u16>> = planes
            .dbk
            .iter()
            .map(|p| {
                let v = p.rows(0, p.height());
                (0..p.height()).flat_map(|y| v.row(y)[..p.width()].iter().map(|s| *s as u16).collect::<Vec<_>>()).collect()
            })
            .collect();
        for r in 0..info.pp.ctu_rows() {
            filter_row(&Kernels::new(Variant::Vector), &info, &planes, &ctus, &build_edge_maps(&info, &ctus), r, &Profiler::new(false));
        }
        assert_eq!(planes.final_samples(), before);
    }
}

fn stream_configs() -> Vec<(SequenceHeader, bool)> {
    vec![
        (seq(128, 96, 8, true, 5, 4, ToolFlags::ALL), true),
        (seq(136, 72, 8, true, 6, 3, ToolFlags::ALL), true),
        (seq(96, 64, 10, true, 5, 3, ToolFlags::ALL), true),
        (seq(64, 48, 10, false, 5, 3, ToolFlags::ALL & !ToolFlags::CCALF), true),
        (seq(200, 104, 8, true, 5, 2, ToolFlags::IBC | ToolFlags::BDPCM), false),
        (seq(64, 64, 8, false, 6, 2, 0), true),
    ]
}

#[test]
fn pipeline_matches_serial_reference() {
    for (i, (s, p)) in stream_configs().into_iter().enumerate() {
        let data = random_stream(100 + i as u64, &s, p);
        let oracle = decode_serial(&data, false, Variant::Scalar).unwrap();
        assert_eq!(oracle.len(), s.frame_count as usize);
        for workers in [1, 2, 4, 8, 16] {
            for (sub_ctu, force_scalar) in [(true, false), (false, false), (true, true)] {
                let cfg = DecoderConfig { workers, sub_ctu, force_scalar, ..DecoderConfig::default() };
                let (_, frames) = decode_stream(&data, cfg).unwrap();
                assert_eq!(frames, oracle, "config {i} workers {workers} sub_ctu {sub_ctu} scalar {force_scalar}");
            }
        }
        let cfg = DecoderConfig { workers: 3, wide_path: true, max_in_flight: 1, ..DecoderConfig::default() };
        assert_eq!(decode_stream(&data, cfg).unwrap().1, oracle, "config {i} wide");
    }
}

fn stream_of(s: &SequenceHeader, pics: &[(PictureHeader, Vec<ParsedCtu>)]) -> Vec<u8> {
    let mut out = s.to_bytes().unwrap();
    for (hdr, ctus) in pics {
        let mut enc = RangeEncoder::new();
        let mut cc = CtuCoder::new(PicParams::new(s, hdr));
        for c in ctus {
            write_ctu(&mut enc, &mut cc, c).unwrap();
        }
        hdr.write_unit(s, &enc.finish(), &mut out).unwrap();
    }
    out
}

fn one_cu_ctu(mode: CuMode) -> ParsedCtu {
    ParsedCtu {
        row: 0,
        col: 0,
        cus: vec![ParsedCu { x: 0, y: 0, size: 64, mode, cbf: [false; 3], mts_idx: 0, coeffs: Default::default() }],
        sao: [SaoParams::default(); 3],
        alf: false,
        ccalf: [false; 2],
    }
}

#[test]
fn dc_without_neighbours_is_constant_and_zero_mv_copies() {
    let s = seq(64, 64, 8, true, 6, 2, 0);
    let i_pic = (PictureHeader::new(PicType::I, 0, 30), vec![one_cu_ctu(CuMode::Intra(IntraMode::Dc))]);
    let p_pic = (PictureHeader::new(PicType::P, 1, 30), vec![one_cu_ctu(CuMode::Inter { mv: (0, 0) })]);
    let (_, frames) = decode_stream(&stream_of(&s, &[i_pic, p_pic]), DecoderConfig::with_workers(2)).unwrap();
    assert!(frames[0].planes.iter().all(|p| p.iter().all(|&v| v == 128)));
    assert_eq!(frames[1].planes, frames[0].planes);
}

#[test]
fn mc_prefetch_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = seq(128, 128, 10, true, 6, 1, 0);
    let hdr = PictureHeader::new(PicType::P, 1, 30);
    let info = PicInfo::new(&s, &hdr);
    let reference = random_planes::<u16>(&info, &mut rng);
    unsafe {
        for p in 0..3 {
            let (w, h) = info.plane_dims(p);
            let src = reference.dbk[p].rows(0, h);
            for y in 0..h {
                reference.fin[p].span_mut(y, 0, w).copy_from_slice(&src.row(y)[..w]);
            }
        }
    }
    let cus: Vec<ParsedCu> = (0..4)
        .map(|i| ParsedCu {
            x: (i % 2) * 32,
            y: (i / 2) * 32,
            size: 32,
            mode: CuMode::Inter { mv: (rng.random_range(-99..99), rng.random_range(-96..96)) },
            cbf: [false; 3],
            mts_idx: 0,
            coeffs: Default::default(),
        })
        .collect();
    let k = Kernels::<u16>::new(Variant::Vector);
    let refs = unsafe { reference.final_rows(128) };
    let run = |order: &[usize]| {
        let mut staged = vec![vec![]; 4];
        for &i in order {
            mc_predict(&k, &info, &refs, &cus[i], &mut staged[i]);
        }
        staged
    };
    let a = run(&[0, 1, 2, 3]);
    assert_eq!(a, run(&[3, 1, 0, 2]));
    assert_eq!(a, run(&[2, 3, 1, 0]));
}

#[test]
fn frames_come_out_in_order_then_end() {
    let s = seq(64, 64, 8, true, 5, 1, ToolFlags::ALL);
    let (_, frames) = decode_stream(&random_stream(1, &s, false), DecoderConfig::with_workers(4)).unwrap();
    assert_eq!(frames.len(), 1);

    let s = seq(64, 64, 8, true, 5, 10, ToolFlags::ALL);
    let data = random_stream(2, &s, true);
    let (seqh, rest) = SequenceHeader::parse(&data).unwrap();
    let mut dec = Decoder::open(seqh, DecoderConfig::with_workers(4)).unwrap();
    for u in split_units(rest).unwrap() {
        dec.feed(u).unwrap();
    }
    let mut pocs = vec![];
    while let Some(f) = dec.next_frame().unwrap() {
        pocs.push(f.poc);
    }
    assert_eq!(pocs, (0..10).collect::<Vec<_>>());
    assert!(dec.next_frame().unwrap().is_none());
}

#[test]
fn profile_shares() {
    let s = seq(128, 128, 8, true, 6, 3, 0);
    let pics: Vec<_> = (0..3).map(|n| (PictureHeader::new(PicType::I, n, 30), vec![one_cu_ctu(CuMode::Intra(IntraMode::Planar)); 4])).collect();
    let mut pics = pics;
    for (i, c) in pics.iter_mut().flat_map(|p| p.1.iter_mut().enumerate()) {
        c.row = i / 2;
        c.col = i % 2;
        c.cus[0].x = c.col * 64;
        c.cus[0].y = c.row * 64;
    }
    let data = stream_of(&s, &pics);
    let (seqh, rest) = SequenceHeader::parse(&data).unwrap();
    let mut dec = Decoder::open(seqh, DecoderConfig { workers: 2, profiling: true, ..DecoderConfig::default() }).unwrap();
    for u in split_units(rest).unwrap() {
        dec.feed(u).unwrap();
    }
    while dec.next_frame().unwrap().is_some() {}
    let prof = dec.stage_profile();
    assert_eq!(prof.ns[Stage::Inter as usize], 0);
    assert_eq!(prof.percent(Stage::Inter), 0.0);
    let sum: f64 = prof.percentages().iter().map(|(_, p)| p).sum();
    assert!((sum - 100.0).abs() <= 0.5, "{sum}");
    assert!(prof.ns[Stage::Entropy as usize] > 0);
}

#[test]
fn bad_inputs_are_reported() {
    let mut s = seq(64, 64, 8, true, 5, 1, 0);
    s.bit_depth = 9;
    assert!(Decoder::open(s, DecoderConfig::default()).is_err());
    let s = seq(64, 64, 8, true, 5, 1, 0);
    assert!(Decoder::open(s, DecoderConfig { workers: 0, ..DecoderConfig::default() }).is_err());

    let s = seq(64, 64, 8, true, 5, 3, ToolFlags::ALL);
    let full = random_stream(5, &s, true);
    let (_, rest) = SequenceHeader::parse(&full).unwrap();
    let mut data = s.to_bytes().unwrap();
    for (i, u) in split_units(rest).unwrap().into_iter().enumerate() {
        let (hdr, payload, _) = PictureHeader::parse_unit(&s, u).unwrap();
        let payload = if i == 1 { &payload[..6] } else { payload };
        hdr.write_unit(&s, payload, &mut data).unwrap();
    }
    let (seqh, rest) = SequenceHeader::parse(&data).unwrap();
    let mut dec = Decoder::open(seqh, DecoderConfig::with_workers(3)).unwrap();
    for u in split_units(rest).unwrap() {
        dec.feed(u).unwrap();
    }
    assert!(dec.next_frame().unwrap().is_some());
    let mut saw_error = false;
    while let Some(r) = dec.next_frame().transpose() {
        if let Err(crate::Error::Picture { picture, .. }) = r {
            assert!(picture >= 1);
            saw_error = true;
        }
    }
    assert!(saw_error);
}
