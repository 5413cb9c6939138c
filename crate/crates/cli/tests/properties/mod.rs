//! Seeded property suites over the codec's module invariants.

use std::collections::HashSet;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::subsequence;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseResult, TestRng, TestRunner};

use tvc::bitio::{ChromaFormat, PicType, PictureHeader, ProbContext, RangeDecoder, RangeEncoder, SequenceHeader, ToolFlags};
use tvc::kernels::intra::IntraMode;
use tvc::kernels::lmcs::{lmcs_build_forward, lmcs_build_inverse, LMCS_PIECES};
use tvc::kernels::sao::Rect;
use tvc::kernels::transform::{matrix, TransformKind, TRANSFORM_SIZES};
use tvc::kernels::{Kernels, Pixel, Plane, Variant};
use tvc::pipeline::{build_job_graph, is_acyclic, wavefront_deps, GridShape};

use super::{hard, Outcome};

const CASES: u32 = 256;

fn check<S: Strategy>(seed: u8, strategy: S, test: impl Fn(S::Value) -> TestCaseResult) -> Result<(), String> {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

#[derive(Clone, Debug)]
enum Sym {
    Ctx(usize, bool),
    Bypass(u32, u32),
    Eg(u32, u32),
}

fn coder_round_trip() -> Result<(), String> {
    let sym = prop_oneof![
        (0usize..4, prop::bool::weighted(0.85)).prop_map(|(c, b)| Sym::Ctx(c, b)),
        (1u32..=16).prop_flat_map(|n| (0..1u32 << n, Just(n))).prop_map(|(v, n)| Sym::Bypass(v, n)),
        (0u32..1 << 20, 0u32..4).prop_map(|(v, k)| Sym::Eg(v, k)),
    ];
    check(1, vec(sym, 0..600), |syms| {
        let mut enc = RangeEncoder::new();
        let mut ctx = [ProbContext::new(); 4];
        for s in &syms {
            match *s {
                Sym::Ctx(c, b) => enc.encode_bit(&mut ctx[c], b),
                Sym::Bypass(v, n) => enc.encode_bypass_bits(v, n),
                Sym::Eg(v, k) => enc.encode_eg(v, k),
            }
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let mut ctx = [ProbContext::new(); 4];
        for s in &syms {
            let ok = match *s {
                Sym::Ctx(c, b) => dec.decode_bit(&mut ctx[c]).ok() == Some(b),
                Sym::Bypass(v, n) => dec.decode_bypass_bits(n).ok() == Some(v),
                Sym::Eg(v, k) => dec.decode_eg(k).ok() == Some(v),
            };
            prop_assert!(ok, "symbol {:?} decoded differently", s);
        }
        Ok(())
    })
}

fn seq_strategy() -> impl Strategy<Value = SequenceHeader> {
    (2u16..=1024, 2u16..=1024, any::<bool>(), any::<bool>(), any::<bool>(), any::<u32>(), 0u8..0x80, any::<u8>()).prop_map(
        |(w, h, ten, chroma, big, frame_count, tools, max_mv_y)| SequenceHeader {
            width: w * 8,
            height: h * 8,
            bit_depth: if ten { 10 } else { 8 },
            chroma_format: if chroma { ChromaFormat::Yuv420 } else { ChromaFormat::Monochrome },
            log2_ctu_size: if big { 6 } else { 5 },
            frame_count,
            tools: ToolFlags(if chroma { tools } else { tools & !ToolFlags::CCALF }),
            max_mv_y,
        },
    )
}

fn header_bijection() -> Result<(), String> {
    let pic = (
        any::<bool>(),
        any::<u32>(),
        0u8..64,
        any::<bool>(),
        prop::option::of(prop::array::uniform6(-40i16..40)),
        prop::option::of(prop::array::uniform2(prop::array::uniform8(-16i8..16))),
        vec(any::<u8>(), 0..32),
    );
    check(2, (seq_strategy(), pic), |(seq, (p_type, poc, qp, lmcs_on, alf, ccalf, payload))| {
        let bytes = seq.to_bytes().map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (parsed, _) = SequenceHeader::parse(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&parsed, &seq);

        let mut ph = PictureHeader::new(if p_type { PicType::P } else { PicType::I }, poc, qp);
        if seq.tools.lmcs() && lmcs_on {
            ph.lmcs = Some([1u16 << (seq.bit_depth - 4); 16]);
        }
        if seq.tools.alf() {
            ph.alf = alf;
        }
        if seq.tools.ccalf() {
            ph.ccalf = ccalf;
        }
        let mut out = Vec::new();
        ph.write_unit(&seq, &payload, &mut out).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (p, pl, rest) = PictureHeader::parse_unit(&seq, &out).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&p, &ph);
        prop_assert_eq!(pl, &payload[..]);
        prop_assert!(rest.is_empty());
        Ok(())
    })
}

fn transform_orthogonality() -> Result<(), String> {
    check(3, (0..TransformKind::ALL.len(), 0..TRANSFORM_SIZES.len()), |(k, s)| {
        let (kind, n) = (TransformKind::ALL[k], TRANSFORM_SIZES[s]);
        let m = matrix(kind, n);
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                let dot: i32 = (0..n).map(|i| m.entry(a, i) * m.entry(b, i)).sum();
                prop_assert!(dot.abs() <= 100, "{:?} N={} rows ({}, {}) dot {}", kind, n, a, b, dot);
            }
        }
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn flat_preserved<P: Pixel>(
    k: &Kernels<P>,
    bd: u8,
    v: i32,
    u: i32,
    alf: &[i16; 6],
    cc: &[i8; 8],
    mv: (i32, i32),
    mode: IntraMode,
    n: usize,
) -> TestCaseResult {
    let src = Plane::<P>::filled(48, 48, bd, v);
    let mut dst = src.clone();
    (k.alf)(src.view(), &mut dst.view_mut(), Rect::new(0, 0, 48, 48), alf, bd);
    prop_assert!(dst == src, "alf changed a flat plane");

    let chroma = Plane::<P>::filled(24, 24, bd, u);
    let mut out = chroma.clone();
    (k.ccalf)(chroma.view(), src.view(), &mut out.view_mut(), Rect::new(0, 0, 24, 24), cc, bd);
    prop_assert!(out == chroma, "ccalf changed chroma over flat luma");

    let mut block = vec![P::default(); 16 * 16];
    (k.interp_luma)(src.view(), 16, 16, mv.0, mv.1, 16, 16, bd, &mut block);
    prop_assert!(block.iter().all(|s| s.to_i32() == v), "luma interpolation of a flat plane");
    let mut block = vec![P::default(); 8 * 8];
    (k.interp_chroma)(chroma.view(), 8, 8, mv.0, mv.1, 8, 8, bd, &mut block);
    prop_assert!(block.iter().all(|s| s.to_i32() == u), "chroma interpolation of a flat plane");

    let refs = vec![v; 2 * n + 1];
    let mut pred = vec![P::default(); n * n];
    (k.intra)(mode, &refs, &refs, n, &mut pred);
    prop_assert!(pred.iter().all(|s| s.to_i32() == v), "{:?} prediction from flat references", mode);
    Ok(())
}

fn dc_gain() -> Result<(), String> {
    let strategy = (
        any::<bool>(),
        0i32..1024,
        0i32..1024,
        prop::array::uniform6(-64i16..64),
        prop::array::uniform8(-16i8..16),
        (-64i32..64, -64i32..64),
        0usize..4,
        0usize..4,
    );
    check(4, strategy, |(ten, v, u, alf, cc, mv, mode, s)| {
        let bd = if ten { 10 } else { 8 };
        let (v, u) = (v >> (10 - bd), u >> (10 - bd));
        let (mode, n) = (IntraMode::ALL[mode], TRANSFORM_SIZES[s]);
        for variant in [Variant::Scalar, Variant::Vector] {
            flat_preserved(&Kernels::<u16>::new(variant), bd, v, u, &alf, &cc, mv, mode, n)?;
            if bd == 8 {
                flat_preserved(&Kernels::<u8>::new(variant), bd, v, u, &alf, &cc, mv, mode, n)?;
            }
        }
        Ok(())
    })
}

fn wavefront_closure() -> Result<(), String> {
    check(5, (1usize..=8, 1usize..=8), |(rows, cols)| {
        for r in 0..rows {
            for c in 0..cols {
                let mut seen = HashSet::new();
                let mut stack = wavefront_deps(r, c, rows, cols);
                while let Some(d) = stack.pop() {
                    if seen.insert(d) {
                        stack.extend(wavefront_deps(d.0, d.1, rows, cols));
                    }
                }
                for &(r2, c2) in &seen {
                    prop_assert!(r2 < r || (r2 == r && c2 < c), "({}, {}) depends on ({}, {})", r, c, r2, c2);
                }
                for r2 in 0..=r {
                    let reach = if r2 == r { c } else { (c + (r - r2) + 1).min(cols) };
                    for c2 in 0..reach {
                        prop_assert!(seen.contains(&(r2, c2)), "({}, {}) misses ({}, {}) in {}x{}", r, c, r2, c2, rows, cols);
                    }
                }
            }
        }
        Ok(())
    })
}

fn dag_acyclic() -> Result<(), String> {
    check(6, (0usize..64, any::<bool>(), 1usize..=20, 1usize..=40, any::<bool>(), 0usize..=128), |(n, p, rows, cols, big, mv)| {
        let ctu = if big { 64 } else { 32 };
        let g = GridShape { rows, cols, ctu, height: rows * ctu, max_mv_y: mv };
        let pic_type = if p && n > 0 { PicType::P } else { PicType::I };
        let jobs = build_job_graph(n, pic_type, g);
        prop_assert_eq!(jobs.len(), g.node_count() + 1);
        prop_assert!(is_acyclic(&jobs));
        Ok(())
    })
}

fn lmcs_monotonic() -> Result<(), String> {
    let strategy = any::<bool>().prop_flat_map(|ten| {
        let total = if ten { 1024u16 } else { 256 };
        (Just(ten), subsequence((1..total).collect::<Vec<_>>(), LMCS_PIECES - 1))
    });
    check(7, strategy, |(ten, cuts)| {
        let bd = if ten { 10 } else { 8 };
        let mut cw = [0u16; LMCS_PIECES];
        let mut prev = 0;
        for (i, &c) in cuts.iter().chain(std::iter::once(&(1u16 << bd))).enumerate() {
            cw[i] = c - prev;
            prev = c;
        }
        for lut in [lmcs_build_inverse(&cw, bd), lmcs_build_forward(&cw, bd)] {
            prop_assert!(lut.is_monotonic(), "{:?}", cw);
            prop_assert!(lut.table.iter().all(|&v| v < 1 << bd));
        }
        Ok(())
    })
}

pub fn run() -> Outcome {
    let suites: [(&str, fn() -> Result<(), String>); 7] = [
        ("coder round trip", coder_round_trip),
        ("header bijection", header_bijection),
        ("transform orthogonality", transform_orthogonality),
        ("DC gain 1", dc_gain),
        ("wavefront closure", wavefront_closure),
        ("DAG acyclicity", dag_acyclic),
        ("LMCS monotonicity", lmcs_monotonic),
    ];
    let mut failed = Vec::new();
    for (name, suite) in suites {
        if let Err(e) = suite() {
            let first = e.lines().next().unwrap_or_default().to_string();
            failed.push(format!("{name}: {first}"));
        }
    }
    hard(failed.is_empty(), format!("{} suites x {CASES} cases, failed: {failed:?}", suites.len()))
}
