//! Random valid syntax structures for round-trip and fuzz testing.

use rand::Rng;

use super::mvp::validate_bv;
use super::{BdpcmDir, CuMode, IntraMode, ParsedCtu, ParsedCu, PicParams, SaoMode, SaoParams, MIN_CU};
use crate::bitio::PicType;

/// A random block of levels with at least one nonzero entry.
pub fn random_levels<R: Rng>(rng: &mut R, n: usize) -> Vec<i16> {
    let mut c = vec![0i16; n * n];
    let density = [0.01, 0.1, 0.5][rng.random_range(0..3)];
    let big = rng.random_bool(0.05);
    for v in c.iter_mut() {
        if rng.random_bool(density) {
            let m: i16 = if big { rng.random_range(1..=i16::MAX) } else { rng.random_range(1..=20) };
            *v = if rng.random() { m } else { -m };
        }
    }
    if c.iter().all(|&v| v == 0) {
        let i = rng.random_range(0..n * n);
        c[i] = rng.random_range(1..=3);
    }
    c
}

pub fn random_sao<R: Rng>(rng: &mut R) -> SaoParams {
    let mode = match rng.random_range(0..3) {
        0 => SaoMode::Off,
        1 => SaoMode::Band { start: rng.random_range(0..=28) },
        _ => SaoMode::Edge { class: rng.random_range(0..4) },
    };
    let offsets = if mode == SaoMode::Off { [0; 4] } else { std::array::from_fn(|_| rng.random_range(-31..=31)) };
    SaoParams { mode, offsets }
}

fn random_intra<R: Rng>(rng: &mut R, pp: &PicParams) -> CuMode {
    if pp.tools.bdpcm() && rng.random_bool(0.25) {
        CuMode::Bdpcm(if rng.random() { BdpcmDir::Ver } else { BdpcmDir::Hor })
    } else {
        CuMode::Intra(IntraMode::from_index(rng.random_range(0..4)))
    }
}

fn random_cu<R: Rng>(rng: &mut R, pp: &PicParams, x: usize, y: usize, size: usize) -> ParsedCu {
    let mode = match pp.pic_type {
        PicType::I if pp.tools.ibc() && rng.random_bool(0.4) => {
            let step = if pp.chroma { 2 } else { 1 };
            let found = (0..30).find_map(|_| {
                let bv = match rng.random_range(0..3) {
                    0 => (-(size as i32) * rng.random_range(1..4), 0),
                    1 => (rng.random_range(-8..8) * 8, -(pp.ctu_size() as i32)),
                    _ => (rng.random_range(-64..=64) * step, rng.random_range(-64..=8) * step),
                };
                validate_bv(pp, bv, x, y, size).then_some(bv)
            });
            match found {
                Some(bv) => CuMode::Ibc { bv },
                None => random_intra(rng, pp),
            }
        }
        PicType::P if rng.random_bool(0.7) => {
            let lim = 4 * pp.max_mv_y as i32;
            CuMode::Inter { mv: (rng.random_range(-300..=300), rng.random_range(-lim..=lim)) }
        }
        _ => random_intra(rng, pp),
    };
    let mut cbf = [rng.random_bool(0.6), false, false];
    if pp.chroma {
        cbf[1] = rng.random_bool(0.4);
        cbf[2] = rng.random_bool(0.4);
    }
    let mts_idx = if matches!(mode, CuMode::Intra(_)) && cbf[0] && size <= 32 { rng.random_range(0..3) } else { 0 };
    let coeffs = std::array::from_fn(|p| {
        if cbf[p] {
            random_levels(rng, if p == 0 { size } else { size / 2 })
        } else {
            Vec::new()
        }
    });
    ParsedCu { x, y, size, mode, cbf, mts_idx, coeffs }
}

fn random_tree<R: Rng>(rng: &mut R, pp: &PicParams, x: usize, y: usize, s: usize, out: &mut Vec<ParsedCu>) {
    if x >= pp.width || y >= pp.height {
        return;
    }
    let forced = x + s > pp.width || y + s > pp.height;
    if forced || (s > MIN_CU && rng.random_bool(0.55)) {
        let h = s / 2;
        for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
            random_tree(rng, pp, x + dx, y + dy, h, out);
        }
    } else {
        out.push(random_cu(rng, pp, x, y, s));
    }
}

/// A random CTU that is valid for `pp` at `(row, col)`.
pub fn random_ctu<R: Rng>(rng: &mut R, pp: &PicParams, row: usize, col: usize) -> ParsedCtu {
    let mut sao = [SaoParams::default(); 3];
    if pp.tools.sao() {
        for s in sao.iter_mut().take(pp.num_planes()) {
            *s = random_sao(rng);
        }
    }
    let alf = pp.alf_present && rng.random();
    let ccalf = if pp.ccalf_present && pp.chroma { [rng.random(), rng.random()] } else { [false; 2] };
    let mut cus = Vec::new();
    let s = pp.ctu_size();
    random_tree(rng, pp, col * s, row * s, s, &mut cus);
    ParsedCtu { row, col, cus, sao, alf, ccalf }
}
