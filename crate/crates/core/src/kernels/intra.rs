//! Intra prediction (Planar, DC, Hor, Ver) and BDPCM reconstruction.

use super::pixel::{clip_sample, max_sample, Pixel};
use super::transform::dequant_level;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntraMode {
    Planar = 0,
    Dc = 1,
    Hor = 2,
    Ver = 3,
}

impl IntraMode {
    pub const ALL: [IntraMode; 4] = [IntraMode::Planar, IntraMode::Dc, IntraMode::Hor, IntraMode::Ver];

    pub fn from_index(i: u8) -> Self {
        Self::ALL[i as usize & 3]
    }
}

/// Prediction direction of a BDPCM block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BdpcmDir {
    Hor = 0,
    Ver = 1,
}

impl BdpcmDir {
    /// The intra mode whose prediction a BDPCM block in this direction uses.
    pub fn intra_mode(self) -> IntraMode {
        match self {
            BdpcmDir::Hor => IntraMode::Hor,
            BdpcmDir::Ver => IntraMode::Ver,
        }
    }
}

fn check_refs(top: &[i32], left: &[i32], n: usize) {
    assert!(n.is_power_of_two() && (4..=64).contains(&n));
    assert!(top.len() > 2 * n && left.len() > 2 * n, "reference arrays need 2N+1 samples");
}

/// `top[0]`/`left[0]` hold the corner sample; `top[1 + x]` is above column x,
/// `left[1 + y]` is left of row y. Output is `n × n`, row-major.
pub fn intra_predict_scalar<P: Pixel>(mode: IntraMode, top: &[i32], left: &[i32], n: usize, out: &mut [P]) {
    check_refs(top, left, n);
    let log2n = n.trailing_zeros();
    let dc = || {
        let s: i32 = top[1..=n].iter().sum::<i32>() + left[1..=n].iter().sum::<i32>();
        (s + n as i32) >> (log2n + 1)
    };
    let dcv = if mode == IntraMode::Dc { dc() } else { 0 };
    let (tr, bl) = (top[n + 1], left[n + 1]);
    for y in 0..n {
        for x in 0..n {
            let v = match mode {
                IntraMode::Dc => dcv,
                IntraMode::Hor => left[1 + y],
                IntraMode::Ver => top[1 + x],
                IntraMode::Planar => {
                    let n = n as i32;
                    let (xi, yi) = (x as i32, y as i32);
                    ((n - 1 - xi) * left[1 + y] + (xi + 1) * tr + (n - 1 - yi) * top[1 + x] + (yi + 1) * bl + n)
                        >> (log2n + 1)
                }
            };
            out[y * n + x] = P::from_i32(v);
        }
    }
}

pub fn intra_predict_vector<P: Pixel>(mode: IntraMode, top: &[i32], left: &[i32], n: usize, out: &mut [P]) {
    check_refs(top, left, n);
    let log2n = n.trailing_zeros();
    let out = &mut out[..n * n];
    match mode {
        IntraMode::Dc => {
            let s: i32 = top[1..=n].iter().sum::<i32>() + left[1..=n].iter().sum::<i32>();
            out.fill(P::from_i32((s + n as i32) >> (log2n + 1)));
        }
        IntraMode::Hor => {
            for (row, &l) in out.chunks_exact_mut(n).zip(&left[1..=n]) {
                row.fill(P::from_i32(l));
            }
        }
        IntraMode::Ver => {
            let mut first = [P::default(); 64];
            for (d, &t) in first[..n].iter_mut().zip(&top[1..=n]) {
                *d = P::from_i32(t);
            }
            for row in out.chunks_exact_mut(n) {
                row.copy_from_slice(&first[..n]);
            }
        }
        IntraMode::Planar => {
            let ni = n as i32;
            let (tr, bl) = (top[n + 1], left[n + 1]);
            // Per-column terms that do not depend on y.
            let mut base = [0i32; 64];
            let mut tcol = [0i32; 64];
            for x in 0..n {
                base[x] = (x as i32 + 1) * tr + ni;
                tcol[x] = top[1 + x];
            }
            let mut wl = [0i32; 64];
            for (x, w) in wl[..n].iter_mut().enumerate() {
                *w = ni - 1 - x as i32;
            }
            for (y, row) in out.chunks_exact_mut(n).enumerate() {
                let l = left[1 + y];
                let wy = ni - 1 - y as i32;
                let by = (y as i32 + 1) * bl;
                for x in 0..n {
                    let v = wl[x] * l + base[x] + wy * tcol[x] + by;
                    row[x] = P::from_i32(v >> (log2n + 1));
                }
            }
        }
    }
}

/// BDPCM reconstruction: accumulate `levels` along `dir`, dequantize each
/// running sum, and add to `pred`. Blocks are `n × n`, row-major.
pub fn bdpcm_scalar<P: Pixel>(levels: &[i16], n: usize, dir: BdpcmDir, qp: u8, pred: &[P], bit_depth: u8, out: &mut [P]) {
    let max = max_sample(bit_depth);
    for y in 0..n {
        for x in 0..n {
            let acc: i32 = match dir {
                BdpcmDir::Ver => (0..=y).map(|yy| levels[yy * n + x] as i32).sum(),
                BdpcmDir::Hor => (0..=x).map(|xx| levels[y * n + xx] as i32).sum(),
            };
            let r = dequant_level(acc, qp) as i32;
            out[y * n + x] = P::from_i32(clip_sample(pred[y * n + x].to_i32() + r, max));
        }
    }
}

pub fn bdpcm_vector<P: Pixel>(levels: &[i16], n: usize, dir: BdpcmDir, qp: u8, pred: &[P], bit_depth: u8, out: &mut [P]) {
    let max = max_sample(bit_depth);
    let mut acc = [0i32; 64 * 64];
    let acc = &mut acc[..n * n];
    match dir {
        BdpcmDir::Ver => {
            let mut run = [0i32; 64];
            for y in 0..n {
                for x in 0..n {
                    run[x] += levels[y * n + x] as i32;
                }
                acc[y * n..(y + 1) * n].copy_from_slice(&run[..n]);
            }
        }
        BdpcmDir::Hor => {
            // Lanes run down the column so every row accumulates at once.
            let mut run = [0i32; 64];
            for x in 0..n {
                for y in 0..n {
                    run[y] += levels[y * n + x] as i32;
                    acc[y * n + x] = run[y];
                }
            }
        }
    }
    for ((o, &p), &a) in out[..n * n].iter_mut().zip(&pred[..n * n]).zip(acc.iter()) {
        let r = dequant_level(a, qp) as i32;
        *o = P::from_i32((p.to_i32() + r).clamp(0, max));
    }
}

/// `out = clip(pred + resid)` over a block.
pub fn add_residual_scalar<P: Pixel>(pred: &[P], resid: &[i16], bit_depth: u8, out: &mut [P]) {
    let max = max_sample(bit_depth);
    for i in 0..pred.len() {
        out[i] = P::from_i32(clip_sample(pred[i].to_i32() + resid[i] as i32, max));
    }
}

pub fn add_residual_vector<P: Pixel>(pred: &[P], resid: &[i16], bit_depth: u8, out: &mut [P]) {
    let max = max_sample(bit_depth);
    let n = pred.len();
    let (pc, rc, oc) = (pred.chunks(16), resid[..n].chunks(16), out[..n].chunks_mut(16));
    for ((p, r), o) in pc.zip(rc).zip(oc) {
        let mut lane = [0i32; 16];
        for i in 0..p.len() {
            lane[i] = p[i].to_i32() + r[i] as i32;
        }
        for i in 0..p.len() {
            o[i] = P::from_i32(lane[i].clamp(0, max));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn both<P: Pixel>(mode: IntraMode, top: &[i32], left: &[i32], n: usize) -> (Vec<P>, Vec<P>) {
        let mut a = vec![P::default(); n * n];
        let mut b = vec![P::default(); n * n];
        intra_predict_scalar(mode, top, left, n, &mut a);
        intra_predict_vector(mode, top, left, n, &mut b);
        (a, b)
    }

    #[test]
    fn constant_refs_give_constant_prediction() {
        for n in [4, 8, 16, 32, 64] {
            let refs = vec![100; 2 * n + 1];
            for mode in IntraMode::ALL {
                let (a, b) = both::<u8>(mode, &refs, &refs, n);
                assert!(a.iter().all(|&v| v == 100), "{mode:?} {n}");
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn unavailable_refs_substitute_mid_grey() {
        let refs = vec![1 << 7; 17];
        for mode in IntraMode::ALL {
            let (a, _) = both::<u8>(mode, &refs, &refs, 8);
            assert!(a.iter().all(|&v| v == 128));
        }
    }

    #[test]
    fn dc_rounds_mean_of_2n_refs() {
        let mut top = vec![0; 9];
        let mut left = vec![0; 9];
        top[1..=4].copy_from_slice(&[10, 20, 30, 41]);
        left[1..=4].copy_from_slice(&[0, 0, 0, 2]);
        // (103 + 4) >> 3 = 13
        let (a, _) = both::<u8>(IntraMode::Dc, &top, &left, 4);
        assert!(a.iter().all(|&v| v == 13));
    }

    #[test]
    fn random_refs_scalar_matches_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2000 {
            let n = [4, 8, 16, 32, 64][rng.random_range(0..5)];
            let mode = IntraMode::from_index(rng.random_range(0..4));
            let t8: Vec<i32> = (0..=2 * n).map(|_| rng.random_range(0..256)).collect();
            let l8: Vec<i32> = (0..=2 * n).map(|_| rng.random_range(0..256)).collect();
            let (a, b) = both::<u8>(mode, &t8, &l8, n);
            assert_eq!(a, b);
            let t10: Vec<i32> = (0..=2 * n).map(|_| rng.random_range(0..1024)).collect();
            let l10: Vec<i32> = (0..=2 * n).map(|_| rng.random_range(0..1024)).collect();
            let (a, b) = both::<u16>(mode, &t10, &l10, n);
            assert_eq!(a, b);
            let (c, _) = both::<u16>(mode, &t8, &l8, n);
            let (d, _) = both::<u8>(mode, &t8, &l8, n);
            assert!(c.iter().zip(&d).all(|(&x, &y)| x as i32 == y as i32));
        }
    }

    #[test]
    fn bdpcm_zero_levels_reproduce_prediction() {
        let pred: Vec<u8> = (0..64).map(|i| i as u8 * 3).collect();
        let mut out = vec![0u8; 64];
        bdpcm_scalar(&[0; 64], 8, BdpcmDir::Ver, 30, &pred, 8, &mut out);
        assert_eq!(out, pred);
    }

    #[test]
    fn bdpcm_vertical_column_shares_offset() {
        let mut levels = [0i16; 16];
        levels[1] = 1;
        let pred = [100u8; 16];
        let mut out = [0u8; 16];
        bdpcm_vector(&levels, 4, BdpcmDir::Ver, 4, &pred, 8, &mut out);
        // dequant(1) at qp 4 = 4
        for y in 0..4 {
            assert_eq!(out[y * 4 + 1], 104);
            assert_eq!(out[y * 4], 100);
        }
    }

    #[test]
    fn bdpcm_matches_accumulate_then_dequant_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let n = [4, 8, 16, 32][rng.random_range(0..4)];
            let dir = if rng.random() { BdpcmDir::Hor } else { BdpcmDir::Ver };
            let qp = rng.random_range(0..=63);
            let bd = if rng.random() { 8 } else { 10 };
            let levels: Vec<i16> = (0..n * n).map(|_| rng.random_range(-40..=40)).collect();
            let pred: Vec<u16> = (0..n * n).map(|_| rng.random_range(0..(1 << bd))).collect();
            // Oracle: explicit prefix-sum table, then per-sample dequant.
            let mut table = vec![0i32; n * n];
            for y in 0..n {
                for x in 0..n {
                    let prev = match dir {
                        BdpcmDir::Ver if y > 0 => table[(y - 1) * n + x],
                        BdpcmDir::Hor if x > 0 => table[y * n + x - 1],
                        _ => 0,
                    };
                    table[y * n + x] = prev + levels[y * n + x] as i32;
                }
            }
            let expect: Vec<u16> = (0..n * n)
                .map(|i| {
                    let l = table[i].clamp(-32768, 32767) as i64;
                    let ls = [40i64, 45, 51, 57, 64, 72][qp as usize % 6];
                    let d = (((l * ls) << (qp / 6)) >> 4).clamp(-32768, 32767);
                    (pred[i] as i64 + d).clamp(0, (1 << bd) - 1) as u16
                })
                .collect();
            let mut a = vec![0u16; n * n];
            let mut b = vec![0u16; n * n];
            bdpcm_scalar(&levels, n, dir, qp, &pred, bd, &mut a);
            bdpcm_vector(&levels, n, dir, qp, &pred, bd, &mut b);
            assert_eq!(a, expect);
            assert_eq!(b, expect);
        }
    }

    #[test]
    fn add_residual_variants_agree_and_clip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let len = rng.random_range(1..200);
            let pred: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            let res: Vec<i16> = (0..len).map(|_| rng.random_range(-600..600)).collect();
            let mut a = vec![0u8; len];
            let mut b = vec![0u8; len];
            add_residual_scalar(&pred, &res, 8, &mut a);
            add_residual_vector(&pred, &res, 8, &mut b);
            assert_eq!(a, b);
        }
    }
}
