use std::iter::Peekable;
use std::slice::Iter;

use super::mvp::{derive_mvp, validate_bv};
use super::residual::{parse_residual, write_residual, MAX_LEVEL};
use super::{BdpcmDir, CtxBank, CuMode, IntraMode, MotionField, ParsedCtu, ParsedCu, PicParams, SaoMode, SaoParams};
use super::{MIN_CU};
use crate::bitio::{PicType, RangeDecoder, RangeEncoder};
use crate::kernels::sao::{SAO_MAX_BAND_START, SAO_MAX_OFFSET};
use crate::{Error, Result};

/// Largest motion or block vector component magnitude.
pub const MV_LIMIT: i32 = 1 << 15;

/// Per-picture syntax state shared by consecutive CTUs: contexts and the
/// motion field.
#[derive(Clone, Debug)]
pub struct CtuCoder {
    pub pp: PicParams,
    pub ctx: CtxBank,
    pub mf: MotionField,
}

impl CtuCoder {
    pub fn new(pp: PicParams) -> Self {
        Self { pp, ctx: CtxBank::new(), mf: MotionField::new(pp.width, pp.height) }
    }
}

fn at_ctu(row: usize, col: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Corrupt(msg) => Error::CorruptCtu { row, col, msg },
        other => other,
    }
}

/// Parses the CTU at `(row, col)`; CTUs must be parsed in raster order.
pub fn parse_ctu(dec: &mut RangeDecoder<'_>, cc: &mut CtuCoder, row: usize, col: usize) -> Result<ParsedCtu> {
    let pp = cc.pp;
    assert!(row < pp.ctu_rows() && col < pp.ctu_cols(), "CTU ({row}, {col}) outside the picture");
    parse_ctu_inner(dec, cc, row, col).map_err(at_ctu(row, col))
}

fn parse_ctu_inner(dec: &mut RangeDecoder<'_>, cc: &mut CtuCoder, row: usize, col: usize) -> Result<ParsedCtu> {
    let pp = cc.pp;
    let mut ctu = ParsedCtu { row, col, cus: Vec::new(), sao: [SaoParams::default(); 3], alf: false, ccalf: [false; 2] };
    if pp.tools.sao() {
        for p in 0..pp.num_planes() {
            ctu.sao[p] = parse_sao(dec, &mut cc.ctx)?;
        }
    }
    if pp.alf_present {
        ctu.alf = dec.decode_bit(&mut cc.ctx.alf_ctu)?;
    }
    if pp.ccalf_present && pp.chroma {
        for f in ctu.ccalf.iter_mut() {
            *f = dec.decode_bit(&mut cc.ctx.ccalf_ctu)?;
        }
    }
    let s = pp.ctu_size();
    parse_tree(dec, cc, col * s, row * s, s, 0, &mut ctu.cus)?;
    Ok(ctu)
}

fn parse_sao(dec: &mut RangeDecoder<'_>, ctx: &mut CtxBank) -> Result<SaoParams> {
    if !dec.decode_bit(&mut ctx.sao_type)? {
        return Ok(SaoParams::default());
    }
    let mode = if dec.decode_bypass()? {
        SaoMode::Edge { class: dec.decode_bypass_bits(2)? as u8 }
    } else {
        let start = dec.decode_bypass_bits(5)? as u8;
        if start > SAO_MAX_BAND_START {
            return Err(Error::corrupt(format!("SAO band start {start} > {SAO_MAX_BAND_START}")));
        }
        SaoMode::Band { start }
    };
    let mut offsets = [0i8; 4];
    for o in offsets.iter_mut() {
        let m = dec.decode_eg(0)?;
        if m > SAO_MAX_OFFSET as u32 {
            return Err(Error::corrupt(format!("SAO offset {m} out of range")));
        }
        *o = if m != 0 && dec.decode_bypass()? { -(m as i8) } else { m as i8 };
    }
    Ok(SaoParams { mode, offsets })
}

fn write_sao(enc: &mut RangeEncoder, ctx: &mut CtxBank, p: &SaoParams) {
    enc.encode_bit(&mut ctx.sao_type, p.mode != SaoMode::Off);
    match p.mode {
        SaoMode::Off => return,
        SaoMode::Band { start } => {
            enc.encode_bypass(false);
            enc.encode_bypass_bits(start as u32, 5);
        }
        SaoMode::Edge { class } => {
            enc.encode_bypass(true);
            enc.encode_bypass_bits(class as u32, 2);
        }
    }
    for &o in &p.offsets {
        enc.encode_eg(o.unsigned_abs() as u32, 0);
        if o != 0 {
            enc.encode_bypass(o < 0);
        }
    }
}

enum Node {
    Skip,
    Forced,
    Coded,
    Leaf,
}

fn classify(pp: &PicParams, x: usize, y: usize, s: usize) -> Node {
    if x >= pp.width || y >= pp.height {
        Node::Skip
    } else if x + s > pp.width || y + s > pp.height {
        Node::Forced
    } else if s > MIN_CU {
        Node::Coded
    } else {
        Node::Leaf
    }
}

fn parse_tree(
    dec: &mut RangeDecoder<'_>,
    cc: &mut CtuCoder,
    x: usize,
    y: usize,
    s: usize,
    depth: usize,
    out: &mut Vec<ParsedCu>,
) -> Result<()> {
    let split = match classify(&cc.pp, x, y, s) {
        Node::Skip => return Ok(()),
        Node::Forced => true,
        Node::Coded => dec.decode_bit(&mut cc.ctx.split[depth])?,
        Node::Leaf => false,
    };
    if split {
        let h = s / 2;
        for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
            parse_tree(dec, cc, x + dx, y + dy, h, depth + 1, out)?;
        }
    } else {
        out.push(parse_cu(dec, cc, x, y, s)?);
    }
    Ok(())
}

fn parse_vector(dec: &mut RangeDecoder<'_>, ctx: &mut CtxBank) -> Result<(i32, i32)> {
    let mut c = [0i32; 2];
    for v in c.iter_mut() {
        if !dec.decode_bit(&mut ctx.mvd_gt0)? {
            continue;
        }
        let mut a = 1u32;
        if dec.decode_bit(&mut ctx.mvd_gt1)? {
            a = dec.decode_eg(1)?.checked_add(2).filter(|&a| a <= 2 * MV_LIMIT as u32).ok_or_else(|| Error::corrupt("vector difference overflow"))?;
        }
        *v = if dec.decode_bypass()? { -(a as i32) } else { a as i32 };
    }
    Ok((c[0], c[1]))
}

fn write_vector(enc: &mut RangeEncoder, ctx: &mut CtxBank, d: (i32, i32)) {
    for v in [d.0, d.1] {
        let a = v.unsigned_abs();
        enc.encode_bit(&mut ctx.mvd_gt0, a > 0);
        if a == 0 {
            continue;
        }
        enc.encode_bit(&mut ctx.mvd_gt1, a > 1);
        if a > 1 {
            enc.encode_eg(a - 2, 1);
        }
        enc.encode_bypass(v < 0);
    }
}

fn mv_in_range(pp: &PicParams, mv: (i32, i32)) -> bool {
    mv.0.abs() <= MV_LIMIT && mv.1.abs() <= MV_LIMIT && mv.1.abs() <= 4 * pp.max_mv_y as i32
}

fn parse_intra_tail(dec: &mut RangeDecoder<'_>, cc: &mut CtuCoder) -> Result<CuMode> {
    if cc.pp.tools.bdpcm() && dec.decode_bit(&mut cc.ctx.bdpcm_flag)? {
        let ver = dec.decode_bit(&mut cc.ctx.bdpcm_dir)?;
        return Ok(CuMode::Bdpcm(if ver { BdpcmDir::Ver } else { BdpcmDir::Hor }));
    }
    let hi = dec.decode_bit(&mut cc.ctx.intra_mode[0])? as u8;
    let lo = dec.decode_bit(&mut cc.ctx.intra_mode[1])? as u8;
    Ok(CuMode::Intra(IntraMode::from_index(hi * 2 + lo)))
}

fn parse_cu(dec: &mut RangeDecoder<'_>, cc: &mut CtuCoder, x: usize, y: usize, size: usize) -> Result<ParsedCu> {
    let pp = cc.pp;
    let mode = match pp.pic_type {
        PicType::I => {
            if pp.tools.ibc() && dec.decode_bit(&mut cc.ctx.ibc_flag)? {
                let bv = parse_vector(dec, &mut cc.ctx)?;
                if !validate_bv(&pp, bv, x, y, size) {
                    return Err(Error::corrupt(format!("invalid block vector {bv:?} for CU at ({x}, {y})")));
                }
                CuMode::Ibc { bv }
            } else {
                parse_intra_tail(dec, cc)?
            }
        }
        PicType::P => {
            if !dec.decode_bit(&mut cc.ctx.pred_mode)? {
                let mvp = derive_mvp(&cc.mf, x, y, size);
                let d = parse_vector(dec, &mut cc.ctx)?;
                let mv = (mvp.0 + d.0, mvp.1 + d.1);
                if !mv_in_range(&pp, mv) {
                    return Err(Error::corrupt(format!("motion vector {mv:?} out of range")));
                }
                CuMode::Inter { mv }
            } else {
                parse_intra_tail(dec, cc)?
            }
        }
    };
    let mut cbf = [false; 3];
    cbf[0] = dec.decode_bit(&mut cc.ctx.cbf[0])?;
    if pp.chroma {
        cbf[1] = dec.decode_bit(&mut cc.ctx.cbf[1])?;
        cbf[2] = dec.decode_bit(&mut cc.ctx.cbf[1])?;
    }
    let mut mts_idx = 0;
    if matches!(mode, CuMode::Intra(_)) && cbf[0] && size <= 32 && dec.decode_bit(&mut cc.ctx.mts[0])? {
        mts_idx = 1 + dec.decode_bit(&mut cc.ctx.mts[1])? as u8;
    }
    let mut coeffs: [Vec<i16>; 3] = Default::default();
    for p in 0..3 {
        if cbf[p] {
            let n = if p == 0 { size } else { size / 2 };
            coeffs[p] = parse_residual(dec, &mut cc.ctx, n)?;
        }
    }
    let mv = match mode {
        CuMode::Inter { mv } => Some(mv),
        _ => None,
    };
    cc.mf.set_block(x, y, size, mv);
    Ok(ParsedCu { x, y, size, mode, cbf, mts_idx, coeffs })
}

/// Writes `ctu`, validating it against the picture parameters.
pub fn write_ctu(enc: &mut RangeEncoder, cc: &mut CtuCoder, ctu: &ParsedCtu) -> Result<()> {
    let pp = cc.pp;
    if ctu.row >= pp.ctu_rows() || ctu.col >= pp.ctu_cols() {
        return Err(Error::Misuse("CTU outside the picture"));
    }
    if pp.tools.sao() {
        for p in 0..pp.num_planes() {
            if !ctu.sao[p].is_valid() {
                return Err(Error::Misuse("invalid SAO parameters"));
            }
            write_sao(enc, &mut cc.ctx, &ctu.sao[p]);
        }
    }
    if pp.alf_present {
        enc.encode_bit(&mut cc.ctx.alf_ctu, ctu.alf);
    }
    if pp.ccalf_present && pp.chroma {
        for &f in &ctu.ccalf {
            enc.encode_bit(&mut cc.ctx.ccalf_ctu, f);
        }
    }
    let s = pp.ctu_size();
    let mut it = ctu.cus.iter().peekable();
    write_tree(enc, cc, ctu.col * s, ctu.row * s, s, 0, &mut it)?;
    if it.next().is_some() {
        return Err(Error::Misuse("CU list does not tile the CTU"));
    }
    Ok(())
}

fn write_tree(
    enc: &mut RangeEncoder,
    cc: &mut CtuCoder,
    x: usize,
    y: usize,
    s: usize,
    depth: usize,
    it: &mut Peekable<Iter<'_, ParsedCu>>,
) -> Result<()> {
    let here = |it: &mut Peekable<Iter<'_, ParsedCu>>| it.peek().is_some_and(|cu| cu.x == x && cu.y == y && cu.size == s);
    let split = match classify(&cc.pp, x, y, s) {
        Node::Skip => return Ok(()),
        Node::Forced => true,
        Node::Coded => {
            let split = !here(it);
            enc.encode_bit(&mut cc.ctx.split[depth], split);
            split
        }
        Node::Leaf => false,
    };
    if split {
        let h = s / 2;
        for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
            write_tree(enc, cc, x + dx, y + dy, h, depth + 1, it)?;
        }
        Ok(())
    } else {
        if !here(it) {
            return Err(Error::Misuse("CU list does not tile the CTU"));
        }
        write_cu(enc, cc, it.next().unwrap())
    }
}

fn write_intra_tail(enc: &mut RangeEncoder, cc: &mut CtuCoder, mode: CuMode) -> Result<()> {
    if cc.pp.tools.bdpcm() {
        enc.encode_bit(&mut cc.ctx.bdpcm_flag, matches!(mode, CuMode::Bdpcm(_)));
    }
    match mode {
        CuMode::Bdpcm(dir) => {
            if !cc.pp.tools.bdpcm() {
                return Err(Error::Misuse("BDPCM block without the BDPCM tool"));
            }
            enc.encode_bit(&mut cc.ctx.bdpcm_dir, dir == BdpcmDir::Ver);
        }
        CuMode::Intra(m) => {
            let i = m as u8;
            enc.encode_bit(&mut cc.ctx.intra_mode[0], i & 2 != 0);
            enc.encode_bit(&mut cc.ctx.intra_mode[1], i & 1 != 0);
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn write_cu(enc: &mut RangeEncoder, cc: &mut CtuCoder, cu: &ParsedCu) -> Result<()> {
    let pp = cc.pp;
    let (x, y, size) = (cu.x, cu.y, cu.size);
    match (pp.pic_type, cu.mode) {
        (PicType::I, CuMode::Inter { .. }) => return Err(Error::Misuse("inter block in an I-picture")),
        (PicType::P, CuMode::Ibc { .. }) => return Err(Error::Misuse("IBC block in a P-picture")),
        (PicType::I, CuMode::Ibc { bv }) => {
            if !pp.tools.ibc() {
                return Err(Error::Misuse("IBC block without the IBC tool"));
            }
            if !validate_bv(&pp, bv, x, y, size) || !mv_in_range(&PicParams { max_mv_y: u16::MAX, ..pp }, bv) {
                return Err(Error::Misuse("invalid block vector"));
            }
            enc.encode_bit(&mut cc.ctx.ibc_flag, true);
            write_vector(enc, &mut cc.ctx, bv);
        }
        (PicType::I, m) => {
            if pp.tools.ibc() {
                enc.encode_bit(&mut cc.ctx.ibc_flag, false);
            }
            write_intra_tail(enc, cc, m)?;
        }
        (PicType::P, CuMode::Inter { mv }) => {
            if !mv_in_range(&pp, mv) {
                return Err(Error::Misuse("motion vector out of range"));
            }
            let mvp = derive_mvp(&cc.mf, x, y, size);
            enc.encode_bit(&mut cc.ctx.pred_mode, false);
            write_vector(enc, &mut cc.ctx, (mv.0 - mvp.0, mv.1 - mvp.1));
        }
        (PicType::P, m) => {
            enc.encode_bit(&mut cc.ctx.pred_mode, true);
            write_intra_tail(enc, cc, m)?;
        }
    }
    for p in 0..3 {
        let n = if p == 0 { size } else { size / 2 };
        if p > 0 && !pp.chroma && cu.cbf[p] {
            return Err(Error::Misuse("chroma residual in a monochrome picture"));
        }
        if cu.cbf[p] {
            let c = &cu.coeffs[p];
            if c.len() != n * n || c.iter().all(|&v| v == 0) || c.iter().any(|&v| v.unsigned_abs() as u32 > MAX_LEVEL) {
                return Err(Error::Misuse("coded block flag set for an empty or malformed block"));
            }
        } else if !cu.coeffs[p].is_empty() {
            return Err(Error::Misuse("coefficients present with coded block flag clear"));
        }
    }
    enc.encode_bit(&mut cc.ctx.cbf[0], cu.cbf[0]);
    if pp.chroma {
        enc.encode_bit(&mut cc.ctx.cbf[1], cu.cbf[1]);
        enc.encode_bit(&mut cc.ctx.cbf[1], cu.cbf[2]);
    }
    let mts_allowed = matches!(cu.mode, CuMode::Intra(_)) && cu.cbf[0] && size <= 32;
    if cu.mts_idx > 2 || (cu.mts_idx != 0 && !mts_allowed) {
        return Err(Error::Misuse("MTS index not allowed for this block"));
    }
    if mts_allowed {
        enc.encode_bit(&mut cc.ctx.mts[0], cu.mts_idx != 0);
        if cu.mts_idx != 0 {
            enc.encode_bit(&mut cc.ctx.mts[1], cu.mts_idx == 2);
        }
    }
    for p in 0..3 {
        if cu.cbf[p] {
            let n = if p == 0 { size } else { size / 2 };
            write_residual(enc, &mut cc.ctx, &cu.coeffs[p], n);
        }
    }
    let mv = match cu.mode {
        CuMode::Inter { mv } => Some(mv),
        _ => None,
    };
    cc.mf.set_block(x, y, size, mv);
    Ok(())
}
