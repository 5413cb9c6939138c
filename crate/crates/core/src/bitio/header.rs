//! Fixed-layout sequence and picture headers. All multi-byte integers are
//! big-endian.

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TVC1";
pub const VERSION: u8 = 1;
/// Serialized size of [`SequenceHeader`].
pub const SEQUENCE_HEADER_LEN: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChromaFormat {
    Monochrome = 0,
    Yuv420 = 1,
}

impl ChromaFormat {
    pub fn has_chroma(self) -> bool {
        self == ChromaFormat::Yuv420
    }

    pub fn num_planes(self) -> usize {
        if self.has_chroma() {
            3
        } else {
            1
        }
    }
}

/// Coding tool enable bits carried in the sequence header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct ToolFlags(pub u8);

impl ToolFlags {
    pub const DBLK: u8 = 1 << 0;
    pub const SAO: u8 = 1 << 1;
    pub const ALF: u8 = 1 << 2;
    pub const CCALF: u8 = 1 << 3;
    pub const LMCS: u8 = 1 << 4;
    pub const IBC: u8 = 1 << 5;
    pub const BDPCM: u8 = 1 << 6;
    pub const ALL: u8 = 0x7F;

    pub const NAMES: [(&'static str, u8); 7] = [
        ("dblk", Self::DBLK),
        ("sao", Self::SAO),
        ("alf", Self::ALF),
        ("ccalf", Self::CCALF),
        ("lmcs", Self::LMCS),
        ("ibc", Self::IBC),
        ("bdpcm", Self::BDPCM),
    ];

    pub fn all() -> Self {
        ToolFlags(Self::ALL)
    }

    pub fn none() -> Self {
        ToolFlags(0)
    }

    pub fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }
    pub fn dblk(self) -> bool {
        self.has(Self::DBLK)
    }
    pub fn sao(self) -> bool {
        self.has(Self::SAO)
    }
    pub fn alf(self) -> bool {
        self.has(Self::ALF)
    }
    pub fn ccalf(self) -> bool {
        self.has(Self::CCALF)
    }
    pub fn lmcs(self) -> bool {
        self.has(Self::LMCS)
    }
    pub fn ibc(self) -> bool {
        self.has(Self::IBC)
    }
    pub fn bdpcm(self) -> bool {
        self.has(Self::BDPCM)
    }

    /// Parses a comma separated list such as `sao,alf,ibc`, or `all` / `none`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "all" => return Ok(Self::all()),
            "none" | "" => return Ok(Self::none()),
            _ => {}
        }
        let mut bits = 0;
        for name in s.split(',') {
            let name = name.trim().to_ascii_lowercase();
            let bit = Self::NAMES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, b)| *b)
                .ok_or_else(|| Error::Config(format!("unknown tool `{name}`")))?;
            bits |= bit;
        }
        Ok(ToolFlags(bits))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SequenceHeader {
    pub width: u16,
    pub height: u16,
    pub bit_depth: u8,
    pub chroma_format: ChromaFormat,
    pub log2_ctu_size: u8,
    pub frame_count: u32,
    pub tools: ToolFlags,
    /// Largest absolute vertical motion vector, in integer luma samples.
    pub max_mv_y: u8,
}

impl SequenceHeader {
    pub fn ctu_size(&self) -> usize {
        1 << self.log2_ctu_size
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn ctu_cols(&self) -> usize {
        self.width().div_ceil(self.ctu_size())
    }

    pub fn ctu_rows(&self) -> usize {
        self.height().div_ceil(self.ctu_size())
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.bit_depth, 8 | 10) {
            return Err(Error::UnsupportedBitDepth(self.bit_depth));
        }
        for (field, v) in [("width", self.width), ("height", self.height)] {
            if !(16..=8192).contains(&v) {
                return Err(Error::format(field, format!("{v} outside [16, 8192]")));
            }
            if v % 8 != 0 {
                return Err(Error::format(field, format!("{v} is not a multiple of 8")));
            }
        }
        if !matches!(self.log2_ctu_size, 5 | 6) {
            return Err(Error::format("log2_ctu_size", format!("{} not in {{5, 6}}", self.log2_ctu_size)));
        }
        if self.tools.0 & !ToolFlags::ALL != 0 {
            return Err(Error::format("tool_flags", "reserved bit set"));
        }
        if self.tools.ccalf() && !self.chroma_format.has_chroma() {
            return Err(Error::format("tool_flags", "CCALF requires 4:2:0 chroma"));
        }
        Ok(())
    }

    pub fn write(&self, out: &mut Vec<u8>) -> Result<()> {
        self.validate()?;
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.push(self.bit_depth);
        out.push(self.chroma_format as u8);
        out.push(self.log2_ctu_size);
        out.extend_from_slice(&self.frame_count.to_be_bytes());
        out.push(self.tools.0);
        out.push(self.max_mv_y);
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut v = Vec::with_capacity(SEQUENCE_HEADER_LEN);
        self.write(&mut v)?;
        Ok(v)
    }

    /// Parses a header from the front of `data`; returns it with the rest.
    pub fn parse(data: &[u8]) -> Result<(Self, &[u8])> {
        if data.len() < SEQUENCE_HEADER_LEN {
            return Err(Error::Truncated("sequence header"));
        }
        let magic: [u8; 4] = data[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        if data[4] != VERSION {
            return Err(Error::UnsupportedVersion(data[4]));
        }
        let chroma_format = match data[10] {
            0 => ChromaFormat::Monochrome,
            1 => ChromaFormat::Yuv420,
            v => return Err(Error::format("chroma_format", format!("unknown value {v}"))),
        };
        let h = SequenceHeader {
            width: u16::from_be_bytes([data[5], data[6]]),
            height: u16::from_be_bytes([data[7], data[8]]),
            bit_depth: data[9],
            chroma_format,
            log2_ctu_size: data[11],
            frame_count: u32::from_be_bytes(data[12..16].try_into().unwrap()),
            tools: ToolFlags(data[16]),
            max_mv_y: data[17],
        };
        h.validate()?;
        Ok((h, &data[SEQUENCE_HEADER_LEN..]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PicType {
    I = 0,
    P = 1,
}

/// Off-center coefficients of the 5x5 diamond ALF; the center tap is derived.
pub type AlfCoeffs = [i16; 6];
/// Cross-component filter taps for one chroma plane.
pub type CcAlfCoeffs = [i8; 8];

/// Sum of |c| allowed for one CCALF set. Keeps the 8-bit accumulation inside i16.
pub const CCALF_MAX_ABS_SUM: i32 = 128;

/// Center tap of an ALF set: taps sum to 128.
pub fn alf_center(c: &AlfCoeffs) -> i32 {
    128 - 2 * c.iter().map(|&v| v as i32).sum::<i32>()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PictureHeader {
    pub pic_type: PicType,
    pub poc: u32,
    pub qp: u8,
    /// Codeword counts of the 16 LMCS pieces.
    pub lmcs: Option<[u16; 16]>,
    pub alf: Option<AlfCoeffs>,
    /// One set per chroma plane (Cb, Cr).
    pub ccalf: Option<[CcAlfCoeffs; 2]>,
}

impl PictureHeader {
    pub fn new(pic_type: PicType, poc: u32, qp: u8) -> Self {
        Self { pic_type, poc, qp, lmcs: None, alf: None, ccalf: None }
    }

    pub fn validate(&self, seq: &SequenceHeader) -> Result<()> {
        if self.qp > 63 {
            return Err(Error::format("qp", format!("{} > 63", self.qp)));
        }
        if self.lmcs.is_some() && !seq.tools.lmcs() {
            return Err(Error::format("lmcs", "present while tool disabled"));
        }
        if self.alf.is_some() && !seq.tools.alf() {
            return Err(Error::format("alf", "present while tool disabled"));
        }
        if self.ccalf.is_some() && !seq.tools.ccalf() {
            return Err(Error::format("ccalf", "present while tool disabled"));
        }
        if let Some(cw) = &self.lmcs {
            validate_lmcs(cw, seq.bit_depth)?;
        }
        if let Some(c) = &self.alf {
            let center = alf_center(c);
            if !(i16::MIN as i32..=i16::MAX as i32).contains(&center) {
                return Err(Error::format("alf", format!("center tap {center} outside i16")));
            }
        }
        if let Some(sets) = &self.ccalf {
            for set in sets {
                let s: i32 = set.iter().map(|&v| (v as i32).abs()).sum();
                if s > CCALF_MAX_ABS_SUM {
                    return Err(Error::format("ccalf", format!("sum of |coeff| {s} > {CCALF_MAX_ABS_SUM}")));
                }
            }
        }
        Ok(())
    }

    /// Writes the picture unit: header fields followed by the coded payload.
    pub fn write_unit(&self, seq: &SequenceHeader, payload: &[u8], out: &mut Vec<u8>) -> Result<()> {
        self.validate(seq)?;
        let mut body = Vec::with_capacity(64 + payload.len());
        body.push(self.pic_type as u8);
        body.extend_from_slice(&self.poc.to_be_bytes());
        body.push(self.qp);
        if seq.tools.lmcs() {
            body.push(self.lmcs.is_some() as u8);
            if let Some(cw) = &self.lmcs {
                for c in cw {
                    body.extend_from_slice(&c.to_be_bytes());
                }
            }
        }
        if seq.tools.alf() {
            body.push(self.alf.is_some() as u8);
            if let Some(c) = &self.alf {
                for v in c {
                    body.extend_from_slice(&v.to_be_bytes());
                }
            }
        }
        if seq.tools.ccalf() {
            body.push(self.ccalf.is_some() as u8);
            if let Some(sets) = &self.ccalf {
                for set in sets {
                    body.extend(set.iter().map(|&v| v as u8));
                }
            }
        }
        body.extend_from_slice(payload);
        let size = u32::try_from(body.len()).map_err(|_| Error::format("payload_size", "picture unit too large"))?;
        out.extend_from_slice(&size.to_be_bytes());
        out.extend_from_slice(&body);
        Ok(())
    }

    /// Parses one picture unit from the front of `data`.
    /// Returns the header, the range-coded payload, and the remaining bytes.
    pub fn parse_unit<'a>(seq: &SequenceHeader, data: &'a [u8]) -> Result<(Self, &'a [u8], &'a [u8])> {
        if data.len() < 4 {
            return Err(Error::Truncated("picture unit size"));
        }
        let size = u32::from_be_bytes(data[0..4].try_into().unwrap()) as usize;
        if data.len() - 4 < size {
            return Err(Error::Truncated("payload_size exceeds remaining stream"));
        }
        let body = &data[4..4 + size];
        let rest = &data[4 + size..];
        let mut r = Reader { data: body, pos: 0 };
        let pic_type = match r.u8()? {
            0 => PicType::I,
            1 => PicType::P,
            v => return Err(Error::format("pic_type", format!("unknown value {v}"))),
        };
        let poc = r.u32()?;
        let qp = r.u8()?;
        let mut h = PictureHeader::new(pic_type, poc, qp);
        if seq.tools.lmcs() && r.flag("lmcs")? {
            let mut cw = [0u16; 16];
            for c in &mut cw {
                *c = r.u16()?;
            }
            h.lmcs = Some(cw);
        }
        if seq.tools.alf() && r.flag("alf")? {
            let mut c = [0i16; 6];
            for v in &mut c {
                *v = r.u16()? as i16;
            }
            h.alf = Some(c);
        }
        if seq.tools.ccalf() && r.flag("ccalf")? {
            let mut sets = [[0i8; 8]; 2];
            for set in &mut sets {
                for v in set.iter_mut() {
                    *v = r.u8()? as i8;
                }
            }
            h.ccalf = Some(sets);
        }
        h.validate(seq)?;
        Ok((h, &body[r.pos..], rest))
    }
}

pub(crate) fn validate_lmcs(cw: &[u16; 16], bit_depth: u8) -> Result<()> {
    if cw.contains(&0) {
        return Err(Error::format("lmcs", "zero codeword count"));
    }
    let sum: u32 = cw.iter().map(|&c| c as u32).sum();
    if sum != 1 << bit_depth {
        return Err(Error::format("lmcs", format!("codeword counts sum to {sum}, expected {}", 1u32 << bit_depth)));
    }
    Ok(())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Truncated("picture header"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn flag(&mut self, field: &'static str) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::format(field, format!("present flag {v} not 0/1"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hd() -> SequenceHeader {
        SequenceHeader {
            width: 1920,
            height: 1080,
            bit_depth: 8,
            chroma_format: ChromaFormat::Yuv420,
            log2_ctu_size: 6,
            frame_count: 10,
            tools: ToolFlags::all(),
            max_mv_y: 64,
        }
    }

    #[test]
    fn hd_header_round_trips() {
        let h = hd();
        let bytes = h.to_bytes().unwrap();
        assert_eq!(bytes.len(), SEQUENCE_HEADER_LEN);
        assert_eq!(&bytes[..4], b"TVC1");
        let (p, rest) = SequenceHeader::parse(&bytes).unwrap();
        assert_eq!(p, h);
        assert!(rest.is_empty());
    }

    #[test]
    fn bad_magic_and_bit_depth() {
        let mut bytes = hd().to_bytes().unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(SequenceHeader::parse(&bytes), Err(Error::BadMagic(_))));
        let mut bytes = hd().to_bytes().unwrap();
        bytes[9] = 12;
        assert!(matches!(SequenceHeader::parse(&bytes), Err(Error::UnsupportedBitDepth(12))));
        let mut bytes = hd().to_bytes().unwrap();
        bytes[4] = 2;
        assert!(matches!(SequenceHeader::parse(&bytes), Err(Error::UnsupportedVersion(2))));
    }

    #[test]
    fn field_errors_name_the_field() {
        let mut h = hd();
        h.width = 8;
        match h.to_bytes() {
            Err(Error::Format { field, .. }) => assert_eq!(field, "width"),
            other => panic!("{other:?}"),
        }
        let mut h = hd();
        h.chroma_format = ChromaFormat::Monochrome;
        assert!(h.to_bytes().is_err(), "CCALF needs chroma");
    }

    #[test]
    fn picture_header_identity_lmcs() {
        let seq = hd();
        let mut ph = PictureHeader::new(PicType::I, 0, 32);
        ph.lmcs = Some([16; 16]);
        let mut out = Vec::new();
        ph.write_unit(&seq, &[1, 2, 3], &mut out).unwrap();
        let (p, payload, rest) = PictureHeader::parse_unit(&seq, &out).unwrap();
        assert_eq!(p, ph);
        assert_eq!(payload, &[1, 2, 3]);
        assert!(rest.is_empty());
    }

    #[test]
    fn lmcs_sum_checked_on_parse() {
        let seq = hd();
        let mut ph = PictureHeader::new(PicType::I, 0, 32);
        ph.lmcs = Some([16; 16]);
        let mut out = Vec::new();
        ph.write_unit(&seq, &[], &mut out).unwrap();
        // decrement the last count: sum becomes 255
        let idx = 4 + 1 + 4 + 1 + 1 + 30 + 1;
        out[idx] -= 1;
        assert!(matches!(PictureHeader::parse_unit(&seq, &out), Err(Error::Format { field: "lmcs", .. })));
    }

    #[test]
    fn absent_alf_with_tool_enabled() {
        let seq = hd();
        let ph = PictureHeader::new(PicType::P, 3, 22);
        let mut out = Vec::new();
        ph.write_unit(&seq, &[9], &mut out).unwrap();
        // three present flags, all zero
        assert_eq!(&out[4 + 6..4 + 9], &[0, 0, 0]);
        let (p, payload, _) = PictureHeader::parse_unit(&seq, &out).unwrap();
        assert_eq!(p, ph);
        assert_eq!(payload, &[9]);
    }

    #[test]
    fn oversized_payload_is_truncated() {
        let seq = hd();
        let mut out = Vec::new();
        PictureHeader::new(PicType::I, 0, 30).write_unit(&seq, &[0; 8], &mut out).unwrap();
        out.truncate(out.len() - 1);
        assert!(matches!(PictureHeader::parse_unit(&seq, &out), Err(Error::Truncated(_))));
    }

    fn seq_strategy() -> impl Strategy<Value = SequenceHeader> {
        (2u16..=1024, 2u16..=1024, prop::bool::ANY, prop::bool::ANY, prop::bool::ANY, any::<u32>(), 0u8..0x80, any::<u8>())
            .prop_map(|(w, h, ten, chroma, big, fc, tools, mv)| {
                let chroma_format = if chroma { ChromaFormat::Yuv420 } else { ChromaFormat::Monochrome };
                let tools = if chroma { tools } else { tools & !ToolFlags::CCALF };
                SequenceHeader {
                    width: w * 8,
                    height: h * 8,
                    bit_depth: if ten { 10 } else { 8 },
                    chroma_format,
                    log2_ctu_size: if big { 6 } else { 5 },
                    frame_count: fc,
                    tools: ToolFlags(tools),
                    max_mv_y: mv,
                }
            })
    }

    proptest! {
        #[test]
        fn sequence_header_bijection(h in seq_strategy()) {
            let bytes = h.to_bytes().unwrap();
            let (p, _) = SequenceHeader::parse(&bytes).unwrap();
            prop_assert_eq!(p, h);
            prop_assert_eq!(p.to_bytes().unwrap(), bytes);
        }

        #[test]
        fn picture_header_bijection(
            seq in seq_strategy(),
            p_type in prop::bool::ANY,
            poc in any::<u32>(),
            qp in 0u8..64,
            lmcs_on in prop::bool::ANY,
            alf in prop::option::of(prop::array::uniform6(-40i16..40)),
            cc in prop::option::of(prop::array::uniform2(prop::array::uniform8(-16i8..16))),
            payload in prop::collection::vec(any::<u8>(), 0..32),
        ) {
            let mut ph = PictureHeader::new(if p_type { PicType::P } else { PicType::I }, poc, qp);
            if seq.tools.lmcs() && lmcs_on {
                ph.lmcs = Some([1u16 << (seq.bit_depth - 4); 16]);
            }
            if seq.tools.alf() { ph.alf = alf; }
            if seq.tools.ccalf() { ph.ccalf = cc; }
            let mut out = Vec::new();
            ph.write_unit(&seq, &payload, &mut out).unwrap();
            let (p, pl, rest) = PictureHeader::parse_unit(&seq, &out).unwrap();
            prop_assert_eq!(&p, &ph);
            prop_assert_eq!(pl, &payload[..]);
            prop_assert!(rest.is_empty());
            let mut again = Vec::new();
            p.write_unit(&seq, pl, &mut again).unwrap();
            prop_assert_eq!(again, out);
        }
    }
}
