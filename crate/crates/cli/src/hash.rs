//! MD5 conformance hashes of decoded frames.
//!
//! A frame hash covers its planes in order, row-major, with no padding.
//! Samples of 8-bit streams are single bytes; deeper samples are
//! little-endian 16-bit words. The sequence hash covers the same bytes for
//! all frames in output order.

use md5::{Digest, Md5};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameHashes {
    pub frames: Vec<[u8; 16]>,
    pub sequence: [u8; 16],
}

fn feed(h: &mut impl Digest, planes: &[Vec<u16>], bit_depth: u8) {
    for p in planes {
        if bit_depth > 8 {
            let bytes: Vec<u8> = p.iter().flat_map(|v| v.to_le_bytes()).collect();
            h.update(&bytes);
        } else {
            let bytes: Vec<u8> = p.iter().map(|&v| v as u8).collect();
            h.update(&bytes);
        }
    }
}

pub fn hex(d: &[u8; 16]) -> String {
    d.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<[u8; 16]> {
    if s.len() != 32 || !s.is_ascii() {
        return None;
    }
    let mut out = [0u8; 16];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

/// Streaming hasher: feed frames in output order.
pub struct Hasher {
    bit_depth: u8,
    frames: Vec<[u8; 16]>,
    seq: Md5,
}

impl Hasher {
    pub fn new(bit_depth: u8) -> Self {
        Self { bit_depth, frames: Vec::new(), seq: Md5::new() }
    }

    pub fn push(&mut self, planes: &[Vec<u16>]) -> [u8; 16] {
        let mut h = Md5::new();
        feed(&mut h, planes, self.bit_depth);
        feed(&mut self.seq, planes, self.bit_depth);
        let d: [u8; 16] = h.finalize().into();
        self.frames.push(d);
        d
    }

    pub fn finish(self) -> FrameHashes {
        FrameHashes { frames: self.frames, sequence: self.seq.finalize().into() }
    }
}

impl FrameHashes {
    pub fn of<'a>(frames: impl IntoIterator<Item = &'a [Vec<u16>]>, bit_depth: u8) -> Self {
        let mut h = Hasher::new(bit_depth);
        for f in frames {
            h.push(f);
        }
        h.finish()
    }

    pub fn frame_line(k: usize, d: &[u8; 16]) -> String {
        format!("MD5 (frame {k}) = {}", hex(d))
    }

    /// One `MD5 (frame k) = hex` line per frame.
    pub fn frame_lines(&self) -> String {
        self.frames.iter().enumerate().map(|(k, d)| Self::frame_line(k, d) + "\n").collect()
    }

    pub fn sequence_line(&self) -> String {
        format!("MD5 (sequence) = {}", hex(&self.sequence))
    }

    /// Parses per-frame lines, numbered from 0. Sequence lines are skipped.
    pub fn parse_frame_lines(text: &str) -> Result<Vec<[u8; 16]>, CliError> {
        let mut out = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line.starts_with("MD5 (sequence)") {
                continue;
            }
            let bad = || CliError::format(format!("bad hash line {line:?}"));
            let rest = line.strip_prefix("MD5 (frame ").ok_or_else(bad)?;
            let (k, d) = rest.split_once(") = ").ok_or_else(bad)?;
            if k.parse::<usize>().ok() != Some(out.len()) {
                return Err(bad());
            }
            out.push(unhex(d).ok_or_else(bad)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digests() {
        // MD5 of the empty string and of "abc".
        let h = FrameHashes::of([&[][..], &[vec![97, 98, 99]][..]], 8);
        assert_eq!(hex(&h.frames[0]), "d41d8cd98f00b204e9800998ecf8427e");
        assert_eq!(hex(&h.frames[1]), "900150983cd24fb0d6963f7d28e17f72");
        assert_eq!(h.sequence, h.frames[1]);
        // 10-bit samples hash as little-endian words: 0x6261, 0x0063 -> "abc\0".
        let w = FrameHashes::of([&[vec![0x6261, 0x0063]][..]], 10);
        let b = FrameHashes::of([&[vec![97, 98, 99, 0]][..]], 8);
        assert_eq!(w.frames, b.frames);
    }

    #[test]
    fn lines_round_trip() {
        let h = FrameHashes::of([&[vec![1, 2]][..], &[vec![3]][..], &[vec![1023]][..]], 10);
        let text = h.frame_lines() + &h.sequence_line();
        assert!(text.starts_with("MD5 (frame 0) = "));
        assert_eq!(FrameHashes::parse_frame_lines(&text).unwrap(), h.frames);
        assert!(FrameHashes::parse_frame_lines("MD5 (frame 1) = 00").is_err());
    }
}
