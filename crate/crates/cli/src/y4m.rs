//! YUV4MPEG2 and raw planar video files.
//!
//! Y4M colorspaces: `C420`, `C420jpeg`, `C420paldv`, `C420mpeg2` and
//! `C420p10` for 4:2:0, `Cmono` and `Cmono10` for luma only. Samples above 8
//! bits are little-endian 16-bit words, in both Y4M and raw files.

use std::io::{BufRead, Read, Write};

use tvc::bitio::ChromaFormat;
use tvc::encoder::Video;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VideoFormat {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma: ChromaFormat,
}

impl VideoFormat {
    pub fn plane_dims(&self, p: usize) -> (usize, usize) {
        if p == 0 {
            (self.width, self.height)
        } else {
            (self.width / 2, self.height / 2)
        }
    }

    pub fn frame_bytes(&self) -> usize {
        let bps = if self.bit_depth > 8 { 2 } else { 1 };
        (0..self.chroma.num_planes()).map(|p| self.plane_dims(p)).map(|(w, h)| w * h * bps).sum()
    }

    fn colorspace(&self) -> Result<&'static str, CliError> {
        Ok(match (self.chroma, self.bit_depth) {
            (ChromaFormat::Yuv420, 8) => "C420jpeg",
            (ChromaFormat::Yuv420, 10) => "C420p10",
            (ChromaFormat::Monochrome, 8) => "Cmono",
            (ChromaFormat::Monochrome, 10) => "Cmono10",
            (c, b) => return Err(CliError::format(format!("no Y4M colorspace for {c:?} at {b} bits"))),
        })
    }

    fn empty_video(&self) -> Video {
        Video { width: self.width, height: self.height, bit_depth: self.bit_depth, chroma: self.chroma, frames: Vec::new() }
    }
}

fn parse_colorspace(tag: &str) -> Result<(ChromaFormat, u8), CliError> {
    Ok(match tag {
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => (ChromaFormat::Yuv420, 8),
        "420p10" => (ChromaFormat::Yuv420, 10),
        "mono" => (ChromaFormat::Monochrome, 8),
        "mono10" => (ChromaFormat::Monochrome, 10),
        other => return Err(CliError::format(format!("unsupported Y4M colorspace C{other}"))),
    })
}

/// Reads one line up to `\n`; `None` at a clean end of file.
fn read_line(r: &mut impl BufRead, what: &str) -> Result<Option<String>, CliError> {
    let mut buf = Vec::new();
    let n = r.take(4096).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') {
        return Err(CliError::format(format!("unterminated {what} line")));
    }
    buf.pop();
    String::from_utf8(buf).map(Some).map_err(|_| CliError::format(format!("{what} line is not text")))
}

pub fn parse_y4m_header(line: &str) -> Result<VideoFormat, CliError> {
    let mut parts = line.split(' ');
    if parts.next() != Some("YUV4MPEG2") {
        return Err(CliError::format("missing YUV4MPEG2 magic"));
    }
    let (mut w, mut h, mut cs) = (None, None, (ChromaFormat::Yuv420, 8));
    for p in parts.filter(|p| !p.is_empty()) {
        let (tag, val) = p.split_at(1);
        match tag {
            "W" => w = Some(val.parse::<usize>().map_err(|_| CliError::format(format!("bad width {val}")))?),
            "H" => h = Some(val.parse::<usize>().map_err(|_| CliError::format(format!("bad height {val}")))?),
            "C" => cs = parse_colorspace(val)?,
            "I" if val != "p" && val != "?" => return Err(CliError::format(format!("interlaced input (I{val}) not supported"))),
            _ => {}
        }
    }
    let (width, height) = match (w, h) {
        (Some(w), Some(h)) if w > 0 && h > 0 => (w, h),
        _ => return Err(CliError::format("Y4M header lacks W/H")),
    };
    if cs.0 == ChromaFormat::Yuv420 && (width % 2 != 0 || height % 2 != 0) {
        return Err(CliError::format("4:2:0 Y4M with odd dimensions"));
    }
    Ok(VideoFormat { width, height, bit_depth: cs.1, chroma: cs.0 })
}

fn read_planes(r: &mut impl Read, f: &VideoFormat) -> Result<Vec<Vec<u16>>, CliError> {
    let mut buf = vec![0u8; f.frame_bytes()];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => CliError::format("truncated frame"),
        _ => CliError::Io(e),
    })?;
    let mut planes = Vec::new();
    let mut off = 0;
    for p in 0..f.chroma.num_planes() {
        let (w, h) = f.plane_dims(p);
        let n = w * h;
        let plane: Vec<u16> = if f.bit_depth > 8 {
            buf[off..off + 2 * n].chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()
        } else {
            buf[off..off + n].iter().map(|&b| b as u16).collect()
        };
        off += if f.bit_depth > 8 { 2 * n } else { n };
        if plane.iter().any(|&v| v >> f.bit_depth != 0) {
            return Err(CliError::format(format!("sample exceeds {} bits", f.bit_depth)));
        }
        planes.push(plane);
    }
    Ok(planes)
}

fn write_planes(w: &mut impl Write, planes: &[Vec<u16>], bit_depth: u8) -> Result<(), CliError> {
    for p in planes {
        if bit_depth > 8 {
            let bytes: Vec<u8> = p.iter().flat_map(|v| v.to_le_bytes()).collect();
            w.write_all(&bytes)?;
        } else {
            let bytes: Vec<u8> = p.iter().map(|&v| v as u8).collect();
            w.write_all(&bytes)?;
        }
    }
    Ok(())
}

pub fn read_y4m(mut r: impl BufRead) -> Result<Video, CliError> {
    let header = read_line(&mut r, "header")?.ok_or_else(|| CliError::format("empty Y4M file"))?;
    let f = parse_y4m_header(&header)?;
    let mut video = f.empty_video();
    while let Some(line) = read_line(&mut r, "FRAME")? {
        if line != "FRAME" && !line.starts_with("FRAME ") {
            return Err(CliError::format(format!("expected FRAME, found {line:?}")));
        }
        video.frames.push(read_planes(&mut r, &f)?);
    }
    Ok(video)
}

/// Incremental Y4M output.
pub struct Y4mWriter<W: Write> {
    out: W,
    format: VideoFormat,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(mut out: W, format: VideoFormat) -> Result<Self, CliError> {
        let cs = format.colorspace()?;
        writeln!(out, "YUV4MPEG2 W{} H{} F30:1 Ip A1:1 {cs}", format.width, format.height)?;
        Ok(Self { out, format })
    }

    pub fn write_frame(&mut self, planes: &[Vec<u16>]) -> Result<(), CliError> {
        self.out.write_all(b"FRAME\n")?;
        write_planes(&mut self.out, planes, self.format.bit_depth)
    }

    pub fn finish(mut self) -> Result<W, CliError> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_y4m(out: impl Write, video: &Video) -> Result<(), CliError> {
    let f = VideoFormat { width: video.width, height: video.height, bit_depth: video.bit_depth, chroma: video.chroma };
    let mut w = Y4mWriter::new(out, f)?;
    for frame in &video.frames {
        w.write_frame(frame)?;
    }
    w.finish()?;
    Ok(())
}

/// Headerless planar frames of a known format.
pub fn read_raw(mut r: impl Read, format: VideoFormat) -> Result<Video, CliError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let fb = format.frame_bytes();
    if fb == 0 || data.len() % fb != 0 {
        return Err(CliError::format(format!("raw input of {} bytes is not a whole number of {fb}-byte frames", data.len())));
    }
    let mut video = format.empty_video();
    for chunk in data.chunks_exact(fb) {
        video.frames.push(read_planes(&mut &chunk[..], &format)?);
    }
    Ok(video)
}

pub fn write_raw_frame(out: &mut impl Write, planes: &[Vec<u16>], bit_depth: u8) -> Result<(), CliError> {
    write_planes(out, planes, bit_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(bd: u8, chroma: ChromaFormat) -> Video {
        let f = VideoFormat { width: 6, height: 4, bit_depth: bd, chroma };
        let mut v = f.empty_video();
        for t in 0..2u16 {
            v.frames.push(
                (0..chroma.num_planes())
                    .map(|p| {
                        let (w, h) = f.plane_dims(p);
                        (0..(w * h) as u16).map(|i| (i * 37 + t * 11 + p as u16) % (1 << bd)).collect()
                    })
                    .collect(),
            );
        }
        v
    }

    #[test]
    fn y4m_round_trips() {
        for (bd, c) in [(8, ChromaFormat::Yuv420), (10, ChromaFormat::Yuv420), (8, ChromaFormat::Monochrome), (10, ChromaFormat::Monochrome)] {
            let mut v = video(bd, c);
            v.frames[1][0][0] = (1 << bd) - 1;
            let mut buf = Vec::new();
            write_y4m(&mut buf, &v).unwrap();
            assert_eq!(read_y4m(&buf[..]).unwrap(), v);
        }
    }

    #[test]
    fn raw_round_trips() {
        let v = video(10, ChromaFormat::Yuv420);
        let mut buf = Vec::new();
        for f in &v.frames {
            write_raw_frame(&mut buf, f, 10).unwrap();
        }
        let f = VideoFormat { width: 6, height: 4, bit_depth: 10, chroma: ChromaFormat::Yuv420 };
        assert_eq!(read_raw(&buf[..], f).unwrap(), v);
        assert!(read_raw(&buf[..buf.len() - 1], f).is_err());
    }

    #[test]
    fn bad_headers() {
        for h in ["YUV4MPEG W4 H4\n", "YUV4MPEG2 W4 H4 C444\n", "YUV4MPEG2 W4\n", "YUV4MPEG2 W4 H4 It\n", "YUV4MPEG2 W3 H4 C420\n"] {
            assert!(matches!(read_y4m(h.as_bytes()), Err(CliError::Format(_))), "{h}");
        }
        assert!(read_y4m(&b"YUV4MPEG2 W2 H2 Cmono\nFRAME\n\x01\x02"[..]).is_err());
        let v = read_y4m(&b"YUV4MPEG2 W2 H2 Cmono\nFRAME\n\x01\x02\x03\x04"[..]).unwrap();
        assert_eq!(v.frames[0], vec![vec![1, 2, 3, 4]]);
        assert!(read_y4m(&b"YUV4MPEG2 W2 H2 Cmono10\nFRAME\n\xff\xff\0\0\0\0\0\0"[..]).is_err());
    }
}
