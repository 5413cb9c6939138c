#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use tvc::pipeline::Frame;
use tvc_cli::hash::FrameHashes;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub struct Committed {
    pub name: String,
    pub stream: Vec<u8>,
    pub golden: Vec<[u8; 16]>,
}

/// Committed `.tvc` streams with their golden `.md5` files, sorted by name.
pub fn committed_corpus() -> Vec<Committed> {
    let mut names: Vec<String> = fs::read_dir(data_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "tvc").then(|| p.file_stem()?.to_str().map(String::from))?
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let stream = fs::read(data_dir().join(format!("{name}.tvc"))).expect("stream");
            let text = fs::read_to_string(data_dir().join(format!("{name}.md5"))).expect("golden hashes");
            let golden = FrameHashes::parse_frame_lines(&text).expect("golden format");
            Committed { name, stream, golden }
        })
        .collect()
}

pub fn hashes(frames: &[Frame]) -> Vec<[u8; 16]> {
    let bd = frames.first().map_or(8, |f| f.bit_depth);
    FrameHashes::of(frames.iter().map(|f| &f.planes[..]), bd).frames
}
