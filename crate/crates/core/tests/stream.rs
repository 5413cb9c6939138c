//! Whole-stream behaviour through the public decoder API.

use proptest::prelude::*;
use tvc::bitio::{ChromaFormat, SequenceHeader};
use tvc::encoder::corpus::{synth, Content};
use tvc::encoder::{encode_sequence, EncoderConfig, Gop};
use tvc::pipeline::{decode_stream, split_units, Decoder, DecoderConfig, Frame};

fn small_stream(content: Content, bd: u8, gop: Gop) -> (Vec<u8>, Vec<Frame>) {
    let video = synth(content, 64, 48, bd, ChromaFormat::Yuv420, 3, 5);
    let cfg = EncoderConfig { gop, qp: 30, log2_ctu: 5, max_mv_y: 16, fast: true, ..EncoderConfig::default() };
    encode_sequence(&video, &cfg).unwrap()
}

fn planes(frames: &[Frame]) -> Vec<&Vec<Vec<u16>>> {
    frames.iter().map(|f| &f.planes).collect()
}

#[test]
fn interleaved_feed_and_drain_matches_batch_decode() {
    let (stream, recon) = small_stream(Content::MovingBlocks, 8, Gop::Ippp);
    let (seq, rest) = SequenceHeader::parse(&stream).unwrap();
    let mut dec = Decoder::open(seq, DecoderConfig::with_workers(3)).unwrap();
    let mut frames = Vec::new();
    for unit in split_units(rest).unwrap() {
        dec.feed(unit).unwrap();
        if let Some(f) = dec.next_frame().unwrap() {
            frames.push(f);
        }
    }
    while let Some(f) = dec.next_frame().unwrap() {
        frames.push(f);
    }
    assert_eq!(planes(&frames), planes(&recon));
    assert_eq!(frames.iter().map(|f| f.index).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn in_flight_limit_does_not_change_output() {
    let (stream, recon) = small_stream(Content::Screen, 10, Gop::Ippp);
    for max_in_flight in [1, 2, 8] {
        let cfg = DecoderConfig { max_in_flight, ..DecoderConfig::with_workers(4) };
        let (_, frames) = decode_stream(&stream, cfg).unwrap();
        assert_eq!(planes(&frames), planes(&recon), "in flight {max_in_flight}");
    }
}

#[test]
fn wide_path_gives_the_same_samples() {
    let (stream, _) = small_stream(Content::Gradient, 8, Gop::AllIntra);
    let (_, narrow) = decode_stream(&stream, DecoderConfig::with_workers(2)).unwrap();
    let (_, wide) = decode_stream(&stream, DecoderConfig { wide_path: true, ..DecoderConfig::with_workers(2) }).unwrap();
    assert_eq!(narrow, wide);
}

#[test]
fn stream_starting_with_p_picture_is_rejected() {
    let (stream, _) = small_stream(Content::MovingBlocks, 8, Gop::Ippp);
    let (seq, rest) = SequenceHeader::parse(&stream).unwrap();
    let units = split_units(rest).unwrap();
    let mut dec = Decoder::open(seq, DecoderConfig::with_workers(1)).unwrap();
    assert!(dec.feed(units[1]).is_err());
}

#[test]
fn truncation_is_an_error() {
    let (stream, _) = small_stream(Content::Noise, 8, Gop::AllIntra);
    for cut in [0, 5, 17, stream.len() / 2, stream.len() - 1] {
        assert!(decode_stream(&stream[..cut], DecoderConfig::with_workers(2)).is_err(), "cut at {cut}");
    }
}

#[test]
fn invalid_worker_count_is_a_config_error() {
    let (stream, _) = small_stream(Content::Gradient, 8, Gop::AllIntra);
    assert!(matches!(decode_stream(&stream, DecoderConfig::with_workers(0)), Err(tvc::Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    // Corrupted payloads may decode to garbage or fail, but never panic or hang.
    #[test]
    fn corrupted_payload_never_panics(flips in prop::collection::vec((any::<prop::sample::Index>(), 1u8..=255), 1..6)) {
        let (stream, _) = small_stream(Content::MovingBlocks, 8, Gop::Ippp);
        let mut data = stream.clone();
        let body = tvc::bitio::SEQUENCE_HEADER_LEN..data.len();
        for (i, x) in flips {
            let at = body.start + i.index(body.len());
            data[at] ^= x;
        }
        if let Ok((_, frames)) = decode_stream(&data, DecoderConfig::with_workers(2)) {
            for f in &frames {
                let max = (1u16 << f.bit_depth) - 1;
                prop_assert!(f.planes.iter().flatten().all(|&v| v <= max));
            }
        }
    }
}
