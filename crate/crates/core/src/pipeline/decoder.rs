//! Decoder engine: picture admission, job execution on the worker pool,
//! counter gates on reference pictures, and frame output.

use std::collections::{BTreeMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::thread::JoinHandle;

use crate::bitio::{ChromaFormat, PicType, PictureHeader, RangeDecoder, SequenceHeader};
use crate::kernels::{Kernels, Pixel, Variant};
use crate::syntax::{parse_ctu, CtuCoder, CuMode, ParsedCtu};
use crate::{Error, Result};

use super::filter::{band_limits, build_edge_maps, filter_row, EdgeMaps};
use super::graph::{build_job_graph, GridShape, JobKind};
use super::pool::JobQueue;
use super::profile::{Profiler, Stage, StageProfile};
use super::recon::{mc_predict, recon_ctu, PicInfo, PicPlanes, Scratch};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderConfig {
    pub workers: usize,
    pub max_in_flight: usize,
    pub force_scalar: bool,
    pub profiling: bool,
    /// Motion compensation as separate prefetch jobs per inter CU.
    pub sub_ctu: bool,
    /// Decode 8-bit streams on the 16-bit sample path.
    pub wide_path: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_in_flight: 4,
            force_scalar: false,
            profiling: false,
            sub_ctu: true,
            wide_path: false,
        }
    }
}

impl DecoderConfig {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=1024).contains(&self.workers) {
            return Err(Error::Config(format!("worker count {} outside [1, 1024]", self.workers)));
        }
        if self.max_in_flight == 0 {
            return Err(Error::Config("in-flight picture limit must be at least 1".into()));
        }
        Ok(())
    }
}

/// A decoded picture in output order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    /// Decode-order index.
    pub index: usize,
    pub poc: u32,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma: ChromaFormat,
    /// Tightly packed planes, Y then Cb, Cr.
    pub planes: Vec<Vec<u16>>,
}

impl Frame {
    pub fn plane_dims(&self, p: usize) -> (usize, usize) {
        if p == 0 {
            (self.width, self.height)
        } else {
            (self.width / 2, self.height / 2)
        }
    }
}

/// Splits the picture-unit section of a stream into units.
pub fn split_units(mut data: &[u8]) -> Result<Vec<&[u8]>> {
    let mut units = vec![];
    while !data.is_empty() {
        if data.len() < 4 {
            return Err(Error::Truncated("picture unit size"));
        }
        let size = u32::from_be_bytes(data[..4].try_into().unwrap()) as usize;
        if data.len() - 4 < size {
            return Err(Error::Truncated("payload_size exceeds remaining stream"));
        }
        units.push(&data[..4 + size]);
        data = &data[4 + size..];
    }
    Ok(units)
}

#[derive(Clone, Copy, Debug)]
enum Job {
    Parse,
    Node(usize),
    Mc(usize, usize),
}

type Task<P> = (Arc<Picture<P>>, Job);

struct Gate<P: Pixel> {
    rows: usize,
    waiters: BTreeMap<usize, Vec<Task<P>>>,
}

struct Picture<P: Pixel> {
    index: usize,
    header: PictureHeader,
    info: PicInfo,
    shape: GridShape,
    payload: Vec<u8>,
    planes: PicPlanes<P>,
    ctus: OnceLock<Vec<ParsedCtu>>,
    edges: OnceLock<EdgeMaps>,
    staged: OnceLock<Vec<Mutex<Vec<Option<Vec<P>>>>>>,
    reference: Mutex<Option<Arc<Picture<P>>>>,
    counts: Vec<AtomicUsize>,
    dependents: Vec<Vec<usize>>,
    gated: bool,
    gate: Mutex<Gate<P>>,
    finalized: AtomicUsize,
    failed: AtomicBool,
    error: Mutex<Option<Error>>,
    done: Mutex<bool>,
    done_cv: Condvar,
}

impl<P: Pixel> Picture<P> {
    fn new(index: usize, seq: &SequenceHeader, header: PictureHeader, payload: Vec<u8>, reference: Option<Arc<Picture<P>>>) -> Self {
        let info = PicInfo::new(seq, &header);
        let shape = GridShape {
            rows: info.pp.ctu_rows(),
            cols: info.pp.ctu_cols(),
            ctu: info.pp.ctu_size(),
            height: info.pp.height,
            max_mv_y: seq.max_mv_y as usize,
        };
        let specs = build_job_graph(index, header.pic_type, shape);
        debug_assert!(super::graph::is_acyclic(&specs));
        let node = |k: &JobKind| match *k {
            JobKind::ReconCtu(_, r, c) => Some(shape.recon_index(r, c)),
            JobKind::FilterRow(_, r) => Some(shape.filter_index(r)),
            JobKind::OutputPicture(_) => Some(shape.output_index()),
            _ => None,
        };
        let mut counts = vec![0usize; shape.node_count()];
        let mut dependents = vec![vec![]; shape.node_count()];
        for s in &specs {
            let Some(i) = node(&s.kind) else { continue };
            counts[i] = s.deps.len();
            for d in &s.deps {
                if let Some(j) = node(d) {
                    dependents[j].push(i);
                }
            }
        }
        let planes = PicPlanes::new(&info);
        Self {
            index,
            gated: header.pic_type == PicType::P,
            header,
            info,
            shape,
            payload,
            planes,
            ctus: OnceLock::new(),
            edges: OnceLock::new(),
            staged: OnceLock::new(),
            reference: Mutex::new(reference),
            counts: counts.into_iter().map(AtomicUsize::new).collect(),
            dependents,
            gate: Mutex::new(Gate { rows: 0, waiters: BTreeMap::new() }),
            finalized: AtomicUsize::new(0),
            failed: AtomicBool::new(false),
            error: Mutex::new(None),
            done: Mutex::new(false),
            done_cv: Condvar::new(),
        }
    }

    fn fail(&self, e: Error) {
        let mut slot = self.error.lock().unwrap();
        if slot.is_none() {
            *slot = Some(e);
        }
        self.failed.store(true, Ordering::Release);
    }

    fn is_failed(&self) -> bool {
        self.failed.load(Ordering::Acquire)
    }

    fn wait_done(&self) {
        let mut d = self.done.lock().unwrap();
        while !*d {
            d = self.done_cv.wait(d).unwrap();
        }
    }

    fn to_frame(&self) -> Frame {
        // SAFETY: the picture is complete; nothing writes its planes.
        let planes = unsafe { self.planes.final_samples() };
        Frame {
            index: self.index,
            poc: self.header.poc,
            width: self.info.pp.width,
            height: self.info.pp.height,
            bit_depth: self.info.bit_depth,
            chroma: if self.info.pp.chroma { ChromaFormat::Yuv420 } else { ChromaFormat::Monochrome },
            planes,
        }
    }
}

struct Shared<P: Pixel> {
    queue: JobQueue<Task<P>>,
    kernels: Kernels<P>,
    prof: Profiler,
    sub_ctu: bool,
}

impl<P: Pixel> Shared<P> {
    fn ready(&self, pic: &Arc<Picture<P>>, job: Job) {
        if pic.gated {
            let ctu = match job {
                Job::Node(i) if i < pic.shape.rows * pic.shape.cols => Some(i),
                Job::Mc(i, _) => Some(i),
                _ => None,
            };
            if let Some(i) = ctu {
                let need = pic.shape.gate_rows(i / pic.shape.cols);
                let reference = pic.reference.lock().unwrap().clone();
                if let Some(rp) = reference {
                    let mut g = rp.gate.lock().unwrap();
                    if g.rows < need {
                        g.waiters.entry(need).or_default().push((pic.clone(), job));
                        return;
                    }
                }
            }
        }
        self.queue.push((pic.clone(), job));
    }

    fn release(&self, pic: &Arc<Picture<P>>, node: usize) {
        if pic.counts[node].fetch_sub(1, Ordering::AcqRel) == 1 {
            self.ready(pic, Job::Node(node));
        }
    }

    fn publish(&self, pic: &Picture<P>, rows: usize) {
        let mut g = pic.gate.lock().unwrap();
        debug_assert!(rows >= g.rows);
        g.rows = rows;
        pic.finalized.store(rows, Ordering::Release);
        let rest = g.waiters.split_off(&(rows + 1));
        let ready = std::mem::replace(&mut g.waiters, rest);
        self.queue.push_all(ready.into_values().flatten());
    }

    fn run(&self, pic: Arc<Picture<P>>, job: Job) {
        let t = self.prof.start();
        let res = catch_unwind(AssertUnwindSafe(|| self.execute(&pic, job)));
        if let Err(e) = res {
            let msg = e
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| e.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".into());
            pic.fail(Error::Corrupt(format!("{job:?}: {msg}")));
            if let Job::Node(i) = job {
                if i >= pic.shape.rows * pic.shape.cols && i < pic.shape.output_index() {
                    let r = i - pic.shape.rows * pic.shape.cols;
                    self.publish(&pic, band_limits(&pic.info, Some(r)).finalized);
                }
            }
        }
        self.prof.job(t);
        self.complete(&pic, job);
    }

    fn execute(&self, pic: &Arc<Picture<P>>, job: Job) {
        let sh = &pic.shape;
        let rc = sh.rows * sh.cols;
        match job {
            Job::Parse => self.parse(pic),
            Job::Mc(i, j) => {
                if pic.is_failed() {
                    return;
                }
                let rp = pic.reference.lock().unwrap().clone().expect("P-picture without reference");
                let cu = &pic.ctus.get().unwrap()[i].cus[j];
                let t = self.prof.start();
                // SAFETY: the gate guarantees these reference rows are final.
                let refs = unsafe { rp.planes.final_rows(sh.gate_rows(i / sh.cols)) };
                let mut buf = Vec::new();
                mc_predict(&self.kernels, &pic.info, &refs, cu, &mut buf);
                self.prof.stop(Stage::Inter, t);
                pic.staged.get().unwrap()[i].lock().unwrap()[j] = Some(buf);
            }
            Job::Node(i) if i < rc => {
                let rp = pic.reference.lock().unwrap().clone();
                if let Some(rp) = &rp {
                    if rp.is_failed() {
                        pic.fail(Error::Corrupt(format!("reference picture {} failed", rp.index)));
                    }
                }
                if pic.is_failed() {
                    return;
                }
                let ctu = &pic.ctus.get().unwrap()[i];
                let staged = pic.staged.get().unwrap();
                let take = |j: usize| staged[i].lock().unwrap().get_mut(j).and_then(Option::take);
                let mut scratch = Scratch::default();
                // SAFETY: wavefront dependencies and the reference gate are met.
                unsafe {
                    let refs = rp.as_ref().map(|rp| rp.planes.final_rows(sh.gate_rows(i / sh.cols)));
                    recon_ctu(&self.kernels, &pic.info, &pic.planes, refs.as_deref(), ctu, &take, &mut scratch, &self.prof);
                }
            }
            Job::Node(i) if i < sh.output_index() => {
                let r = i - rc;
                let rows = if pic.is_failed() {
                    band_limits(&pic.info, Some(r)).finalized
                } else {
                    // SAFETY: filter rows run in order after the rows they read.
                    unsafe {
                        filter_row(
                            &self.kernels,
                            &pic.info,
                            &pic.planes,
                            pic.ctus.get().unwrap(),
                            pic.edges.get().unwrap(),
                            r,
                            &self.prof,
                        )
                    }
                };
                self.publish(pic, rows);
            }
            Job::Node(_) => {
                pic.reference.lock().unwrap().take();
            }
        }
    }

    fn parse(&self, pic: &Arc<Picture<P>>) {
        let t = self.prof.start();
        let sh = &pic.shape;
        let mut ctus = Vec::with_capacity(sh.rows * sh.cols);
        let res = (|| -> Result<()> {
            let mut dec = RangeDecoder::new(&pic.payload)?;
            let mut cc = CtuCoder::new(pic.info.pp);
            for r in 0..sh.rows {
                for c in 0..sh.cols {
                    ctus.push(parse_ctu(&mut dec, &mut cc, r, c)?);
                }
            }
            Ok(())
        })();
        self.prof.stop(Stage::Entropy, t);
        if let Err(e) = res {
            pic.fail(e);
        }
        let t = self.prof.start();
        if !pic.is_failed() {
            let _ = pic.edges.set(build_edge_maps(&pic.info, &ctus));
        }
        let staged = ctus.iter().map(|c| Mutex::new(vec![None; c.cus.len()])).collect();
        let _ = pic.staged.set(staged);
        let _ = pic.ctus.set(ctus);
        self.prof.stop(Stage::Other, t);
    }

    fn complete(&self, pic: &Arc<Picture<P>>, job: Job) {
        match job {
            Job::Parse => {
                let rc = pic.shape.rows * pic.shape.cols;
                if self.sub_ctu && pic.gated && !pic.is_failed() {
                    for (i, ctu) in pic.ctus.get().unwrap().iter().enumerate() {
                        let inter: Vec<usize> =
                            ctu.cus.iter().enumerate().filter(|(_, cu)| matches!(cu.mode, CuMode::Inter { .. })).map(|(j, _)| j).collect();
                        if inter.is_empty() {
                            continue;
                        }
                        pic.counts[i].fetch_add(inter.len(), Ordering::AcqRel);
                        for j in inter {
                            self.ready(pic, Job::Mc(i, j));
                        }
                    }
                }
                for i in 0..rc {
                    self.release(pic, i);
                }
            }
            Job::Mc(i, _) => self.release(pic, i),
            Job::Node(i) if i == pic.shape.output_index() => {
                *pic.done.lock().unwrap() = true;
                pic.done_cv.notify_all();
            }
            Job::Node(i) => {
                for &d in &pic.dependents[i] {
                    self.release(pic, d);
                }
            }
        }
    }
}

struct Engine<P: Pixel> {
    seq: SequenceHeader,
    shared: Arc<Shared<P>>,
    workers: Vec<JoinHandle<()>>,
    in_flight: VecDeque<Arc<Picture<P>>>,
    pending: VecDeque<(PictureHeader, Vec<u8>)>,
    last: Option<Arc<Picture<P>>>,
    next_index: usize,
    max_in_flight: usize,
}

impl<P: Pixel> Engine<P> {
    fn new(seq: SequenceHeader, cfg: &DecoderConfig) -> Result<Self> {
        let kernels = Kernels::new(if cfg.force_scalar { Variant::Scalar } else { Variant::Vector });
        let shared = Arc::new(Shared { queue: JobQueue::default(), kernels, prof: Profiler::new(cfg.profiling), sub_ctu: cfg.sub_ctu });
        let mut workers = Vec::with_capacity(cfg.workers);
        for i in 0..cfg.workers {
            let sh = shared.clone();
            let h = std::thread::Builder::new()
                .name(format!("tvc-worker-{i}"))
                .spawn(move || {
                    while let Some((pic, job)) = sh.queue.pop() {
                        sh.run(pic, job);
                    }
                })
                .map_err(|e| Error::Config(format!("cannot start worker: {e}")))?;
            workers.push(h);
        }
        Ok(Self {
            seq,
            shared,
            workers,
            in_flight: VecDeque::new(),
            pending: VecDeque::new(),
            last: None,
            next_index: 0,
            max_in_flight: cfg.max_in_flight,
        })
    }

    fn feed(&mut self, header: PictureHeader, payload: Vec<u8>) {
        self.pending.push_back((header, payload));
        self.admit();
    }

    fn admit(&mut self) {
        while self.in_flight.len() < self.max_in_flight {
            let Some((header, payload)) = self.pending.pop_front() else { break };
            let reference = if header.pic_type == PicType::P { self.last.clone() } else { None };
            let pic = Arc::new(Picture::new(self.next_index, &self.seq, header, payload, reference));
            self.next_index += 1;
            self.last = Some(pic.clone());
            self.in_flight.push_back(pic.clone());
            self.shared.queue.push((pic, Job::Parse));
        }
    }

    fn next_frame(&mut self) -> Result<Option<Frame>> {
        self.admit();
        let Some(pic) = self.in_flight.pop_front() else { return Ok(None) };
        pic.wait_done();
        self.admit();
        if let Some(e) = pic.error.lock().unwrap().take() {
            return Err(Error::Picture { picture: pic.index, source: Box::new(e) });
        }
        Ok(Some(pic.to_frame()))
    }

    fn shutdown(&mut self) {
        for pic in self.in_flight.drain(..) {
            pic.wait_done();
        }
        self.pending.clear();
        self.last = None;
        self.shared.queue.close();
        for h in self.workers.drain(..) {
            let _ = h.join();
        }
    }
}

impl<P: Pixel> Drop for Engine<P> {
    fn drop(&mut self) {
        self.shutdown();
    }
}

enum Inner {
    Narrow(Engine<u8>),
    Wide(Engine<u16>),
}

pub struct Decoder {
    seq: SequenceHeader,
    inner: Inner,
    seen_first: bool,
}

impl Decoder {
    pub fn open(seq: SequenceHeader, config: DecoderConfig) -> Result<Self> {
        seq.validate()?;
        config.validate()?;
        let inner = if seq.bit_depth == 8 && !config.wide_path {
            Inner::Narrow(Engine::new(seq, &config)?)
        } else {
            Inner::Wide(Engine::new(seq, &config)?)
        };
        Ok(Self { seq, inner, seen_first: false })
    }

    pub fn sequence(&self) -> &SequenceHeader {
        &self.seq
    }

    /// Sample path in use: 8 or 16 bits per stored sample.
    pub fn storage_bits(&self) -> u32 {
        match self.inner {
            Inner::Narrow(_) => 8,
            Inner::Wide(_) => 16,
        }
    }

    /// Queue one picture unit (size prefix included).
    pub fn feed(&mut self, unit: &[u8]) -> Result<()> {
        let (header, payload, rest) = PictureHeader::parse_unit(&self.seq, unit)?;
        if !rest.is_empty() {
            return Err(Error::format("payload_size", "trailing bytes after picture unit"));
        }
        if !self.seen_first && header.pic_type == PicType::P {
            return Err(Error::format("pic_type", "first picture is not an I-picture"));
        }
        self.seen_first = true;
        let payload = payload.to_vec();
        match &mut self.inner {
            Inner::Narrow(e) => e.feed(header, payload),
            Inner::Wide(e) => e.feed(header, payload),
        }
        Ok(())
    }

    /// Next frame in output order; `None` when everything fed is delivered.
    pub fn next_frame(&mut self) -> Result<Option<Frame>> {
        match &mut self.inner {
            Inner::Narrow(e) => e.next_frame(),
            Inner::Wide(e) => e.next_frame(),
        }
    }

    pub fn stage_profile(&self) -> StageProfile {
        match &self.inner {
            Inner::Narrow(e) => e.shared.prof.snapshot(),
            Inner::Wide(e) => e.shared.prof.snapshot(),
        }
    }

    pub fn close(self) {}
}

/// Decode a complete stream.
pub fn decode_stream(data: &[u8], config: DecoderConfig) -> Result<(SequenceHeader, Vec<Frame>)> {
    decode_stream_profiled(data, config).map(|(s, f, _)| (s, f))
}

/// [`decode_stream`], also returning the stage profile (all zero unless
/// `config.profiling` is set).
pub fn decode_stream_profiled(data: &[u8], config: DecoderConfig) -> Result<(SequenceHeader, Vec<Frame>, StageProfile)> {
    let (seq, rest) = SequenceHeader::parse(data)?;
    let mut dec = Decoder::open(seq, config)?;
    let mut frames = Vec::new();
    for unit in split_units(rest)? {
        dec.feed(unit)?;
        while dec_has_backlog(&dec) {
            match dec.next_frame()? {
                Some(f) => frames.push(f),
                None => break,
            }
        }
    }
    while let Some(f) = dec.next_frame()? {
        frames.push(f);
    }
    let prof = dec.stage_profile();
    Ok((seq, frames, prof))
}

fn dec_has_backlog(dec: &Decoder) -> bool {
    match &dec.inner {
        Inner::Narrow(e) => !e.pending.is_empty(),
        Inner::Wide(e) => !e.pending.is_empty(),
    }
}
