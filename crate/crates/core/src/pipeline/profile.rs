//! Per-stage wall-time accounting across all workers.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Entropy,
    Intra,
    Inter,
    IqIt,
    Dblk,
    Sao,
    Alf,
    Ccalf,
    Lmcs,
    Other,
}

pub const STAGES: [Stage; 10] = [
    Stage::Entropy,
    Stage::Intra,
    Stage::Inter,
    Stage::IqIt,
    Stage::Dblk,
    Stage::Sao,
    Stage::Alf,
    Stage::Ccalf,
    Stage::Lmcs,
    Stage::Other,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Entropy => "entropy",
            Stage::Intra => "intra",
            Stage::Inter => "inter",
            Stage::IqIt => "IQ/IT",
            Stage::Dblk => "DBLK",
            Stage::Sao => "SAO",
            Stage::Alf => "ALF",
            Stage::Ccalf => "CCALF",
            Stage::Lmcs => "LMCS",
            Stage::Other => "other",
        }
    }
}

#[derive(Debug, Default)]
pub struct Profiler {
    enabled: bool,
    ns: [AtomicU64; 10],
    jobs_ns: AtomicU64,
}

impl Profiler {
    pub fn new(enabled: bool) -> Self {
        Self { enabled, ..Default::default() }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    #[inline]
    pub fn start(&self) -> Option<Instant> {
        self.enabled.then(Instant::now)
    }

    #[inline]
    pub fn stop(&self, stage: Stage, t: Option<Instant>) {
        if let Some(t) = t {
            self.ns[stage as usize].fetch_add(t.elapsed().as_nanos() as u64, Ordering::Relaxed);
        }
    }

    #[inline]
    pub fn time<R>(&self, stage: Stage, f: impl FnOnce() -> R) -> R {
        let t = self.start();
        let r = f();
        self.stop(stage, t);
        r
    }

    /// Whole-job time; whatever the stages do not claim counts as other.
    pub fn job(&self, t: Option<Instant>) {
        if let Some(t) = t {
            self.jobs_ns.fetch_add(t.elapsed().as_nanos() as u64, Ordering::Relaxed);
        }
    }

    pub fn snapshot(&self) -> StageProfile {
        let mut ns: [u64; 10] = std::array::from_fn(|i| self.ns[i].load(Ordering::Relaxed));
        let claimed: u64 = ns.iter().sum();
        ns[Stage::Other as usize] += self.jobs_ns.load(Ordering::Relaxed).saturating_sub(claimed);
        StageProfile { ns }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageProfile {
    pub ns: [u64; 10],
}

impl StageProfile {
    pub fn total_ns(&self) -> u64 {
        self.ns.iter().sum()
    }

    pub fn percent(&self, stage: Stage) -> f64 {
        let t = self.total_ns();
        if t == 0 {
            0.0
        } else {
            self.ns[stage as usize] as f64 * 100.0 / t as f64
        }
    }

    pub fn percentages(&self) -> Vec<(Stage, f64)> {
        STAGES.iter().map(|&s| (s, self.percent(s))).collect()
    }

    pub fn add(&mut self, other: &StageProfile) {
        for (a, b) in self.ns.iter_mut().zip(&other.ns) {
            *a += b;
        }
    }
}
