//! Job graph of one picture.

use std::collections::VecDeque;

use crate::bitio::PicType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JobKind {
    ParsePicture(usize),
    ReconCtu(usize, usize, usize),
    McPrefetch(usize, usize, usize, usize),
    FilterRow(usize, usize),
    OutputPicture(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobSpec {
    pub kind: JobKind,
    pub deps: Vec<JobKind>,
    /// `(reference picture, finalized rows required)`.
    pub gate: Option<(usize, usize)>,
}

/// Geometry the graph depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
    pub ctu: usize,
    pub height: usize,
    pub max_mv_y: usize,
}

impl GridShape {
    /// Reference rows CTU row `r` may read.
    pub fn gate_rows(&self, r: usize) -> usize {
        self.height.min((r + 1) * self.ctu + self.max_mv_y + 4)
    }

    pub fn recon_index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn filter_index(&self, r: usize) -> usize {
        self.rows * self.cols + r
    }

    pub fn output_index(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    pub fn node_count(&self) -> usize {
        self.output_index() + 1
    }
}

pub fn wavefront_deps(r: usize, c: usize, _rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut d = Vec::with_capacity(2);
    if c > 0 {
        d.push((r, c - 1));
    }
    if r > 0 {
        d.push((r - 1, (c + 1).min(cols - 1)));
    }
    d
}

/// Static jobs of picture `n`. McPrefetch jobs are added once parsing has
/// revealed the inter CUs; they are not part of this list.
pub fn build_job_graph(n: usize, pic_type: PicType, g: GridShape) -> Vec<JobSpec> {
    let mut jobs = vec![JobSpec { kind: JobKind::ParsePicture(n), deps: vec![], gate: None }];
    for r in 0..g.rows {
        for c in 0..g.cols {
            let mut deps = vec![JobKind::ParsePicture(n)];
            deps.extend(wavefront_deps(r, c, g.rows, g.cols).into_iter().map(|(r2, c2)| JobKind::ReconCtu(n, r2, c2)));
            let gate = (pic_type == PicType::P).then(|| (n.wrapping_sub(1), g.gate_rows(r)));
            jobs.push(JobSpec { kind: JobKind::ReconCtu(n, r, c), deps, gate });
        }
    }
    for r in 0..g.rows {
        let mut deps = vec![JobKind::ReconCtu(n, r, g.cols - 1)];
        if r + 1 < g.rows {
            deps.push(JobKind::ReconCtu(n, r + 1, g.cols - 1));
        }
        if r > 0 {
            deps.push(JobKind::FilterRow(n, r - 1));
        }
        jobs.push(JobSpec { kind: JobKind::FilterRow(n, r), deps, gate: None });
    }
    jobs.push(JobSpec { kind: JobKind::OutputPicture(n), deps: vec![JobKind::FilterRow(n, g.rows - 1)], gate: None });
    jobs
}

/// Topological order exists (Kahn's algorithm).
pub fn is_acyclic(jobs: &[JobSpec]) -> bool {
    let index: std::collections::HashMap<JobKind, usize> = jobs.iter().enumerate().map(|(i, j)| (j.kind, i)).collect();
    let mut indeg: Vec<usize> = jobs.iter().map(|j| j.deps.len()).collect();
    let mut out: Vec<Vec<usize>> = vec![vec![]; jobs.len()];
    for (i, j) in jobs.iter().enumerate() {
        for d in &j.deps {
            match index.get(d) {
                Some(&k) => out[k].push(i),
                None => return false,
            }
        }
    }
    let mut q: VecDeque<usize> = (0..jobs.len()).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = q.pop_front() {
        seen += 1;
        for &k in &out[i] {
            indeg[k] -= 1;
            if indeg[k] == 0 {
                q.push_back(k);
            }
        }
    }
    seen == jobs.len()
}
