//! Benchmark reports.
//!
//! CSV schema, one row per measurement:
//!
//! ```text
//! kind,name,path,workers,scalar_ns,vector_ns,speedup,fps,percent
//! ```
//!
//! * `kernel` rows: `name` is the kernel, `path` the sample path (`8bit` or
//!   `16bit`), `scalar_ns` / `vector_ns` are median ns per sample and
//!   `speedup` is their ratio.
//! * `decode` rows: `name` is the stream, `path` the sample path, `workers`
//!   the thread count, `fps` the median throughput and `speedup` the ratio to
//!   the 1-worker row of the same stream and path, when there is one.
//! * `stage` rows: `name` is the stage, `path` the stream it was profiled on
//!   and `percent` its share of decode time.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Kernel,
    Decode,
    Stage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: RowKind,
    pub name: String,
    pub path: String,
    pub workers: Option<usize>,
    pub scalar_ns: Option<f64>,
    pub vector_ns: Option<f64>,
    pub speedup: Option<f64>,
    pub fps: Option<f64>,
    pub percent: Option<f64>,
}

impl ReportRow {
    pub fn kernel(name: &str, path: &str, scalar_ns: f64, vector_ns: f64) -> Self {
        Self {
            kind: RowKind::Kernel,
            name: name.into(),
            path: path.into(),
            workers: None,
            scalar_ns: Some(scalar_ns),
            vector_ns: Some(vector_ns),
            speedup: Some(scalar_ns / vector_ns),
            fps: None,
            percent: None,
        }
    }

    pub fn decode(stream: &str, path: &str, workers: usize, fps: f64) -> Self {
        Self {
            kind: RowKind::Decode,
            name: stream.into(),
            path: path.into(),
            workers: Some(workers),
            scalar_ns: None,
            vector_ns: None,
            speedup: None,
            fps: Some(fps),
            percent: None,
        }
    }

    pub fn stage(stage: &str, stream: &str, percent: f64) -> Self {
        Self {
            kind: RowKind::Stage,
            name: stage.into(),
            path: stream.into(),
            workers: None,
            scalar_ns: None,
            vector_ns: None,
            speedup: None,
            fps: None,
            percent: Some(percent),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

fn fmt(v: Option<f64>, digits: usize) -> String {
    v.map_or(String::new(), |v| format!("{v:.digits$}"))
}

impl BenchReport {
    /// Fills decode-row speedups relative to the 1-worker row of the same
    /// stream and path.
    pub fn fill_scaling(&mut self) {
        let base: Vec<(String, String, f64)> = self
            .rows
            .iter()
            .filter(|r| r.kind == RowKind::Decode && r.workers == Some(1))
            .filter_map(|r| Some((r.name.clone(), r.path.clone(), r.fps?)))
            .collect();
        for r in self.rows.iter_mut().filter(|r| r.kind == RowKind::Decode) {
            if let Some((_, _, b)) = base.iter().find(|(n, p, _)| *n == r.name && *p == r.path) {
                r.speedup = r.fps.map(|f| f / b);
            }
        }
    }

    /// Checks the row invariants: positive speedups and fps, and stage
    /// shares of each stream summing to 100 ± 0.5.
    pub fn validate(&self) -> Result<(), CliError> {
        for r in &self.rows {
            if r.speedup.is_some_and(|s| !(s > 0.0)) || r.fps.is_some_and(|f| !(f > 0.0)) {
                return Err(CliError::format(format!("non-positive measurement in row {r:?}")));
            }
        }
        let mut streams: Vec<&str> = self.rows.iter().filter(|r| r.kind == RowKind::Stage).map(|r| r.path.as_str()).collect();
        streams.dedup();
        for s in streams {
            let total: f64 = self.rows.iter().filter(|r| r.kind == RowKind::Stage && r.path == s).filter_map(|r| r.percent).sum();
            if (total - 100.0).abs() > 0.5 {
                return Err(CliError::format(format!("stage shares of {s} sum to {total:.2}")));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(COLUMNS).map_err(csv_err)?;
        for r in &self.rows {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv(input: impl Read) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>() != COLUMNS {
            return Err(CliError::format(format!("unexpected CSV columns {:?}", header)));
        }
        let rows = r.deserialize().collect::<Result<Vec<ReportRow>, _>>().map_err(csv_err)?;
        Ok(Self { rows })
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let kernels: Vec<_> = self.rows.iter().filter(|r| r.kind == RowKind::Kernel).collect();
        if !kernels.is_empty() {
            s += "| kernel | path | scalar ns/sample | vector ns/sample | speedup |\n|---|---|---:|---:|---:|\n";
            for r in kernels {
                s += &format!("| {} | {} | {} | {} | {} |\n", r.name, r.path, fmt(r.scalar_ns, 3), fmt(r.vector_ns, 3), fmt(r.speedup, 2));
            }
            s += "\n";
        }
        let decode: Vec<_> = self.rows.iter().filter(|r| r.kind == RowKind::Decode).collect();
        if !decode.is_empty() {
            s += "| stream | path | workers | fps | speedup |\n|---|---|---:|---:|---:|\n";
            for r in decode {
                let w = r.workers.map_or(String::new(), |w| w.to_string());
                s += &format!("| {} | {} | {} | {} | {} |\n", r.name, r.path, w, fmt(r.fps, 2), fmt(r.speedup, 2));
            }
            s += "\n";
        }
        let stages: Vec<_> = self.rows.iter().filter(|r| r.kind == RowKind::Stage).collect();
        if !stages.is_empty() {
            s += "| stream | stage | percent |\n|---|---|---:|\n";
            for r in stages {
                s += &format!("| {} | {} | {} |\n", r.path, r.name, fmt(r.percent, 1));
            }
        }
        s
    }
}

pub const COLUMNS: [&str; 9] = ["kind", "name", "path", "workers", "scalar_ns", "vector_ns", "speedup", "fps", "percent"];

fn csv_err(e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io(io),
            _ => unreachable!(),
        }
    } else {
        CliError::format(format!("CSV: {e}"))
    }
}
