//! Report and stream files.
//!
//! | file              | columns                                                        |
//! |-------------------|----------------------------------------------------------------|
//! | `report.json`     | [`Report`]                                                     |
//! | `histogram.csv`   | depends on the experiment, see [`histogram_table`]            |
//! | `events.csv`      | `window_index, arrival_time_ns, bin` (source truth)            |
//! | `detections.csv`  | `window_index, pixel, fire_time_ns` (detector truth)           |
//! | `decoded.csv`     | `window_index, pixel, origin_time_ns, flag, polarity`          |
//! | `trace.csv`       | `window_index, polarity, time_ns, amplitude`                   |
//! | `persistence.csv` | `delay_ns, amplitude, count`, occupied cells only              |
//!
//! Times in the stream files are relative to the start of their window.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use galton_core::readout::{DecodeFlag, DecodedEvent, PersistenceTrace, Polarity};
use serde::Serialize;

use crate::error::HarnessError;
use crate::experiments::{poisson_expected, ExperimentResult, Report, Run};

/// A CSV table held as strings so every writer formats numbers the same way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn polarity(p: Polarity) -> &'static str {
    match p {
        Polarity::Positive => "positive",
        Polarity::Negative => "negative",
    }
}

fn flag(f: DecodeFlag) -> &'static str {
    match f {
        DecodeFlag::Ok => "ok",
        DecodeFlag::Ambiguous => "ambiguous",
        DecodeFlag::Orphan => "orphan",
        DecodeFlag::OutOfRange => "out-of-range",
    }
}

/// The plotted histogram of each experiment:
///
/// * interference: `bin, count, model, truth_count`
/// * counting: `photons, windows, expected`
/// * intervals: `start_ns, end_ns, count, expected` (last row is the open tail)
/// * persistence: `delay_ns, count`
pub fn histogram_table(run: &Run) -> Table {
    match &run.report.result {
        ExperimentResult::Interference(r) => {
            let mut t = Table::new(vec!["bin", "count", "model", "truth_count"]);
            for (i, c) in r.histogram.iter().enumerate() {
                t.push(vec![
                    i.to_string(),
                    c.to_string(),
                    num(r.fit.model[i]),
                    r.truth.histogram[i].to_string(),
                ]);
            }
            t
        }
        ExperimentResult::Counting(r) => {
            let mut t = Table::new(vec!["photons", "windows", "expected"]);
            for (n, (c, e)) in r.histogram.iter().zip(poisson_expected(&r.fit)).enumerate() {
                t.push(vec![n.to_string(), c.to_string(), num(e)]);
            }
            t
        }
        ExperimentResult::Intervals(r) => {
            let mut t = Table::new(vec!["start_ns", "end_ns", "count", "expected"]);
            if let Some(fit) = &r.fit {
                let bins = &fit.bins;
                let model = bins.model(fit.fit.estimate);
                let n = fit.fit.n_samples as f64;
                let last = bins.counts.len() - 1;
                for (k, c) in bins.counts.iter().enumerate() {
                    let end = if k == last { f64::INFINITY } else { (k + 1) as f64 * bins.bin_width };
                    t.push(vec![num(k as f64 * bins.bin_width), num(end), c.to_string(), num(model[k] * n)]);
                }
            }
            t
        }
        ExperimentResult::Persistence(_) => {
            let mut t = Table::new(vec!["delay_ns", "count"]);
            if let Some(trace) = &run.persistence {
                for (k, c) in trace.delay_profile().iter().enumerate() {
                    t.push(vec![num(trace.delay_center(k) * 1e9), c.to_string()]);
                }
            }
            t
        }
    }
}

pub fn events_table(run: &Run) -> Table {
    let mut t = Table::new(vec!["window_index", "arrival_time_ns", "bin"]);
    for w in &run.windows {
        for p in &w.photons {
            t.push(vec![w.index.to_string(), num(p.arrival_time * 1e9), p.bin.to_string()]);
        }
    }
    t
}

pub fn detections_table(run: &Run) -> Table {
    let mut t = Table::new(vec!["window_index", "pixel", "fire_time_ns"]);
    for w in &run.windows {
        for d in &w.detections {
            t.push(vec![w.index.to_string(), d.pixel.to_string(), num(d.fire_time * 1e9)]);
        }
    }
    t
}

pub const DECODED_HEADER: [&str; 5] = ["window_index", "pixel", "origin_time_ns", "flag", "polarity"];

pub fn decoded_row(window_index: u64, d: &DecodedEvent) -> Vec<String> {
    vec![
        window_index.to_string(),
        d.pixel.map(|p| p.to_string()).unwrap_or_default(),
        num(d.origin_time * 1e9),
        flag(d.flag).to_string(),
        d.polarity.map(polarity).unwrap_or_default().to_string(),
    ]
}

pub fn decoded_table(run: &Run) -> Table {
    let mut t = Table::new(DECODED_HEADER.to_vec());
    for w in &run.windows {
        for d in &w.decoded {
            t.push(decoded_row(w.index, d));
        }
    }
    t
}

pub fn trace_table(run: &Run) -> Table {
    let mut t = Table::new(vec!["window_index", "polarity", "time_ns", "amplitude"]);
    for w in &run.windows {
        for e in &w.trace {
            t.push(vec![
                w.index.to_string(),
                polarity(e.polarity).to_string(),
                num(e.time * 1e9),
                num(e.amplitude),
            ]);
        }
    }
    t
}

pub fn persistence_table(trace: &PersistenceTrace) -> Table {
    let mut t = Table::new(vec!["delay_ns", "amplitude", "count"]);
    for (d, row) in trace.counts.iter().enumerate() {
        for (a, &c) in row.iter().enumerate().filter(|(_, c)| **c > 0) {
            t.push(vec![num(trace.delay_center(d) * 1e9), num(trace.amplitude_center(a)), c.to_string()]);
        }
    }
    t
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn report_json(report: &Report) -> String {
    to_json(report)
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Write every output of `run` into `dir`, creating it if needed.
pub fn write_run(run: &Run, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = vec![write(dir, "report.json", report_json(&run.report).as_bytes())?];
    let mut tables = vec![
        ("histogram.csv", histogram_table(run)),
        ("events.csv", events_table(run)),
        ("detections.csv", detections_table(run)),
        ("decoded.csv", decoded_table(run)),
        ("trace.csv", trace_table(run)),
    ];
    if let Some(trace) = &run.persistence {
        tables.push(("persistence.csv", persistence_table(trace)));
    }
    for (name, table) in tables {
        written.push(write(dir, name, table.to_csv_string().as_bytes())?);
    }
    Ok(written)
}
