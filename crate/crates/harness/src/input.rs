//! Readers for the standalone fit and decode commands.
//!
//! Numeric inputs are either a JSON array or a CSV file; in a CSV the first
//! column whose header matches one of the accepted names is used, falling
//! back to the only column of a one-column file.

use std::path::Path;

use galton_core::readout::{Polarity, TraceEvent};

use crate::error::HarnessError;

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn csv_column(path: &Path, text: &str, names: &[&str]) -> Result<Vec<String>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| HarnessError::input(path, e.to_string()))?
        .clone();
    let column = names
        .iter()
        .find_map(|n| header.iter().position(|h| h == *n))
        .or_else(|| (header.len() == 1).then_some(0))
        .ok_or_else(|| HarnessError::input(path, format!("no column named {}", names.join(" or "))))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::input(path, e.to_string()))?;
        out.push(record.get(column).unwrap_or_default().to_string());
    }
    Ok(out)
}

fn parse_all<T: std::str::FromStr>(path: &Path, cells: Vec<String>) -> Result<Vec<T>, HarnessError> {
    cells
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.parse()
                .map_err(|_| HarnessError::input(path, format!("row {}: cannot parse {c:?}", i + 1)))
        })
        .collect()
}

/// Non-negative integers: bin counts or per-window photon counts.
pub fn read_counts(path: &Path, names: &[&str]) -> Result<Vec<u64>, HarnessError> {
    let text = read(path)?;
    if is_json(path) {
        serde_json::from_str(&text).map_err(|e| HarnessError::input(path, e.to_string()))
    } else {
        parse_all(path, csv_column(path, &text, names)?)
    }
}

pub fn read_values(path: &Path, names: &[&str]) -> Result<Vec<f64>, HarnessError> {
    let text = read(path)?;
    if is_json(path) {
        serde_json::from_str(&text).map_err(|e| HarnessError::input(path, e.to_string()))
    } else {
        parse_all(path, csv_column(path, &text, names)?)
    }
}

/// Pulses grouped by window, in file order of first appearance. A file
/// without a `window_index` column is one window.
pub fn read_trace(path: &Path) -> Result<Vec<(u64, Vec<TraceEvent>)>, HarnessError> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| HarnessError::input(path, e.to_string()))?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(pol), Some(time), Some(amp)) = (col("polarity"), col("time_ns"), col("amplitude")) else {
        return Err(HarnessError::input(path, "trace needs polarity, time_ns and amplitude columns"));
    };
    let window = col("window_index");

    let mut groups: Vec<(u64, Vec<TraceEvent>)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HarnessError::input(path, e.to_string()))?;
        let bad = |what: &str| HarnessError::input(path, format!("row {}: bad {what}", row + 1));
        let polarity = match record.get(pol).unwrap_or_default() {
            "positive" | "+" => Polarity::Positive,
            "negative" | "-" => Polarity::Negative,
            _ => return Err(bad("polarity")),
        };
        let time_ns: f64 = record.get(time).unwrap_or_default().parse().map_err(|_| bad("time_ns"))?;
        let amplitude: f64 = record.get(amp).unwrap_or_default().parse().map_err(|_| bad("amplitude"))?;
        let index: u64 = match window {
            Some(c) => record.get(c).unwrap_or_default().parse().map_err(|_| bad("window_index"))?,
            None => 0,
        };
        let event = TraceEvent {
            polarity,
            time: time_ns * 1e-9,
            amplitude,
        };
        match groups.iter_mut().find(|g| g.0 == index) {
            Some(g) => g.1.push(event),
            None => groups.push((index, vec![event])),
        }
    }
    for g in &mut groups {
        g.1.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(name: &str, body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn counts_from_named_column_or_json() {
        let (_d, p) = file("h.csv", "bin,count,model\n0,5,0.1\n1,7,0.2\n");
        assert_eq!(read_counts(&p, &["count"]).unwrap(), vec![5, 7]);
        let (_d, p) = file("h.json", "[1, 2, 3]");
        assert_eq!(read_counts(&p, &["count"]).unwrap(), vec![1, 2, 3]);
        let (_d, p) = file("single.csv", "whatever\n4\n");
        assert_eq!(read_counts(&p, &["count"]).unwrap(), vec![4]);
    }

    #[test]
    fn malformed_input_is_reported() {
        let (_d, p) = file("h.csv", "a,b\n1,2\n");
        assert!(matches!(read_counts(&p, &["count"]), Err(HarnessError::Input { .. })));
        let (_d, p) = file("h.csv", "count\nx\n");
        assert!(matches!(read_counts(&p, &["count"]), Err(HarnessError::Input { .. })));
        let (_d, p) = file("t.csv", "polarity,time_ns,amplitude\nsideways,1,1\n");
        assert!(read_trace(&p).is_err());
    }

    #[test]
    fn trace_grouped_by_window() {
        let (_d, p) = file(
            "t.csv",
            "window_index,polarity,time_ns,amplitude\n0,negative,13.5,0.6\n0,positive,0,1\n2,positive,5,1\n",
        );
        let g = read_trace(&p).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].1[0].polarity, Polarity::Positive);
        assert_eq!(g[1].0, 2);
    }
}
