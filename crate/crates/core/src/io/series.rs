//! Sample-series input: observed cumulative passenger counts per pair.
//!
//! Format: `pair <origin> <destination>` opens a section, then one row
//! per observation with `<minutes> <cumulative_count>`. Blank lines and
//! `#` comments are ignored. Bad rows are collected as diagnostics; more
//! than a tenth of them aborts the read.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::demand::SampleSeries;
use crate::error::{Error, Result};
use crate::io::{content_lines, num, parse_usize};

/// One tolerated bad row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub line: usize,
    pub message: String,
}

pub type SeriesMap = BTreeMap<(usize, usize), SampleSeries>;

/// Parse sample sections from text. Returns the series per pair plus the
/// diagnostics for rows that were skipped.
pub fn parse_sample_series(text: &str, source: &str) -> Result<(SeriesMap, Vec<RowDiagnostic>)> {
    let mut raw: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    let mut current: Option<(usize, usize)> = None;
    let mut diagnostics = Vec::new();
    let mut data_rows = 0usize;

    for (line_no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "pair" {
            if fields.len() != 3 {
                return Err(Error::parse(
                    source,
                    line_no,
                    "pair header needs exactly an origin and a destination",
                ));
            }
            let origin = parse_usize(fields[1], source, line_no)?;
            let destination = parse_usize(fields[2], source, line_no)?;
            let key = (origin, destination);
            if raw.contains_key(&key) {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("pair {} {} appears twice", origin, destination),
                ));
            }
            raw.insert(key, Vec::new());
            current = Some(key);
            continue;
        }
        data_rows += 1;
        let mut bad = |message: String| {
            diagnostics.push(RowDiagnostic {
                line: line_no,
                message,
            });
        };
        let Some(key) = current else {
            bad("data row before any pair header".into());
            continue;
        };
        if fields.len() != 2 {
            bad(format!("expected 2 fields, got {}", fields.len()));
            continue;
        }
        let t = match fields[0].parse::<f64>() {
            Ok(v) => v,
            Err(_) => {
                bad(format!("bad time {:?}", fields[0]));
                continue;
            }
        };
        let y = match fields[1].parse::<f64>() {
            Ok(v) => v,
            Err(_) => {
                bad(format!("bad count {:?}", fields[1]));
                continue;
            }
        };
        raw.get_mut(&key).expect("section exists").push((t, y));
    }

    if data_rows == 0 {
        return Err(Error::parse(source, 0, "no sample rows"));
    }
    if diagnostics.len() * 10 > data_rows {
        return Err(Error::parse(
            source,
            diagnostics[0].line,
            format!(
                "{} of {} rows malformed, first: {}",
                diagnostics.len(),
                data_rows,
                diagnostics[0].message
            ),
        ));
    }

    let mut out = BTreeMap::new();
    for ((i, j), rows) in raw {
        let (times, values): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        let series = SampleSeries::new(times, values).map_err(|e| {
            Error::parse(source, 0, format!("pair {} {}: {}", i, j, e))
        })?;
        out.insert((i, j), series);
    }
    Ok((out, diagnostics))
}

pub fn read_sample_series(path: &Path) -> Result<(SeriesMap, Vec<RowDiagnostic>)> {
    let text = std::fs::read_to_string(path)?;
    parse_sample_series(&text, &path.display().to_string())
}

/// Write sections in pair order, full precision.
pub fn format_sample_series(series: &SeriesMap) -> String {
    let mut out = String::from("# observed cumulative passengers per pair\n");
    for ((i, j), s) in series {
        writeln!(out, "pair {} {}", i, j).expect("string write");
        for (t, y) in s.times().iter().zip(s.values()) {
            writeln!(out, "{} {}", num(*t), num(*y)).expect("string write");
        }
    }
    out
}

pub fn write_sample_series(path: &Path, series: &SeriesMap) -> Result<()> {
    std::fs::write(path, format_sample_series(series))?;
    Ok(())
}
