//! File formats.
//!
//! Machine-readable files carry numbers at full precision using the
//! shortest representation that parses back to the same bits, so every
//! artifact round-trips exactly. Report tables round to two decimals for
//! stable, readable output. All writers emit lines in a fixed order.

pub mod config;
pub mod flow_export;
pub mod matrix;
pub mod report;
pub mod series;
pub mod timetable;

use crate::error::{Error, Result};

/// Full-precision text for one value. `f64` display is the shortest form
/// that parses back bit-exactly.
pub(crate) fn num(v: f64) -> String {
    format!("{}", v)
}

pub(crate) fn parse_f64(token: &str, source: &str, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| Error::parse(source, line, format!("expected a number, got {:?}", token)))
}

pub(crate) fn parse_usize(token: &str, source: &str, line: usize) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| Error::parse(source, line, format!("expected an index, got {:?}", token)))
}

pub(crate) fn parse_u32(token: &str, source: &str, line: usize) -> Result<u32> {
    token
        .parse::<u32>()
        .map_err(|_| Error::parse(source, line, format!("expected a count, got {:?}", token)))
}

/// Content lines with their 1-based numbers, comments and blanks skipped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}
