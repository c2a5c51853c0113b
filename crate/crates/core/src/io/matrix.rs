//! Fitted demand matrix serialization.
//!
//! Header, then one section per pair: `pair <origin> <destination>
//! <n_terms>` followed by one `weight steepness center` row per term.
//! Values are full precision and reload bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::demand::{OdMatrix, SigmoidSum, SigmoidTerm};
use crate::error::{Error, Result};
use crate::io::{content_lines, num, parse_f64, parse_usize};

const HEADER: &str = "od-matrix 1";

pub fn format_matrix(od: &OdMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "{}", HEADER).expect("string write");
    writeln!(out, "stations {}", od.n_stations()).expect("string write");
    for (i, j, curve) in od.pairs() {
        writeln!(out, "pair {} {} {}", i, j, curve.terms().len()).expect("string write");
        for term in curve.terms() {
            writeln!(
                out,
                "{} {} {}",
                num(term.weight),
                num(term.steepness),
                num(term.center)
            )
            .expect("string write");
        }
    }
    out
}

pub fn parse_matrix(text: &str, source: &str) -> Result<OdMatrix> {
    let mut lines = content_lines(text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source, 0, "empty matrix file"))?;
    if header != HEADER {
        return Err(Error::parse(
            source,
            line_no,
            format!("expected {:?} header, got {:?}", HEADER, header),
        ));
    }
    let (line_no, stations_line) = lines
        .next()
        .ok_or_else(|| Error::parse(source, line_no, "missing stations line"))?;
    let fields: Vec<&str> = stations_line.split_whitespace().collect();
    if fields.len() != 2 || fields[0] != "stations" {
        return Err(Error::parse(source, line_no, "expected `stations <count>`"));
    }
    let n_stations = parse_usize(fields[1], source, line_no)?;
    let mut od = OdMatrix::new(n_stations).map_err(|e| Error::parse(source, line_no, e.to_string()))?;

    let mut pending: Option<((usize, usize), usize, Vec<SigmoidTerm>, usize)> = None;
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "pair" {
            if let Some(((i, j), want, terms, at)) = pending.take() {
                if terms.len() != want {
                    return Err(Error::parse(
                        source,
                        at,
                        format!("pair {} {} promised {} terms, found {}", i, j, want, terms.len()),
                    ));
                }
                od.set(i, j, SigmoidSum::new(terms))
                    .map_err(|e| Error::parse(source, at, e.to_string()))?;
            }
            if fields.len() != 4 {
                return Err(Error::parse(
                    source,
                    line_no,
                    "pair header needs origin, destination, and term count",
                ));
            }
            let i = parse_usize(fields[1], source, line_no)?;
            let j = parse_usize(fields[2], source, line_no)?;
            let want = parse_usize(fields[3], source, line_no)?;
            pending = Some(((i, j), want, Vec::new(), line_no));
            continue;
        }
        let Some((_, _, terms, _)) = pending.as_mut() else {
            return Err(Error::parse(source, line_no, "term row before any pair header"));
        };
        if fields.len() != 3 {
            return Err(Error::parse(
                source,
                line_no,
                "term row needs weight, steepness, center",
            ));
        }
        let weight = parse_f64(fields[0], source, line_no)?;
        let steepness = parse_f64(fields[1], source, line_no)?;
        let center = parse_f64(fields[2], source, line_no)?;
        terms.push(
            SigmoidTerm::new(weight, steepness, center)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))?,
        );
    }
    if let Some(((i, j), want, terms, at)) = pending.take() {
        if terms.len() != want {
            return Err(Error::parse(
                source,
                at,
                format!("pair {} {} promised {} terms, found {}", i, j, want, terms.len()),
            ));
        }
        od.set(i, j, SigmoidSum::new(terms))
            .map_err(|e| Error::parse(source, at, e.to_string()))?;
    }
    Ok(od)
}

pub fn write_matrix(path: &Path, od: &OdMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(od))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<OdMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text, &path.display().to_string())
}
