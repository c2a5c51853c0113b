//! Timetable serialization.
//!
//! Layout per train: a `config` line (activity, carriages, carriage
//! capacity), a `pace` line (unit time per segment), then one row per
//! station: `train station stop departure stop_time`. Station rows use
//! full-precision numbers so a rewrite of a loaded file is byte
//! identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{content_lines, num, parse_f64, parse_u32, parse_usize};
use crate::line::{Timetable, TrainConfig, TrainSchedule};

const HEADER: &str = "timetable 1";

pub fn format_timetable(tt: &Timetable) -> String {
    let mut out = String::new();
    writeln!(out, "{}", HEADER).expect("string write");
    writeln!(out, "stations {}", tt.n_stations()).expect("string write");
    writeln!(out, "trains {}", tt.trains.len()).expect("string write");
    writeln!(out, "# columns: train station stop departure stop_time").expect("string write");
    for (k, train) in tt.trains.iter().enumerate() {
        let state = if train.active { "active" } else { "parked" };
        writeln!(
            out,
            "config {} {} {} {}",
            k + 1,
            state,
            train.config.carriages,
            num(train.config.capacity_per_carriage)
        )
        .expect("string write");
        let mut pace = format!("pace {}", k + 1);
        for u in &train.unit_times {
            pace.push(' ');
            pace.push_str(&num(*u));
        }
        writeln!(out, "{}", pace).expect("string write");
        for i in 0..tt.n_stations() {
            writeln!(
                out,
                "{} {} {} {} {}",
                k + 1,
                i + 1,
                u8::from(train.stops[i]),
                num(train.departures[i]),
                num(train.stop_times[i])
            )
            .expect("string write");
        }
    }
    out
}

struct PartialTrain {
    active: Option<bool>,
    config: Option<TrainConfig>,
    unit_times: Option<Vec<f64>>,
    stops: Vec<Option<bool>>,
    departures: Vec<Option<f64>>,
    stop_times: Vec<Option<f64>>,
}

impl PartialTrain {
    fn new(n_stations: usize) -> Self {
        Self {
            active: None,
            config: None,
            unit_times: None,
            stops: vec![None; n_stations],
            departures: vec![None; n_stations],
            stop_times: vec![None; n_stations],
        }
    }
}

pub fn parse_timetable(text: &str, source: &str) -> Result<Timetable> {
    let mut lines = content_lines(text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source, 0, "empty timetable file"))?;
    if header != HEADER {
        return Err(Error::parse(
            source,
            line_no,
            format!("expected {:?} header, got {:?}", HEADER, header),
        ));
    }
    let mut n_stations: Option<usize> = None;
    let mut partial: Vec<PartialTrain> = Vec::new();

    let expect_counts = |source: &str, line_no: usize, partial: &Vec<PartialTrain>| {
        if partial.is_empty() {
            Err(Error::parse(
                source,
                line_no,
                "stations and trains counts must precede train data",
            ))
        } else {
            Ok(())
        }
    };

    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "stations" => {
                if fields.len() != 2 {
                    return Err(Error::parse(source, line_no, "expected `stations <count>`"));
                }
                n_stations = Some(parse_usize(fields[1], source, line_no)?);
            }
            "trains" => {
                if fields.len() != 2 {
                    return Err(Error::parse(source, line_no, "expected `trains <count>`"));
                }
                let s = n_stations
                    .ok_or_else(|| Error::parse(source, line_no, "stations count must come first"))?;
                let k = parse_usize(fields[1], source, line_no)?;
                partial = (0..k).map(|_| PartialTrain::new(s)).collect();
            }
            "config" => {
                expect_counts(source, line_no, &partial)?;
                if fields.len() != 5 {
                    return Err(Error::parse(
                        source,
                        line_no,
                        "config line needs train, state, carriages, carriage capacity",
                    ));
                }
                let k = train_index(fields[1], partial.len(), source, line_no)?;
                let active = match fields[2] {
                    "active" => true,
                    "parked" => false,
                    other => {
                        return Err(Error::parse(
                            source,
                            line_no,
                            format!("train state must be active or parked, got {:?}", other),
                        ))
                    }
                };
                let carriages = parse_u32(fields[3], source, line_no)?;
                let per_carriage = parse_f64(fields[4], source, line_no)?;
                partial[k].active = Some(active);
                partial[k].config = Some(
                    TrainConfig::new(carriages, per_carriage)
                        .map_err(|e| Error::parse(source, line_no, e.to_string()))?,
                );
            }
            "pace" => {
                expect_counts(source, line_no, &partial)?;
                let s = n_stations.expect("counts checked");
                if fields.len() != 1 + s {
                    return Err(Error::parse(
                        source,
                        line_no,
                        format!("pace line needs the train and {} segment times", s - 1),
                    ));
                }
                let k = train_index(fields[1], partial.len(), source, line_no)?;
                let mut unit_times = Vec::with_capacity(s - 1);
                for f in &fields[2..] {
                    unit_times.push(parse_f64(f, source, line_no)?);
                }
                partial[k].unit_times = Some(unit_times);
            }
            _ => {
                expect_counts(source, line_no, &partial)?;
                let s = n_stations.expect("counts checked");
                if fields.len() != 5 {
                    return Err(Error::parse(
                        source,
                        line_no,
                        "station row needs train, station, stop, departure, stop_time",
                    ));
                }
                let k = train_index(fields[0], partial.len(), source, line_no)?;
                let i = parse_usize(fields[1], source, line_no)?;
                if i < 1 || i > s {
                    return Err(Error::parse(
                        source,
                        line_no,
                        format!("station {} out of range 1..={}", i, s),
                    ));
                }
                let stop = match fields[2] {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::parse(
                            source,
                            line_no,
                            format!("stop flag must be 0 or 1, got {:?}", other),
                        ))
                    }
                };
                partial[k].stops[i - 1] = Some(stop);
                partial[k].departures[i - 1] = Some(parse_f64(fields[3], source, line_no)?);
                partial[k].stop_times[i - 1] = Some(parse_f64(fields[4], source, line_no)?);
            }
        }
    }

    let n_stations = n_stations.ok_or_else(|| Error::parse(source, 0, "missing stations count"))?;
    let mut trains = Vec::with_capacity(partial.len());
    for (k, p) in partial.into_iter().enumerate() {
        let missing = |what: &str| {
            Error::parse(source, 0, format!("train {} is missing {}", k + 1, what))
        };
        let train = TrainSchedule {
            active: p.active.ok_or_else(|| missing("a config line"))?,
            stops: collect_all(p.stops).ok_or_else(|| missing("station rows"))?,
            departures: collect_all(p.departures).ok_or_else(|| missing("station rows"))?,
            stop_times: collect_all(p.stop_times).ok_or_else(|| missing("station rows"))?,
            unit_times: p.unit_times.ok_or_else(|| missing("a pace line"))?,
            config: p.config.ok_or_else(|| missing("a config line"))?,
        };
        trains.push(train);
    }
    Timetable::new(n_stations, trains)
}

fn train_index(token: &str, n_trains: usize, source: &str, line_no: usize) -> Result<usize> {
    let k = parse_usize(token, source, line_no)?;
    if k < 1 || k > n_trains {
        return Err(Error::parse(
            source,
            line_no,
            format!("train {} out of range 1..={}", k, n_trains),
        ));
    }
    Ok(k - 1)
}

fn collect_all<T>(items: Vec<Option<T>>) -> Option<Vec<T>> {
    items.into_iter().collect()
}

pub fn write_timetable(path: &Path, tt: &Timetable) -> Result<()> {
    std::fs::write(path, format_timetable(tt))?;
    Ok(())
}

pub fn read_timetable(path: &Path) -> Result<Timetable> {
    let text = std::fs::read_to_string(path)?;
    parse_timetable(&text, &path.display().to_string())
}
