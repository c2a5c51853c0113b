//! Passenger flow export.
//!
//! One file per variable family. Per-pair families carry rows of
//! `train origin destination value`, the leftover file drops the train
//! column, and the station families use `train station value` (for
//! occupancy the station column is the segment left behind). Train
//! numbers refer to timetable positions, so parked trains leave gaps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::io::{content_lines, num, parse_f64, parse_usize};

const PER_PAIR_FAMILIES: [&str; 7] = [
    "arrived",
    "new-boarded",
    "new-left",
    "waiting",
    "waiting-boarded",
    "waiting-left",
    "boarded",
];
const PER_STATION_FAMILIES: [&str; 2] = ["free-capacity", "occupancy"];

/// Flow tensors in file order, detached from the solver structures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowDump {
    /// family -> (train, origin, destination) -> passengers.
    pub per_pair: BTreeMap<String, BTreeMap<(usize, usize, usize), f64>>,
    /// (origin, destination) -> passengers stranded after the last train.
    pub leftover: BTreeMap<(usize, usize), f64>,
    /// family -> (train, station or segment) -> passengers.
    pub per_station: BTreeMap<String, BTreeMap<(usize, usize), f64>>,
}

pub fn dump_from(flow: &FlowState) -> FlowDump {
    let mut dump = FlowDump::default();
    let pairs = flow.pairs.pairs();
    for family in PER_PAIR_FAMILIES {
        let mut map = BTreeMap::new();
        for train in &flow.trains {
            let values: &[f64] = match family {
                "arrived" => &train.arrived,
                "new-boarded" => &train.new_boarded,
                "new-left" => &train.new_left,
                "waiting" => &train.waiting,
                "waiting-boarded" => &train.waiting_boarded,
                "waiting-left" => &train.waiting_left,
                "boarded" => &train.boarded,
                _ => unreachable!(),
            };
            for (idx, &(i, j)) in pairs.iter().enumerate() {
                map.insert((train.train_index + 1, i, j), values[idx]);
            }
        }
        dump.per_pair.insert(family.to_string(), map);
    }
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        dump.leftover.insert((i, j), flow.leftover[idx]);
    }
    for family in PER_STATION_FAMILIES {
        let mut map = BTreeMap::new();
        for train in &flow.trains {
            let stations = train.free_capacity.len();
            match family {
                "free-capacity" => {
                    for i in 1..=stations {
                        map.insert((train.train_index + 1, i), train.free_capacity[i - 1]);
                    }
                }
                "occupancy" => {
                    for i in 1..stations {
                        map.insert((train.train_index + 1, i), train.onboard_after(i));
                    }
                }
                _ => unreachable!(),
            }
        }
        dump.per_station.insert(family.to_string(), map);
    }
    dump
}

fn format_family<K: Copy>(
    family: &str,
    columns: &str,
    rows: &BTreeMap<K, f64>,
    mut key_cols: impl FnMut(K) -> String,
) -> String {
    let mut out = String::new();
    writeln!(out, "flow {} 1", family).expect("string write");
    writeln!(out, "# columns: {}", columns).expect("string write");
    for (&k, v) in rows {
        writeln!(out, "{} {}", key_cols(k), num(*v)).expect("string write");
    }
    out
}

pub fn export_flow(dump: &FlowDump, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (family, rows) in &dump.per_pair {
        let text = format_family(family, "train origin destination value", rows, |(k, i, j)| {
            format!("{} {} {}", k, i, j)
        });
        std::fs::write(dir.join(format!("{}.txt", family)), text)?;
    }
    let text = format_family("leftover", "origin destination value", &dump.leftover, |(i, j)| {
        format!("{} {}", i, j)
    });
    std::fs::write(dir.join("leftover.txt"), text)?;
    for (family, rows) in &dump.per_station {
        let columns = if family == "occupancy" {
            "train segment value"
        } else {
            "train station value"
        };
        let text = format_family(family, columns, rows, |(k, i)| format!("{} {}", k, i));
        std::fs::write(dir.join(format!("{}.txt", family)), text)?;
    }
    Ok(())
}

fn parse_family(
    text: &str,
    source: &str,
    family: &str,
    key_fields: usize,
) -> Result<Vec<(Vec<usize>, f64)>> {
    let mut lines = content_lines(text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source, 0, "empty flow file"))?;
    let expected = format!("flow {} 1", family);
    if header != expected {
        return Err(Error::parse(
            source,
            line_no,
            format!("expected {:?} header, got {:?}", expected, header),
        ));
    }
    let mut rows = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != key_fields + 1 {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected {} columns", key_fields + 1),
            ));
        }
        let mut key = Vec::with_capacity(key_fields);
        for f in &fields[..key_fields] {
            key.push(parse_usize(f, source, line_no)?);
        }
        let value = parse_f64(fields[key_fields], source, line_no)?;
        rows.push((key, value));
    }
    Ok(rows)
}

pub fn load_flow_dir(dir: &Path) -> Result<FlowDump> {
    let mut dump = FlowDump::default();
    for family in PER_PAIR_FAMILIES {
        let path = dir.join(format!("{}.txt", family));
        let text = std::fs::read_to_string(&path)?;
        let rows = parse_family(&text, &path.display().to_string(), family, 3)?;
        let map = rows
            .into_iter()
            .map(|(k, v)| ((k[0], k[1], k[2]), v))
            .collect();
        dump.per_pair.insert(family.to_string(), map);
    }
    let path = dir.join("leftover.txt");
    let text = std::fs::read_to_string(&path)?;
    let rows = parse_family(&text, &path.display().to_string(), "leftover", 2)?;
    dump.leftover = rows.into_iter().map(|(k, v)| ((k[0], k[1]), v)).collect();
    for family in PER_STATION_FAMILIES {
        let path = dir.join(format!("{}.txt", family));
        let text = std::fs::read_to_string(&path)?;
        let rows = parse_family(&text, &path.display().to_string(), family, 2)?;
        let map = rows.into_iter().map(|(k, v)| ((k[0], k[1]), v)).collect();
        dump.per_station.insert(family.to_string(), map);
    }
    Ok(dump)
}
