//! Human-readable reports and machine-readable sweep tables.
//!
//! Summary tables round to two decimals; the points file and the
//! equilibrium vertex list keep full precision. Failed sweep cells stay
//! in every table as NaN so row and column counts match the request.

use std::fmt::Write as _;

use crate::demand::PairFit;
use crate::io::num;
use crate::line::ValidationReport;
use crate::optimize::SolverStats;
use crate::pareto::{SurfaceGrid, SweepOutcome};

fn fmt_level(level: f64) -> String {
    if level.fract() == 0.0 {
        format!("{}", level as i64)
    } else {
        format!("{}", level)
    }
}

fn push_summary_rows(out: &mut String, outcome: &SweepOutcome, with_awt: bool) {
    for p in &outcome.points {
        write!(
            out,
            "{} {} {:.2} {:.2} {:.2} {:.2}",
            p.total_carriages, p.train_count, p.asd, p.alf, p.avlf, p.ahlf
        )
        .expect("string write");
        if with_awt {
            write!(out, " {:.2}", p.awt).expect("string write");
        }
        out.push('\n');
    }
}

/// Fleet utilization summary, one row per sweep cell.
pub fn format_table_report(outcome: &SweepOutcome) -> String {
    let mut out = String::from("wagons trains asd alf avlf ahlf\n");
    push_summary_rows(&mut out, outcome, false);
    out
}

/// Utilization summary extended with the waiting objective.
pub fn format_points_report(outcome: &SweepOutcome) -> String {
    let mut out = String::from("wagons trains asd alf avlf ahlf awt\n");
    push_summary_rows(&mut out, outcome, true);
    out
}

/// Full-precision sweep results, tab-delimited.
pub fn format_points_tsv(outcome: &SweepOutcome) -> String {
    let mut out = String::from(
        "label\tcapacity-level\ttrain-count\twagons\tawt\tasd\talf\tavlf\tahlf\tleftover\tdominated-level\tdominated-overall\terror\n",
    );
    for p in &outcome.points {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.label(outcome.mode),
            num(p.capacity_level),
            p.train_count,
            p.total_carriages,
            num(p.awt),
            num(p.asd),
            num(p.alf),
            num(p.avlf),
            num(p.ahlf),
            num(p.leftover),
            u8::from(p.dominated_in_level),
            u8::from(p.dominated_overall),
            p.failed.as_deref().unwrap_or("-"),
        )
        .expect("string write");
    }
    out
}

/// One surface of the sweep grid as a labeled matrix. Rows are capacity
/// levels, columns train counts.
pub fn format_surface(grid: &SurfaceGrid, name: &str, values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    writeln!(out, "surface {} 1", name).expect("string write");
    let mut head = String::from("counts");
    for c in &grid.train_counts {
        head.push(' ');
        head.push_str(&c.to_string());
    }
    writeln!(out, "{}", head).expect("string write");
    for (li, level) in grid.capacity_levels.iter().enumerate() {
        let mut row = fmt_level(*level);
        for v in &values[li] {
            row.push(' ');
            row.push_str(&num(*v));
        }
        writeln!(out, "{}", row).expect("string write");
    }
    out
}

pub fn format_surface_asd(grid: &SurfaceGrid) -> String {
    format_surface(grid, "asd", &grid.asd)
}

pub fn format_surface_alf(grid: &SurfaceGrid) -> String {
    format_surface(grid, "alf", &grid.alf)
}

/// Vertices of the served-demand / load-factor equilibrium, one block
/// per polyline.
pub fn format_equilibrium(curves: &[Vec<(f64, f64)>]) -> String {
    let mut out = String::from("equilibrium 1\n# columns: capacity-level train-count\n");
    for (k, curve) in curves.iter().enumerate() {
        writeln!(out, "curve {}", k + 1).expect("string write");
        for (level, count) in curve {
            writeln!(out, "{} {}", num(*level), num(*count)).expect("string write");
        }
    }
    out
}

/// Per-pair fit quality, one row per station pair.
pub fn format_fit_report(fits: &[PairFit]) -> String {
    let mut out = String::from(
        "fit-report 1\n# columns: origin destination terms samples sse rmse converged\n",
    );
    for fit in fits {
        let d = &fit.diagnostics;
        writeln!(
            out,
            "{} {} {} {} {} {} {}",
            fit.origin,
            fit.destination,
            d.n_terms,
            d.n_samples,
            num(d.sse),
            num(d.rmse),
            if d.converged { "yes" } else { "no" }
        )
        .expect("string write");
    }
    out
}

/// Quality metrics as key/value lines plus one row per active train.
/// `service_awt` is the boarding-interval average without the closing
/// tail; `leftover` the passengers stranded at the end of service.
pub fn format_metrics(
    m: &crate::metrics::TimetableMetrics,
    service_awt: Option<f64>,
    leftover: Option<f64>,
) -> String {
    let mut out = String::from("metrics 1\n");
    writeln!(out, "trains {}", m.trains.len()).expect("string write");
    writeln!(out, "asd {}", num(m.asd)).expect("string write");
    writeln!(out, "alf {}", num(m.alf)).expect("string write");
    writeln!(out, "avlf {}", num(m.avlf)).expect("string write");
    writeln!(out, "ahlf {}", num(m.ahlf)).expect("string write");
    writeln!(out, "awt {}", num(m.awt)).expect("string write");
    if let Some(v) = service_awt {
        writeln!(out, "awt-service-intervals {}", num(v)).expect("string write");
    }
    if let Some(v) = leftover {
        writeln!(out, "leftover {}", num(v)).expect("string write");
    }
    if let Some(v) = m.interdeparture_mean {
        writeln!(out, "interdeparture-mean {}", num(v)).expect("string write");
    }
    if let Some(v) = m.interdeparture_var {
        writeln!(out, "interdeparture-var {}", num(v)).expect("string write");
    }
    if let Some(v) = m.random_incidence_wait {
        writeln!(out, "random-incidence-wait {}", num(v)).expect("string write");
    }
    if let Some(v) = m.over_waiting {
        writeln!(out, "over-waiting {}", num(v)).expect("string write");
    }
    out.push_str("# columns: train lf vlf hlf sd peak average flags\n");
    for t in &m.trains {
        let mut flags = Vec::new();
        if t.empty_train {
            flags.push("empty");
        }
        if t.no_arrivals {
            flags.push("no-arrivals");
        }
        if t.absorbed_backlog {
            flags.push("backlog");
        }
        let flags = if flags.is_empty() { "-".to_string() } else { flags.join(",") };
        writeln!(
            out,
            "train {} {} {} {} {} {} {} {}",
            t.train_index + 1,
            num(t.load_factor),
            num(t.vertical_load_factor),
            num(t.horizontal_load_factor),
            num(t.served_demand),
            num(t.peak_occupancy),
            num(t.average_occupancy),
            flags
        )
        .expect("string write");
    }
    out
}

/// Search counters. Wall time stays out so reruns compare equal.
pub fn format_stats(stats: &SolverStats) -> String {
    let mut out = String::new();
    writeln!(out, "evaluations {}", stats.evaluations).expect("string write");
    writeln!(out, "sweeps {}", stats.sweeps).expect("string write");
    writeln!(out, "starts {}", stats.starts).expect("string write");
    writeln!(out, "train-count {}", stats.train_count).expect("string write");
    writeln!(out, "converged {}", if stats.converged { "yes" } else { "no" })
        .expect("string write");
    out
}

pub fn format_validation(report: &ValidationReport) -> String {
    if report.feasible() {
        return String::from("feasible\n");
    }
    let mut out = format!("infeasible {}\n", report.violations.len());
    for v in &report.violations {
        let station = v
            .station
            .map(|s| s.to_string())
            .unwrap_or_else(|| "-".to_string());
        writeln!(
            out,
            "{} train {} station {} magnitude {}",
            v.kind.label(),
            v.train,
            station,
            num(v.magnitude)
        )
        .expect("string write");
    }
    out
}
