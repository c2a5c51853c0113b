//! Time-distance diagram of a timetable.
//!
//! Horizontal axis is time over the planning horizon, vertical axis is
//! line distance with one gridline per station. Every active train draws
//! one path including its dwell plateaus. With demand attached, each
//! station's arrival-rate profile is shaded above its gridline.

use crate::demand::OdMatrix;
use crate::line::{Line, Timetable};
use crate::plot::svg::{color, tick_step, Frame, SvgCanvas};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 45.0;
/// Samples across the horizon for the demand shading.
const RATE_SAMPLES: usize = 400;

pub fn time_space_svg(tt: &Timetable, line: &Line, od: Option<&OdMatrix>) -> String {
    let mut canvas = SvgCanvas::new(WIDTH, HEIGHT);
    let total_km = line.cumulative_distance(line.n_stations());
    let frame = Frame {
        left: MARGIN_LEFT,
        top: MARGIN_TOP,
        width: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        height: HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        x_min: 0.0,
        x_max: line.horizon(),
        y_min: 0.0,
        y_max: total_km.max(f64::MIN_POSITIVE),
    };

    draw_station_grid(&mut canvas, &frame, line);
    if let Some(od) = od {
        draw_demand_bands(&mut canvas, &frame, line, od);
    }
    draw_time_axis(&mut canvas, &frame, line);

    for (k, train) in tt.trains.iter().enumerate() {
        if !train.active {
            continue;
        }
        let mut path = Vec::with_capacity(2 * tt.n_stations());
        for i in 1..=tt.n_stations() {
            let y = line.cumulative_distance(i);
            path.push((frame.x(train.arrival(i)), frame.y(y)));
            path.push((frame.x(train.departures[i - 1]), frame.y(y)));
        }
        canvas.polyline(&path, color(k), 1.5);
        for i in 1..=tt.n_stations() {
            if train.stops[i - 1] {
                let y = line.cumulative_distance(i);
                canvas.circle(frame.x(train.departures[i - 1]), frame.y(y), 2.0, color(k));
            }
        }
    }
    canvas.finish()
}

fn draw_station_grid(canvas: &mut SvgCanvas, frame: &Frame, line: &Line) {
    for i in 1..=line.n_stations() {
        let y = frame.y(line.cumulative_distance(i));
        canvas.line(frame.left, y, frame.left + frame.width, y, "#cccccc", 0.8);
        canvas.text(
            frame.left - 8.0,
            y + 4.0,
            12.0,
            "end",
            "#333333",
            &format!("{}", i),
        );
    }
    canvas.text(
        18.0,
        frame.top + frame.height / 2.0,
        12.0,
        "middle",
        "#333333",
        "station",
    );
}

fn draw_time_axis(canvas: &mut SvgCanvas, frame: &Frame, line: &Line) {
    let bottom = frame.top + frame.height;
    canvas.line(frame.left, bottom, frame.left + frame.width, bottom, "#333333", 1.0);
    let step = tick_step(line.horizon(), 10);
    let mut t = 0.0;
    while t <= line.horizon() + 1e-9 {
        let x = frame.x(t);
        canvas.line(x, bottom, x, bottom + 5.0, "#333333", 1.0);
        canvas.text(x, bottom + 18.0, 11.0, "middle", "#333333", &format!("{}", t));
        t += step;
    }
    canvas.text(
        frame.left + frame.width / 2.0,
        bottom + 34.0,
        12.0,
        "middle",
        "#333333",
        "time (min)",
    );
}

fn draw_demand_bands(canvas: &mut SvgCanvas, frame: &Frame, line: &Line, od: &OdMatrix) {
    let s = line.n_stations();
    let mut rate_by_origin = vec![vec![0.0; RATE_SAMPLES + 1]; s];
    let mut peak = 0.0f64;
    for (i, _, curve) in od.pairs() {
        for k in 0..=RATE_SAMPLES {
            let t = line.horizon() * k as f64 / RATE_SAMPLES as f64;
            let r = curve.rate(t);
            rate_by_origin[i - 1][k] += r;
        }
    }
    for rates in &rate_by_origin {
        for &r in rates {
            peak = peak.max(r);
        }
    }
    if peak <= 0.0 {
        return;
    }
    // Band height: a third of the tightest station spacing.
    let mut min_gap = f64::INFINITY;
    for i in 1..s {
        let gap = frame.y(line.cumulative_distance(i)) - frame.y(line.cumulative_distance(i + 1));
        min_gap = min_gap.min(gap.abs());
    }
    let band = (min_gap / 3.0).min(frame.height / 6.0);
    for (idx, rates) in rate_by_origin.iter().enumerate() {
        if rates.iter().all(|&r| r <= 0.0) {
            continue;
        }
        let base = frame.y(line.cumulative_distance(idx + 1));
        let mut poly = Vec::with_capacity(RATE_SAMPLES + 3);
        poly.push((frame.x(0.0), base));
        for k in 0..=RATE_SAMPLES {
            let t = line.horizon() * k as f64 / RATE_SAMPLES as f64;
            poly.push((frame.x(t), base - band * rates[k] / peak));
        }
        poly.push((frame.x(line.horizon()), base));
        canvas.polygon(&poly, "#d62728", 0.15);
    }
}
