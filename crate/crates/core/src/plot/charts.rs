//! Occupancy and sweep charts.

use crate::flow::FlowState;
use crate::line::Line;
use crate::pareto::{SweepMode, SweepOutcome};
use crate::plot::svg::{color, tick_step, Frame, SvgCanvas};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 45.0;

fn frame(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Frame {
    Frame {
        left: MARGIN_LEFT,
        top: MARGIN_TOP,
        width: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        height: HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        x_min,
        x_max,
        y_min,
        y_max,
    }
}

fn draw_y_axis(canvas: &mut SvgCanvas, frame: &Frame, label: &str) {
    canvas.line(
        frame.left,
        frame.top,
        frame.left,
        frame.top + frame.height,
        "#333333",
        1.0,
    );
    let step = tick_step(frame.y_max - frame.y_min, 8);
    let mut v = (frame.y_min / step).ceil() * step;
    while v <= frame.y_max + 1e-9 {
        let y = frame.y(v);
        canvas.line(frame.left - 5.0, y, frame.left, y, "#333333", 1.0);
        canvas.line(frame.left, y, frame.left + frame.width, y, "#eeeeee", 0.6);
        canvas.text(frame.left - 8.0, y + 4.0, 11.0, "end", "#333333", &format!("{}", v));
        v += step;
    }
    canvas.text(18.0, frame.top + frame.height / 2.0, 12.0, "middle", "#333333", label);
}

fn draw_x_axis(canvas: &mut SvgCanvas, frame: &Frame, label: &str) {
    let bottom = frame.top + frame.height;
    canvas.line(frame.left, bottom, frame.left + frame.width, bottom, "#333333", 1.0);
    let step = tick_step(frame.x_max - frame.x_min, 10);
    let mut v = (frame.x_min / step).ceil() * step;
    while v <= frame.x_max + 1e-9 {
        let x = frame.x(v);
        canvas.line(x, bottom, x, bottom + 5.0, "#333333", 1.0);
        canvas.text(x, bottom + 18.0, 11.0, "middle", "#333333", &format!("{}", v));
        v += step;
    }
    canvas.text(
        frame.left + frame.width / 2.0,
        bottom + 34.0,
        12.0,
        "middle",
        "#333333",
        label,
    );
}

/// Passengers on board along the line, one step line per train, with
/// each train's capacity dashed in its own color.
pub fn occupancy_svg(flow: &FlowState, line: &Line) -> String {
    let mut canvas = SvgCanvas::new(WIDTH, HEIGHT);
    let total_km = line.cumulative_distance(line.n_stations());
    let cap_max = flow
        .trains
        .iter()
        .map(|t| t.capacity)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let frame = frame(0.0, total_km.max(f64::MIN_POSITIVE), 0.0, cap_max * 1.05);
    draw_y_axis(&mut canvas, &frame, "passengers");
    draw_x_axis(&mut canvas, &frame, "distance (km)");

    for (slot, train) in flow.trains.iter().enumerate() {
        let y_cap = frame.y(train.capacity);
        canvas.dashed_line(frame.left, y_cap, frame.left + frame.width, y_cap, color(slot), 0.8);
        let mut path = Vec::new();
        for i in 1..line.n_stations() {
            let load = train.onboard_after(i);
            path.push((frame.x(line.cumulative_distance(i)), frame.y(load)));
            path.push((frame.x(line.cumulative_distance(i + 1)), frame.y(load)));
        }
        canvas.polyline(&path, color(slot), 1.5);
        canvas.text(
            frame.left + frame.width + 10.0,
            frame.top + 14.0 * (slot as f64 + 1.0),
            11.0,
            "start",
            color(slot),
            &format!("train {}", train.train_index + 1),
        );
    }
    canvas.finish()
}

/// Waiting against train count, one polyline per capacity level. Failed
/// cells drop out of their curve.
pub fn pareto_svg(outcome: &SweepOutcome) -> String {
    let mut canvas = SvgCanvas::new(WIDTH, HEIGHT);
    let solved: Vec<&crate::pareto::ParetoPoint> =
        outcome.points.iter().filter(|p| p.failed.is_none()).collect();
    let counts = &outcome.grid.train_counts;
    let x_max = counts.iter().copied().max().unwrap_or(1) as f64;
    let x_min = counts.iter().copied().min().unwrap_or(1) as f64;
    let y_max = solved
        .iter()
        .map(|p| p.awt)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let frame = frame(x_min, x_max.max(x_min + 1.0), 0.0, y_max * 1.05);
    draw_y_axis(&mut canvas, &frame, "average wait (min)");
    draw_x_axis(&mut canvas, &frame, "trains");

    for (li, level) in outcome.grid.capacity_levels.iter().enumerate() {
        let pts: Vec<(f64, f64)> = outcome
            .level_points(li)
            .iter()
            .filter(|p| p.failed.is_none())
            .map(|p| (frame.x(p.train_count as f64), frame.y(p.awt)))
            .collect();
        canvas.polyline(&pts, color(li), 1.5);
        for &(x, y) in &pts {
            canvas.circle(x, y, 2.5, color(li));
        }
        let tag = match outcome.mode {
            SweepMode::FixedGlobalCapacity => format!("capacity {}", level),
            SweepMode::FixedPerTrainCapacity => format!("{} carriages", level),
        };
        canvas.text(
            frame.left + frame.width + 10.0,
            frame.top + 14.0 * (li as f64 + 1.0),
            11.0,
            "start",
            color(li),
            &tag,
        );
    }
    canvas.finish()
}
