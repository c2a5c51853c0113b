//! Byte-for-byte comparison of rendered drawings against checked-in
//! copies. Refresh with UPDATE_GOLDEN=1 after an intentional change.

use std::fs;
use std::path::PathBuf;

use railsched_core::demand::{OdMatrix, SigmoidSum, SigmoidTerm};
use railsched_core::flow::{load_passengers, FlowOptions};
use railsched_core::line::{Line, Segment, Timetable, TrainConfig, TrainSchedule};
use railsched_core::plot::{occupancy_svg, time_space_svg};

fn fixture() -> (Line, OdMatrix, Timetable) {
    let line = Line::new(
        vec![
            Segment::new(2.0, 0.6, 1.0, 0.3, 0.25).unwrap(),
            Segment::new(3.0, 0.5, 0.9, 0.3, 0.25).unwrap(),
        ],
        vec![2.0, 2.0, 2.0],
        0.5,
        2.0,
        0.004,
        120.0,
        true,
    )
    .unwrap();
    let mut od = OdMatrix::new(3).unwrap();
    od.set(
        1,
        3,
        SigmoidSum::new(vec![
            SigmoidTerm::new(120.0, 0.09, 35.0).unwrap(),
            SigmoidTerm::new(60.0, 0.05, 80.0).unwrap(),
        ]),
    )
    .unwrap();
    od.set(
        2,
        3,
        SigmoidSum::new(vec![SigmoidTerm::new(80.0, 0.12, 55.0).unwrap()]),
    )
    .unwrap();
    od.set(
        1,
        2,
        SigmoidSum::new(vec![SigmoidTerm::new(40.0, 0.2, 20.0).unwrap()]),
    )
    .unwrap();

    let config = TrainConfig::new(2, 60.0).unwrap();
    let first = TrainSchedule::full_stopper(&line, config, 25.0);
    let config = TrainConfig::new(2, 60.0).unwrap();
    let mut second = TrainSchedule::full_stopper(&line, config, 70.0);
    second.stops[1] = false;
    second.stop_times[1] = 0.0;
    second.propagate(&line);
    let timetable = Timetable::new(3, vec![first, second]).unwrap();
    (line, od, timetable)
}

fn check_against_golden(name: &str, rendered: &str) {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name]
        .iter()
        .collect();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, rendered).unwrap();
    }
    let want = fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {}; run with UPDATE_GOLDEN=1", name));
    assert_eq!(
        rendered, want,
        "{} drifted from the checked-in copy; rerun with UPDATE_GOLDEN=1 if intended",
        name
    );
}

#[test]
fn time_space_drawing_is_byte_stable() {
    let (line, od, timetable) = fixture();
    let svg = time_space_svg(&timetable, &line, Some(&od));
    check_against_golden("time_space.svg", &svg);
}

#[test]
fn occupancy_drawing_is_byte_stable() {
    let (line, od, timetable) = fixture();
    let flow = load_passengers(&od, &timetable, &line, &FlowOptions::default()).unwrap();
    let svg = occupancy_svg(&flow, &line);
    check_against_golden("occupancy.svg", &svg);
}
