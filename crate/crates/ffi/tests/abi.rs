//! Drives the C ABI the way a foreign caller would: handles in, status
//! codes out, everything freed.

use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use railsched_core::demand::{OdMatrix, SigmoidSum, SigmoidTerm};
use railsched_core::io::matrix;
use railsched_ffi::*;

const CONFIG: &str = r#"
schema-version = 1

[line]
headways = [2.0, 2.0]
min-stop = 0.5
max-stop = 3.0
boarding-rate = 0.002
horizon = 240.0

[[line.segments]]
length-km = 5.0
unit-time-min = 1.0
unit-time-max = 2.0
"#;

fn c_path(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn write_fixture_matrix(path: &Path) {
    let mut od = OdMatrix::new(2).unwrap();
    od.set(
        1,
        2,
        SigmoidSum::new(vec![SigmoidTerm::new(400.0, 0.08, 100.0).unwrap()]),
    )
    .unwrap();
    matrix::write_matrix(path, &od).unwrap();
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(rs_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

#[test]
fn full_round_trip_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, CONFIG).unwrap();
    let matrix_path = dir.path().join("matrix.txt");
    write_fixture_matrix(&matrix_path);

    unsafe {
        let mut line: *mut RsLine = ptr::null_mut();
        let status = rs_line_from_config_file(c_path(&config_path).as_ptr(), &mut line);
        assert_eq!(status, RsStatus::Ok, "{}", last_error());
        assert_eq!(rs_line_station_count(line), 2);
        assert_eq!(rs_line_horizon(line), 240.0);

        let mut od: *mut RsOdMatrix = ptr::null_mut();
        let status = rs_od_matrix_read(c_path(&matrix_path).as_ptr(), &mut od);
        assert_eq!(status, RsStatus::Ok, "{}", last_error());
        let total = rs_od_matrix_demand_between(od, 1, 2, 0.0, 240.0);
        assert!(total > 300.0, "demand {}", total);
        assert!(rs_od_matrix_demand_between(od, 2, 1, 0.0, 240.0).is_nan());

        let mut tt: *mut RsTimetable = ptr::null_mut();
        let mut awt = f64::NAN;
        let status = rs_optimize_global(
            line,
            od,
            400.0,
            100.0,
            3,
            7,
            0.0,
            &mut tt,
            &mut awt,
        );
        assert_eq!(status, RsStatus::Ok, "{}", last_error());
        assert_eq!(rs_timetable_active_count(tt), 3);
        assert!(awt.is_finite() && awt > 0.0);

        assert_eq!(rs_validate(line, tt), RsStatus::Ok);

        let mut metrics = RsMetrics {
            awt: 0.0,
            awt_service_intervals: 0.0,
            asd: 0.0,
            alf: 0.0,
            avlf: 0.0,
            ahlf: 0.0,
            leftover: 0.0,
            active_trains: 0,
        };
        let status = rs_evaluate(line, od, tt, &mut metrics);
        assert_eq!(status, RsStatus::Ok, "{}", last_error());
        assert_eq!(metrics.active_trains, 3);
        assert!((metrics.awt - awt).abs() < 1e-12);
        assert!(metrics.asd > 0.0);

        let tt_path = dir.path().join("timetable.txt");
        assert_eq!(
            rs_timetable_write(tt, c_path(&tt_path).as_ptr()),
            RsStatus::Ok
        );
        let mut reloaded: *mut RsTimetable = ptr::null_mut();
        assert_eq!(
            rs_timetable_read(c_path(&tt_path).as_ptr(), &mut reloaded),
            RsStatus::Ok
        );
        let mut again = metrics;
        assert_eq!(rs_evaluate(line, od, reloaded, &mut again), RsStatus::Ok);
        assert_eq!(again, metrics, "reloaded timetable must score identically");

        rs_timetable_free(reloaded);
        rs_timetable_free(tt);
        rs_od_matrix_free(od);
        rs_line_free(line);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut line: *mut RsLine = ptr::null_mut();
        let missing = c_path(&dir.path().join("absent.toml"));
        assert_eq!(
            rs_line_from_config_file(missing.as_ptr(), &mut line),
            RsStatus::IoError
        );
        assert!(!last_error().is_empty());

        assert_eq!(
            rs_line_from_config_file(ptr::null(), &mut line),
            RsStatus::NullPointer
        );

        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "schema-version = 99\n").unwrap();
        assert_eq!(
            rs_line_from_config_file(c_path(&bad).as_ptr(), &mut line),
            RsStatus::ParseError
        );
        assert!(last_error().contains("schema-version"));
    }
}

#[test]
fn fit_through_the_abi_recovers_totals() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.txt");
    let mut text = String::from("pair 1 2\n");
    for k in 0..=48 {
        let t = 5.0 * k as f64;
        let v = 400.0 / (1.0 + (-0.08 * (t - 100.0)).exp());
        text.push_str(&format!("{} {}\n", t, v));
    }
    std::fs::write(&samples, text).unwrap();

    unsafe {
        let mut od: *mut RsOdMatrix = ptr::null_mut();
        let status = rs_od_matrix_fit_samples(c_path(&samples).as_ptr(), 2, 5, &mut od);
        assert_eq!(status, RsStatus::Ok, "{}", last_error());
        let total = rs_od_matrix_demand_between(od, 1, 2, 0.0, 240.0);
        assert!((total - 400.0).abs() < 20.0, "total {}", total);
        rs_od_matrix_free(od);
    }
}
