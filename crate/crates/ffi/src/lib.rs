//! C ABI for the timetabling library.
//!
//! Every object crosses the boundary as an opaque pointer with an
//! explicit `_free` function. Calls return [`RsStatus`]; on any failure
//! the thread-local message behind [`rs_last_error_message`] describes
//! what went wrong. Pointers must be valid and are never retained past
//! the call; handles are not thread-safe to mutate concurrently.
//!
//! The matching header is generated into `include/railsched.h` at build
//! time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Duration;

use railsched_core::demand::{fit_od_samples, FitOptions, OdMatrix};
use railsched_core::error::Error;
use railsched_core::flow::{awt, awt_to_horizon, load_passengers, FlowOptions};
use railsched_core::io::{config as config_io, matrix, series, timetable};
use railsched_core::line::{validate, Line, Timetable};
use railsched_core::metrics::summarize;
use railsched_core::optimize::{optimize, CapacityMode, OptimizationProblem};

/// Call outcome. Anything but `Ok` leaves a message in
/// [`rs_last_error_message`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    /// Structurally invalid input values.
    InvalidInput = 1,
    /// No feasible answer under the line rules.
    Infeasible = 2,
    /// An iterative routine ran out of budget.
    NoConvergence = 3,
    /// A file failed to parse.
    ParseError = 4,
    /// The operating system refused a file operation.
    IoError = 5,
    /// A required pointer was null.
    NullPointer = 6,
    /// A string argument was not valid UTF-8.
    Utf8Error = 7,
    /// An internal invariant failed.
    Internal = 8,
}

/// Opaque line description handle.
pub struct RsLine(Line);
/// Opaque demand matrix handle.
pub struct RsOdMatrix(OdMatrix);
/// Opaque timetable handle.
pub struct RsTimetable(Timetable);

/// Quality summary of one timetable under one demand matrix.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsMetrics {
    /// Average wait per passenger including the tail after the last
    /// train, minutes.
    pub awt: f64,
    /// Average wait counting only the intervals between trains.
    pub awt_service_intervals: f64,
    /// Mean served demand over active trains, percent.
    pub asd: f64,
    /// Mean load factor, percent.
    pub alf: f64,
    /// Mean vertical load factor, percent.
    pub avlf: f64,
    /// Mean horizontal load factor, percent.
    pub ahlf: f64,
    /// Passengers still waiting at the end of the horizon.
    pub leftover: f64,
    /// Active trains in the timetable.
    pub active_trains: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> RsStatus {
    match err {
        Error::InvalidInput(_) => RsStatus::InvalidInput,
        Error::Infeasible(_) => RsStatus::Infeasible,
        Error::NoConvergence(_) => RsStatus::NoConvergence,
        Error::Parse { .. } => RsStatus::ParseError,
        Error::Io(_) => RsStatus::IoError,
    }
}

/// Run `body`, trapping panics and mapping errors onto statuses.
fn guarded(body: impl FnOnce() -> Result<RsStatus, Error>) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(err)) => {
            set_error(&err.to_string());
            status_of(&err)
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unexpected internal failure".to_string());
            set_error(&message);
            RsStatus::Internal
        }
    }
}

/// `path` must be non-null UTF-8.
unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, RsStatus> {
    if path.is_null() {
        set_error("path argument is null");
        return Err(RsStatus::NullPointer);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path argument is not valid UTF-8");
            Err(RsStatus::Utf8Error)
        }
    }
}

unsafe fn ref_arg<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, RsStatus> {
    if ptr.is_null() {
        set_error(&format!("{} argument is null", what));
        return Err(RsStatus::NullPointer);
    }
    Ok(&*ptr)
}

unsafe fn out_arg<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, RsStatus> {
    if ptr.is_null() {
        set_error(&format!("{} output argument is null", what));
        return Err(RsStatus::NullPointer);
    }
    Ok(&mut *ptr)
}

macro_rules! try_status {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message for the most recent failure on this thread. Empty until a
/// call fails; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Build a line from the `[line]` section of a TOML run configuration.
///
/// # Safety
/// `config_path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_line_from_config_file(
    config_path: *const c_char,
    out: *mut *mut RsLine,
) -> RsStatus {
    let path = try_status!(path_arg(config_path));
    let out = try_status!(out_arg(out, "line"));
    guarded(|| {
        let config = config_io::read_config(&path)?;
        let line = config.build_line()?;
        *out = Box::into_raw(Box::new(RsLine(line)));
        Ok(RsStatus::Ok)
    })
}

/// # Safety
/// `line` must come from this library and not be used after this call.
#[no_mangle]
pub unsafe extern "C" fn rs_line_free(line: *mut RsLine) {
    if !line.is_null() {
        drop(Box::from_raw(line));
    }
}

/// # Safety
/// `line` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rs_line_station_count(line: *const RsLine) -> usize {
    match ref_arg(line, "line") {
        Ok(line) => line.0.n_stations(),
        Err(_) => 0,
    }
}

/// Planning horizon in minutes, or NaN for a null handle.
///
/// # Safety
/// `line` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rs_line_horizon(line: *const RsLine) -> f64 {
    match ref_arg(line, "line") {
        Ok(line) => line.0.horizon(),
        Err(_) => f64::NAN,
    }
}

/// Load a fitted demand matrix file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_od_matrix_read(
    path: *const c_char,
    out: *mut *mut RsOdMatrix,
) -> RsStatus {
    let path = try_status!(path_arg(path));
    let out = try_status!(out_arg(out, "matrix"));
    guarded(|| {
        let od = matrix::read_matrix(&path)?;
        *out = Box::into_raw(Box::new(RsOdMatrix(od)));
        Ok(RsStatus::Ok)
    })
}

/// Write a demand matrix file that reloads bit-exactly.
///
/// # Safety
/// `od` must be a valid handle and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn rs_od_matrix_write(
    od: *const RsOdMatrix,
    path: *const c_char,
) -> RsStatus {
    let od = try_status!(ref_arg(od, "matrix"));
    let path = try_status!(path_arg(path));
    guarded(|| {
        matrix::write_matrix(&path, &od.0)?;
        Ok(RsStatus::Ok)
    })
}

/// Fit cumulative demand curves to a sample file. Malformed rows are
/// skipped, matching the command line tool's non-strict mode.
///
/// # Safety
/// `samples_path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_od_matrix_fit_samples(
    samples_path: *const c_char,
    n_stations: usize,
    seed: u64,
    out: *mut *mut RsOdMatrix,
) -> RsStatus {
    let path = try_status!(path_arg(samples_path));
    let out = try_status!(out_arg(out, "matrix"));
    guarded(|| {
        let (series_map, _diagnostics) = series::read_sample_series(&path)?;
        let opts = FitOptions {
            seed,
            ..FitOptions::default()
        };
        let (od, _fits) = fit_od_samples(&series_map, n_stations, &opts)?;
        *out = Box::into_raw(Box::new(RsOdMatrix(od)));
        Ok(RsStatus::Ok)
    })
}

/// # Safety
/// `od` must come from this library and not be used after this call.
#[no_mangle]
pub unsafe extern "C" fn rs_od_matrix_free(od: *mut RsOdMatrix) {
    if !od.is_null() {
        drop(Box::from_raw(od));
    }
}

/// Passengers for (`origin`, `destination`) arriving in [`t0`, `t1`].
/// Returns NaN on a bad handle or pair.
///
/// # Safety
/// `od` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rs_od_matrix_demand_between(
    od: *const RsOdMatrix,
    origin: usize,
    destination: usize,
    t0: f64,
    t1: f64,
) -> f64 {
    match ref_arg(od, "matrix") {
        Ok(od) if origin >= 1 && destination <= od.0.n_stations() && origin < destination => {
            od.0.demand_between(origin, destination, t0, t1)
        }
        _ => f64::NAN,
    }
}

/// Load a timetable file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_timetable_read(
    path: *const c_char,
    out: *mut *mut RsTimetable,
) -> RsStatus {
    let path = try_status!(path_arg(path));
    let out = try_status!(out_arg(out, "timetable"));
    guarded(|| {
        let tt = timetable::read_timetable(&path)?;
        *out = Box::into_raw(Box::new(RsTimetable(tt)));
        Ok(RsStatus::Ok)
    })
}

/// Write a timetable file that reloads byte-exactly.
///
/// # Safety
/// `tt` must be a valid handle and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn rs_timetable_write(
    tt: *const RsTimetable,
    path: *const c_char,
) -> RsStatus {
    let tt = try_status!(ref_arg(tt, "timetable"));
    let path = try_status!(path_arg(path));
    guarded(|| {
        timetable::write_timetable(&path, &tt.0)?;
        Ok(RsStatus::Ok)
    })
}

/// # Safety
/// `tt` must come from this library and not be used after this call.
#[no_mangle]
pub unsafe extern "C" fn rs_timetable_free(tt: *mut RsTimetable) {
    if !tt.is_null() {
        drop(Box::from_raw(tt));
    }
}

/// Trains in the timetable, active or parked.
///
/// # Safety
/// `tt` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rs_timetable_train_count(tt: *const RsTimetable) -> usize {
    match ref_arg(tt, "timetable") {
        Ok(tt) => tt.0.n_trains(),
        Err(_) => 0,
    }
}

/// Active trains only.
///
/// # Safety
/// `tt` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rs_timetable_active_count(tt: *const RsTimetable) -> usize {
    match ref_arg(tt, "timetable") {
        Ok(tt) => tt.0.n_active(),
        Err(_) => 0,
    }
}

unsafe fn run_optimize(
    line: *const RsLine,
    od: *const RsOdMatrix,
    capacity_mode: CapacityMode,
    trains: i64,
    seed: u64,
    budget_seconds: f64,
    out_tt: *mut *mut RsTimetable,
    out_awt: *mut f64,
) -> RsStatus {
    let line = try_status!(ref_arg(line, "line"));
    let od = try_status!(ref_arg(od, "matrix"));
    let out_tt = try_status!(out_arg(out_tt, "timetable"));
    guarded(|| {
        let mut problem = OptimizationProblem::new(&line.0, &od.0, capacity_mode);
        if trains > 0 {
            problem.fixed_train_count = Some(trains as usize);
        }
        problem.seed = seed;
        if budget_seconds > 0.0 {
            problem.search.budget = Some(Duration::from_secs_f64(budget_seconds));
        } else {
            problem.search.budget = None;
        }
        let solution = optimize(&problem)?;
        if !out_awt.is_null() {
            *out_awt = solution.awt.total_awt;
        }
        *out_tt = Box::into_raw(Box::new(RsTimetable(solution.timetable)));
        Ok(RsStatus::Ok)
    })
}

/// Minimize average waiting with a fleet-wide capacity pool split evenly
/// over the trains. `trains <= 0` searches over train counts;
/// `budget_seconds <= 0` runs to convergence. `out_awt` may be null.
///
/// # Safety
/// All handles must be valid; `out_tt` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_optimize_global(
    line: *const RsLine,
    od: *const RsOdMatrix,
    total_capacity: f64,
    capacity_per_carriage: f64,
    trains: i64,
    seed: u64,
    budget_seconds: f64,
    out_tt: *mut *mut RsTimetable,
    out_awt: *mut f64,
) -> RsStatus {
    run_optimize(
        line,
        od,
        CapacityMode::GlobalCapacity {
            total_capacity,
            capacity_per_carriage,
        },
        trains,
        seed,
        budget_seconds,
        out_tt,
        out_awt,
    )
}

/// Minimize average waiting with every train running `carriages`
/// carriages. Parameters as in [`rs_optimize_global`].
///
/// # Safety
/// All handles must be valid; `out_tt` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_optimize_per_train(
    line: *const RsLine,
    od: *const RsOdMatrix,
    carriages: u32,
    capacity_per_carriage: f64,
    trains: i64,
    seed: u64,
    budget_seconds: f64,
    out_tt: *mut *mut RsTimetable,
    out_awt: *mut f64,
) -> RsStatus {
    run_optimize(
        line,
        od,
        CapacityMode::PerTrainCarriages {
            carriages,
            capacity_per_carriage,
        },
        trains,
        seed,
        budget_seconds,
        out_tt,
        out_awt,
    )
}

/// Validate a timetable against the line rules. `Ok` means operable;
/// `Infeasible` leaves the breach count in the error message.
///
/// # Safety
/// Both handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn rs_validate(line: *const RsLine, tt: *const RsTimetable) -> RsStatus {
    let line = try_status!(ref_arg(line, "line"));
    let tt = try_status!(ref_arg(tt, "timetable"));
    guarded(|| {
        let report = validate(&tt.0, &line.0)?;
        if report.feasible() {
            Ok(RsStatus::Ok)
        } else {
            Err(Error::infeasible(format!(
                "the timetable breaks {} rules",
                report.violations.len()
            )))
        }
    })
}

/// Validate, load passengers, and summarize quality metrics.
///
/// # Safety
/// All handles must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_evaluate(
    line: *const RsLine,
    od: *const RsOdMatrix,
    tt: *const RsTimetable,
    out: *mut RsMetrics,
) -> RsStatus {
    let line = try_status!(ref_arg(line, "line"));
    let od = try_status!(ref_arg(od, "matrix"));
    let tt = try_status!(ref_arg(tt, "timetable"));
    let out = try_status!(out_arg(out, "metrics"));
    guarded(|| {
        let report = validate(&tt.0, &line.0)?;
        if !report.feasible() {
            return Err(Error::infeasible(format!(
                "the timetable breaks {} rules",
                report.violations.len()
            )));
        }
        let flow = load_passengers(&od.0, &tt.0, &line.0, &FlowOptions::default())?;
        let closed = awt_to_horizon(&flow, &od.0, &line.0)?;
        let open = awt(&flow, &od.0, &line.0)?;
        let metrics = summarize(&flow, &line.0, &closed, &tt.0.interdeparture_times())?;
        *out = RsMetrics {
            awt: closed.total_awt,
            awt_service_intervals: open.total_awt,
            asd: metrics.asd,
            alf: metrics.alf,
            avlf: metrics.avlf,
            ahlf: metrics.ahlf,
            leftover: flow.total_leftover(),
            active_trains: tt.0.n_active(),
        };
        Ok(RsStatus::Ok)
    })
}
