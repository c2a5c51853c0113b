//! Demand-adapted railway timetabling.
//!
//! The crate covers three stages of planning a one-directional line:
//! fitting continuous cumulative demand curves to observed counts,
//! searching for departure times that minimize average passenger waiting,
//! and scoring timetables with service and occupancy metrics, including
//! sweeps that trade fleet size against capacity.

pub mod demand;
pub mod error;
pub mod flow;
pub mod io;
pub mod line;
pub mod metrics;
pub mod optimize;
pub mod pareto;
pub mod plot;
mod util;

pub use error::{Error, Result};
