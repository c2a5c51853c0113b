//! Self-contained SVG drawings: no scripts, no external assets, and
//! byte-stable output for identical inputs.

pub mod charts;
pub mod svg;
pub mod time_space;

pub use charts::{occupancy_svg, pareto_svg};
pub use time_space::time_space_svg;
