//! TOML run configuration.
//!
//! One file drives fitting, optimization, and sweeps. Unknown keys are
//! rejected so typos fail loudly, and every tuning knob falls back to
//! the library default when absent.

use std::path::Path;
use std::time::Duration;

use serde::Deserialize;

use crate::demand::FitOptions;
use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::line::{Line, Segment};
use crate::optimize::{CapacityMode, SearchParams, StoppingMode};
use crate::pareto::SweepMode;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub line: LineSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub plot: PlotSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LineSection {
    pub segments: Vec<SegmentSection>,
    /// One safety headway per station, minutes.
    pub headways: Vec<f64>,
    pub min_stop: f64,
    pub max_stop: f64,
    /// Dwell minutes added per boarding passenger.
    pub boarding_rate: f64,
    pub horizon: f64,
    #[serde(default)]
    pub accel_penalty: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SegmentSection {
    pub length_km: f64,
    pub unit_time_min: f64,
    pub unit_time_max: f64,
    #[serde(default)]
    pub accel_time: f64,
    #[serde(default)]
    pub decel_time: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FitSection {
    pub max_terms: Option<usize>,
    pub starts: Option<usize>,
    pub max_iterations: Option<usize>,
    pub gradient_tol: Option<f64>,
    pub improvement_ratio: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct OptimizeSection {
    /// Fix the number of trains instead of searching over counts.
    pub train_count: Option<usize>,
    /// Fleet-wide passenger capacity, shared evenly (global mode).
    pub total_capacity: Option<f64>,
    /// Carriages per train (per-train mode).
    pub carriages: Option<u32>,
    pub capacity_per_carriage: Option<f64>,
    pub stopping: Option<StoppingChoice>,
    pub optimize_speeds: Option<bool>,
    pub seed: Option<u64>,
    pub budget_seconds: Option<f64>,
    pub initial_step: Option<f64>,
    pub final_step: Option<f64>,
    pub sweep_tol: Option<f64>,
    pub max_sweeps_per_level: Option<usize>,
    pub jitters: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepSection {
    pub mode: SweepChoice,
    /// Total passenger capacities (global mode) or carriages per train
    /// (per-train mode), one sweep row each.
    pub capacity_levels: Vec<f64>,
    pub train_counts: Vec<usize>,
    pub capacity_per_carriage: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// Whole-passenger boarding instead of fractional flow.
    pub integer_passengers: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct PlotSection {
    /// Draw arrival-rate bands behind the train paths.
    pub demand_overlay: bool,
}

impl Default for PlotSection {
    fn default() -> Self {
        PlotSection { demand_overlay: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingChoice {
    AllStops,
    OptimizeStops,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepChoice {
    GlobalCapacity,
    PerTrainCarriages,
}

pub fn parse_config(text: &str, source: &str) -> Result<RunConfig> {
    // Check the version before the full shape, so a config written for a
    // different tool version is reported as such and not as a missing or
    // unknown field.
    #[derive(Deserialize)]
    #[serde(rename_all = "kebab-case")]
    struct VersionProbe {
        schema_version: Option<u32>,
    }
    let probe: VersionProbe = toml::from_str(text)
        .map_err(|e| Error::parse(source, 0, e.message().to_string()))?;
    match probe.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(Error::parse(
                source,
                0,
                format!(
                    "schema-version {} is not supported, expected {}",
                    found, SCHEMA_VERSION
                ),
            ))
        }
        None => {
            return Err(Error::parse(
                source,
                0,
                format!("missing schema-version (expected {})", SCHEMA_VERSION),
            ))
        }
    }
    let config: RunConfig = toml::from_str(text)
        .map_err(|e| Error::parse(source, 0, e.message().to_string()))?;
    Ok(config)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

impl RunConfig {
    pub fn build_line(&self) -> Result<Line> {
        let mut segments = Vec::with_capacity(self.line.segments.len());
        for s in &self.line.segments {
            segments.push(Segment::new(
                s.length_km,
                s.unit_time_min,
                s.unit_time_max,
                s.accel_time,
                s.decel_time,
            )?);
        }
        Line::new(
            segments,
            self.line.headways.clone(),
            self.line.min_stop,
            self.line.max_stop,
            self.line.boarding_rate,
            self.line.horizon,
            self.line.accel_penalty,
        )
    }

    pub fn fit_options(&self) -> FitOptions {
        let mut opts = FitOptions::default();
        let f = &self.fit;
        if let Some(v) = f.max_terms {
            opts.max_terms = v;
        }
        if let Some(v) = f.starts {
            opts.starts = v;
        }
        if let Some(v) = f.max_iterations {
            opts.max_iterations = v;
        }
        if let Some(v) = f.gradient_tol {
            opts.gradient_tol = v;
        }
        if let Some(v) = f.improvement_ratio {
            opts.improvement_ratio = v;
        }
        if let Some(v) = f.seed {
            opts.seed = v;
        }
        opts
    }

    pub fn search_params(&self) -> SearchParams {
        let mut search = SearchParams::default();
        let o = &self.optimize;
        if let Some(v) = o.initial_step {
            search.initial_step = v;
        }
        if let Some(v) = o.final_step {
            search.final_step = v;
        }
        if let Some(v) = o.sweep_tol {
            search.sweep_tol = v;
        }
        if let Some(v) = o.max_sweeps_per_level {
            search.max_sweeps_per_level = v;
        }
        if let Some(v) = o.jitters {
            search.jitters = v;
        }
        if let Some(v) = o.budget_seconds {
            search.budget = Some(Duration::from_secs_f64(v));
        }
        search
    }

    /// Capacity regime for the optimize command.
    pub fn capacity_mode(&self) -> Result<CapacityMode> {
        let o = &self.optimize;
        let per_carriage = o.capacity_per_carriage.ok_or_else(|| {
            Error::invalid("optimize.capacity-per-carriage is required")
        })?;
        match (o.total_capacity, o.carriages) {
            (Some(total), None) => Ok(CapacityMode::GlobalCapacity {
                total_capacity: total,
                capacity_per_carriage: per_carriage,
            }),
            (None, Some(carriages)) => Ok(CapacityMode::PerTrainCarriages {
                carriages,
                capacity_per_carriage: per_carriage,
            }),
            (None, None) => Err(Error::invalid(
                "set either optimize.total-capacity or optimize.carriages",
            )),
            (Some(_), Some(_)) => Err(Error::invalid(
                "optimize.total-capacity and optimize.carriages are mutually exclusive",
            )),
        }
    }

    pub fn stopping_mode(&self) -> StoppingMode {
        match self.optimize.stopping.unwrap_or(StoppingChoice::AllStops) {
            StoppingChoice::AllStops => StoppingMode::AllStops,
            StoppingChoice::OptimizeStops => StoppingMode::OptimizeStops,
        }
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            integer_passengers: self.evaluate.integer_passengers,
            ..FlowOptions::default()
        }
    }

    pub fn sweep_mode(&self) -> Option<SweepMode> {
        self.sweep.as_ref().map(|s| match s.mode {
            SweepChoice::GlobalCapacity => SweepMode::FixedGlobalCapacity,
            SweepChoice::PerTrainCarriages => SweepMode::FixedPerTrainCapacity,
        })
    }
}
