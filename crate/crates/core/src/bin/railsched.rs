//! Command line front end: fit demand, optimize timetables, evaluate
//! schedules, sweep capacity grids, draw diagrams.
//!
//! Exit codes: 0 success, 1 bad input or an internal failure, 2 the
//! request is infeasible, 3 a sweep finished with failed cells.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use railsched_core::demand::{fit_od_samples, OdMatrix};
use railsched_core::error::{Error, Result};
use railsched_core::flow::{awt, awt_to_horizon, load_passengers, FlowState};
use railsched_core::io::config::RunConfig;
use railsched_core::io::{config as config_io, flow_export, matrix, report, series, timetable};
use railsched_core::line::{validate, Line, Timetable};
use railsched_core::metrics::summarize;
use railsched_core::optimize::{optimize, OptimizationProblem, Solution};
use railsched_core::pareto::{equilibrium_curve, sweep, SweepSpec};
use railsched_core::plot::{occupancy_svg, pareto_svg, time_space_svg};

#[derive(Parser)]
#[command(name = "railsched", version, about = "Demand-adapted railway timetabling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit cumulative demand curves to sampled platform counts.
    Fit {
        /// Sample file with one section per station pair.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Abort on any malformed sample row instead of skipping it.
        #[arg(long)]
        strict: bool,
    },
    /// Compute a timetable minimizing average passenger waiting.
    Optimize {
        /// Fitted demand matrix file.
        #[arg(long)]
        demand: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the search seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the wall-clock budget, seconds.
        #[arg(long)]
        budget_seconds: Option<f64>,
        /// Pin the active train count.
        #[arg(long)]
        trains: Option<usize>,
    },
    /// Check a timetable and report its flows and quality metrics.
    Evaluate {
        #[arg(long)]
        timetable: PathBuf,
        #[arg(long)]
        demand: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Solve every cell of a capacity by train-count grid.
    Sweep {
        #[arg(long)]
        demand: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Total budget, split evenly over the grid cells.
        #[arg(long)]
        budget_seconds: Option<f64>,
    },
    /// Draw a timetable picture as a standalone SVG file.
    Plot {
        #[arg(long, value_enum, default_value_t = PlotKind::TimeSpace)]
        kind: PlotKind,
        #[arg(long)]
        timetable: PathBuf,
        /// Demand matrix; required for occupancy, optional overlay
        /// otherwise.
        #[arg(long)]
        demand: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    /// Train paths over time and distance.
    TimeSpace,
    /// On-board passengers along the line.
    Occupancy,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err);
            match err {
                Error::Infeasible(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Fit {
            samples,
            config,
            out_dir,
            strict,
        } => run_fit(&samples, &config, &out_dir, strict),
        Command::Optimize {
            demand,
            config,
            out_dir,
            seed,
            budget_seconds,
            trains,
        } => run_optimize(&demand, &config, &out_dir, seed, budget_seconds, trains),
        Command::Evaluate {
            timetable,
            demand,
            config,
            out_dir,
        } => run_evaluate(&timetable, &demand, &config, &out_dir),
        Command::Sweep {
            demand,
            config,
            out_dir,
            seed,
            budget_seconds,
        } => run_sweep(&demand, &config, &out_dir, seed, budget_seconds),
        Command::Plot {
            kind,
            timetable,
            demand,
            config,
            out,
        } => run_plot(kind, &timetable, demand.as_deref(), &config, &out),
    }
}

fn load_inputs(config_path: &Path, demand_path: &Path) -> Result<(RunConfig, Line, OdMatrix)> {
    let config = config_io::read_config(config_path)?;
    let line = config.build_line()?;
    let od = matrix::read_matrix(demand_path)?;
    if od.n_stations() != line.n_stations() {
        return Err(Error::invalid(format!(
            "demand matrix is for {} stations, the configured line has {}",
            od.n_stations(),
            line.n_stations()
        )));
    }
    Ok((config, line, od))
}

fn run_fit(samples: &Path, config_path: &Path, out_dir: &Path, strict: bool) -> Result<ExitCode> {
    let config = config_io::read_config(config_path)?;
    let line = config.build_line()?;
    let (series_map, diagnostics) = series::read_sample_series(samples)?;
    for d in &diagnostics {
        eprintln!("warning: {} line {}: {}", samples.display(), d.line, d.message);
    }
    if strict {
        if let Some(d) = diagnostics.first() {
            return Err(Error::parse(
                samples.display().to_string(),
                d.line,
                format!("{} (strict mode)", d.message),
            ));
        }
    }
    let (od, fits) = fit_od_samples(&series_map, line.n_stations(), &config.fit_options())?;
    std::fs::create_dir_all(out_dir)?;
    matrix::write_matrix(&out_dir.join("matrix.txt"), &od)?;
    std::fs::write(out_dir.join("fit-report.txt"), report::format_fit_report(&fits))?;
    let worst = fits
        .iter()
        .map(|f| f.diagnostics.rmse)
        .fold(0.0f64, f64::max);
    println!(
        "fitted {} pairs, worst pair rmse {:.4}; wrote {}",
        fits.len(),
        worst,
        out_dir.join("matrix.txt").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn write_solution_outputs(
    solution: &Solution,
    line: &Line,
    od: &OdMatrix,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    timetable::write_timetable(&out_dir.join("timetable.txt"), &solution.timetable)?;
    std::fs::write(out_dir.join("stats.txt"), report::format_stats(&solution.stats))?;
    let open = awt(&solution.flow, od, line)?;
    let interdeps = solution.timetable.interdeparture_times();
    let metrics = summarize(&solution.flow, line, &solution.awt, &interdeps)?;
    std::fs::write(
        out_dir.join("metrics.txt"),
        report::format_metrics(
            &metrics,
            Some(open.total_awt),
            Some(solution.flow.total_leftover()),
        ),
    )?;
    let check = validate(&solution.timetable, line)?;
    std::fs::write(out_dir.join("validation.txt"), report::format_validation(&check))?;
    flow_export::export_flow(&flow_export::dump_from(&solution.flow), &out_dir.join("flow"))?;
    Ok(())
}

fn run_optimize(
    demand: &Path,
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    budget_seconds: Option<f64>,
    trains: Option<usize>,
) -> Result<ExitCode> {
    let (config, line, od) = load_inputs(config_path, demand)?;
    let mut problem = OptimizationProblem::new(&line, &od, config.capacity_mode()?);
    problem.fixed_train_count = trains.or(config.optimize.train_count);
    problem.stopping_mode = config.stopping_mode();
    problem.optimize_speeds = config.optimize.optimize_speeds.unwrap_or(false);
    problem.search = config.search_params();
    if let Some(secs) = budget_seconds {
        problem.search.budget = Some(Duration::from_secs_f64(secs));
    }
    problem.seed = seed.or(config.optimize.seed).unwrap_or(0);

    let solution = optimize(&problem)?;
    write_solution_outputs(&solution, &line, &od, out_dir)?;
    println!(
        "{} trains, average wait {:.3} min; wrote {}",
        solution.stats.train_count,
        solution.awt.total_awt,
        out_dir.join("timetable.txt").display()
    );
    if !solution.stats.converged {
        eprintln!("warning: budget hit, result may be off the best achievable");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_evaluate(
    timetable_path: &Path,
    demand: &Path,
    config_path: &Path,
    out_dir: &Path,
) -> Result<ExitCode> {
    let (config, line, od) = load_inputs(config_path, demand)?;
    let tt = timetable::read_timetable(timetable_path)?;
    let check = validate(&tt, &line)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("validation.txt"), report::format_validation(&check))?;
    if !check.feasible() {
        eprintln!(
            "timetable breaks {} rules, see {}",
            check.violations.len(),
            out_dir.join("validation.txt").display()
        );
        return Err(Error::infeasible("the timetable fails validation"));
    }
    let flow = load_passengers(&od, &tt, &line, &config.flow_options())?;
    let closed = awt_to_horizon(&flow, &od, &line)?;
    let open = awt(&flow, &od, &line)?;
    let metrics = summarize(&flow, &line, &closed, &tt.interdeparture_times())?;
    std::fs::write(
        out_dir.join("metrics.txt"),
        report::format_metrics(&metrics, Some(open.total_awt), Some(flow.total_leftover())),
    )?;
    flow_export::export_flow(&flow_export::dump_from(&flow), &out_dir.join("flow"))?;
    println!(
        "feasible; average wait {:.3} min, {:.1} passengers left at end of service",
        closed.total_awt,
        flow.total_leftover()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(
    demand: &Path,
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    budget_seconds: Option<f64>,
) -> Result<ExitCode> {
    let (config, line, od) = load_inputs(config_path, demand)?;
    let sweep_section = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::invalid("the config has no [sweep] section"))?;
    let mode = config.sweep_mode().expect("sweep section present");
    let mut spec = SweepSpec::new(&line, &od, mode);
    spec.capacity_levels = sweep_section.capacity_levels.clone();
    spec.train_counts = sweep_section.train_counts.clone();
    spec.capacity_per_carriage = sweep_section.capacity_per_carriage;
    spec.stopping_mode = config.stopping_mode();
    spec.optimize_speeds = config.optimize.optimize_speeds.unwrap_or(false);
    spec.search = config.search_params();
    spec.seed = seed.or(config.optimize.seed).unwrap_or(0);
    if let Some(total) = budget_seconds {
        let cells = (spec.capacity_levels.len() * spec.train_counts.len()).max(1);
        spec.search.budget = Some(Duration::from_secs_f64(total / cells as f64));
    }

    let outcome = sweep(&spec)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("report.txt"), report::format_table_report(&outcome))?;
    std::fs::write(
        out_dir.join("points-report.txt"),
        report::format_points_report(&outcome),
    )?;
    std::fs::write(out_dir.join("points.tsv"), report::format_points_tsv(&outcome))?;
    std::fs::write(
        out_dir.join("surface-asd.txt"),
        report::format_surface_asd(&outcome.grid),
    )?;
    std::fs::write(
        out_dir.join("surface-alf.txt"),
        report::format_surface_alf(&outcome.grid),
    )?;
    let curves = equilibrium_curve(&outcome.grid);
    std::fs::write(out_dir.join("equilibrium.txt"), report::format_equilibrium(&curves))?;
    std::fs::write(out_dir.join("pareto.svg"), pareto_svg(&outcome))?;
    let cells_dir = out_dir.join("cells");
    std::fs::create_dir_all(&cells_dir)?;
    for point in &outcome.points {
        if let Some(idx) = point.solution {
            let name = format!("{}.txt", point.label(outcome.mode));
            timetable::write_timetable(&cells_dir.join(name), &outcome.solutions[idx].timetable)?;
        }
    }

    let failed = outcome.failed_cells();
    println!(
        "swept {} cells, {} failed; wrote {}",
        outcome.points.len(),
        failed,
        out_dir.join("points.tsv").display()
    );
    if failed > 0 {
        for p in outcome.points.iter().filter(|p| p.failed.is_some()) {
            eprintln!(
                "cell {}: {}",
                p.label(outcome.mode),
                p.failed.as_deref().unwrap_or("unknown failure")
            );
        }
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn flow_for_plot(tt: &Timetable, line: &Line, od: &OdMatrix, config: &RunConfig) -> Result<FlowState> {
    load_passengers(od, tt, line, &config.flow_options())
}

fn run_plot(
    kind: PlotKind,
    timetable_path: &Path,
    demand: Option<&Path>,
    config_path: &Path,
    out: &Path,
) -> Result<ExitCode> {
    let config = config_io::read_config(config_path)?;
    let line = config.build_line()?;
    let tt = timetable::read_timetable(timetable_path)?;
    if tt.n_stations() != line.n_stations() {
        return Err(Error::invalid(format!(
            "timetable is for {} stations, the configured line has {}",
            tt.n_stations(),
            line.n_stations()
        )));
    }
    let od = demand.map(matrix::read_matrix).transpose()?;
    if let Some(od) = &od {
        if od.n_stations() != line.n_stations() {
            return Err(Error::invalid(format!(
                "demand matrix is for {} stations, the configured line has {}",
                od.n_stations(),
                line.n_stations()
            )));
        }
    }
    let svg = match kind {
        PlotKind::TimeSpace => {
            let overlay = if config.plot.demand_overlay { od.as_ref() } else { None };
            time_space_svg(&tt, &line, overlay)
        }
        PlotKind::Occupancy => {
            let od = od.ok_or_else(|| Error::invalid("occupancy plots need --demand"))?;
            let flow = flow_for_plot(&tt, &line, &od, &config)?;
            occupancy_svg(&flow, &line)
        }
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, svg)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}
