//! Command-line front end. Exit codes: 0 success, 1 domain or I/O error,
//! 2 usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::energy::load_fleet;
use crate::grid::load_grid;
use crate::oracle;
use crate::planner::{self, Budget, PlannerConfig};
use crate::report;
use crate::sim;

#[derive(Debug, Parser)]
#[command(name = "gridsweep", version, about = "Plan and simulate multi-UAV power-line inspections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a minimum-makespan plan covering every span.
    Plan {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        fleet: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wall-clock cap on local search. Plans cut short by it are not
        /// reproducible.
        #[arg(long)]
        budget_ms: Option<u64>,
        /// Cap on local-search passes.
        #[arg(long, default_value_t = Budget::default().iterations)]
        iterations: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fly a plan through a scenario.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the trajectories as CSV.
        #[arg(long)]
        trace_csv: Option<PathBuf>,
    },
    /// Re-check a simulation result against the regulatory and energy limits.
    Verify {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        fleet: PathBuf,
    },
    /// Solve a small instance exactly.
    Oracle {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        fleet: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise a simulation result.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

type Failure = Box<dyn std::error::Error>;

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Plan {
            grid,
            fleet,
            seed,
            budget_ms,
            iterations,
            jobs,
            out,
        } => {
            let grid = load_grid(&grid)?;
            let fleet = load_fleet(&fleet)?;
            let config = PlannerConfig {
                seed,
                budget: Budget {
                    iterations,
                    wall_ms: budget_ms,
                },
                jobs: jobs.max(1),
                ..PlannerConfig::default()
            };
            let tasks = planner::generate_tasks(&grid);
            log::info!("planning {} tasks for {} platforms", tasks.len(), fleet.platforms.len());
            let plan = planner::plan_mission(&tasks, &fleet.platforms, &grid, &config)?;
            log::info!("makespan {:.1} s, mission duration {:.1} s", plan.makespan, plan.mission_duration);
            planner::write_plan(&plan, &out)?;
            log::info!("plan written to {}", out.display());
            println!(
                "planned {} spans on {} platforms: makespan {:.1} s",
                tasks.len(),
                fleet.platforms.len(),
                plan.makespan
            );
            Ok(0)
        }
        Command::Simulate {
            plan,
            grid,
            scenario,
            out,
            trace_csv,
        } => {
            let plan = planner::read_plan(&plan)?;
            let grid = load_grid(&grid)?;
            let scenario = sim::read_scenario(&scenario)?;
            let result = sim::simulate(&plan, &grid, &scenario)?;
            sim::write_result(&result, &out)?;
            if let Some(csv) = trace_csv {
                sim::write_trace_csv(&result, &csv)?;
            }
            println!(
                "simulated makespan {:.1} s, {} detections, {} violations",
                result.measured_makespan,
                result.detections.len(),
                result.violations.len()
            );
            Ok(0)
        }
        Command::Verify {
            result,
            grid,
            fleet,
        } => {
            let result = sim::read_result(&result)?;
            let grid = load_grid(&grid)?;
            let fleet = load_fleet(&fleet)?;
            let violations = sim::verify(&result, &grid, &fleet.platforms);
            for v in &violations {
                println!(
                    "{}: {:?} from t={:.1} s to t={:.1} s (worst {:.3}, limit {:.3})",
                    v.platform_id, v.kind, v.time, v.end_time, v.worst, v.limit
                );
            }
            println!("{} violations", violations.len());
            Ok(if violations.is_empty() { 0 } else { 1 })
        }
        Command::Oracle { grid, fleet, out } => {
            let grid = load_grid(&grid)?;
            let fleet = load_fleet(&fleet)?;
            let tasks = planner::generate_tasks(&grid);
            let plan = oracle::exact_plan(&tasks, &fleet.platforms, &grid)?;
            planner::write_plan(&plan, &out)?;
            println!("optimal makespan {:.1} s", plan.makespan);
            Ok(0)
        }
        Command::Report {
            result,
            plan,
            grid,
            out,
        } => {
            let result = sim::read_result(&result)?;
            let plan = planner::read_plan(&plan)?;
            let grid = load_grid(&grid)?;
            let report = report::write_mission_report(&result, &plan, &grid, &out)?;
            println!(
                "mission {}: {} findings, {} violations",
                report.mission_id,
                report.findings.len(),
                report.violations.len()
            );
            Ok(0)
        }
    }
}
