//! Minimum-makespan inspection planning.
//!
//! Tasks are assigned to platforms by greedy insertion, each route gets
//! charge stops inserted wherever the battery would otherwise cross its
//! reserve, and a first-improvement local search then polishes the result.
//! The objective is the time at which the last span has been inspected;
//! return legs are planned and energy-checked but do not count towards it.

mod context;
mod improve;
mod types;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

pub use types::{
    Action, ActionKind, Budget, DEFAULT_KICKS, InspectionTask, Plan, PlannerConfig, Route, SpanEnd,
};

pub(crate) use context::{Context, Schedule, ScheduleError, Visit};

use crate::energy::{EnergyError, PlatformSpec};
use crate::format::{self, FormatError};
use crate::geometry::Vec3;
use crate::grid::{self, GridError, GridModel};

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("task {0}: no platform in the fleet can inspect it")]
    InfeasibleTask(String),
    #[error("task {0}: no energy-feasible route reaches it, even with recharging")]
    UnreachableTask(String),
    #[error("platform {platform}: battery would cross reserve {context} and no charging station is reachable")]
    NoReachableStation { platform: String, context: String },
    #[error("unknown span \"{0}\"")]
    UnknownSpan(String),
    #[error("unknown platform \"{0}\"")]
    UnknownPlatform(String),
    #[error("unknown task \"{0}\"")]
    UnknownTask(String),
    #[error("duplicate task \"{0}\"")]
    DuplicateTask(String),
    #[error("route for {platform} is discontinuous at action {index}")]
    Discontinuous { platform: String, index: usize },
    #[error("invalid fleet: {}", .0.join("; "))]
    InvalidFleet(Vec<String>),
    #[error("plan grid digest {plan} does not match grid {grid}")]
    DigestMismatch { plan: String, grid: String },
}

/// One inspection task per span, in grid order.
pub fn generate_tasks(grid: &GridModel) -> Vec<InspectionTask> {
    let station_spans: BTreeSet<&str> = grid.stations.iter().map(|s| s.span_id.as_str()).collect();
    grid.spans
        .iter()
        .filter_map(|span| {
            let length = grid::span_length(span, grid).ok()?;
            let flagged = [&span.tower_a, &span.tower_b]
                .iter()
                .any(|id| grid.tower(id).is_some_and(|t| t.hover_detail));
            Some(InspectionTask {
                task_id: task_id_for(&span.id),
                span_id: span.id.clone(),
                entry_end: SpanEnd::A,
                length,
                requires_hover_detail: flagged || station_spans.contains(span.id.as_str()),
            })
        })
        .collect()
}

pub fn task_id_for(span_id: &str) -> String {
    format!("inspect-{span_id}")
}

/// Duration (s) and energy (Wh) of a transit leg between two points.
pub fn transit_cost(
    from: Vec3,
    to: Vec3,
    platform: &PlatformSpec,
    grid: &GridModel,
) -> Result<(f64, f64), PlanError> {
    let leg = context::build_transit(grid, platform, from, to, ActionKind::Transit)?;
    Ok((leg.duration, leg.energy))
}

/// Latest inspection completion over all routes.
pub fn plan_makespan(plan: &Plan) -> f64 {
    types::plan_makespan_of(&plan.routes)
}

pub fn construct_plan(
    tasks: &[InspectionTask],
    fleet: &[PlatformSpec],
    grid: &GridModel,
    config: &PlannerConfig,
) -> Result<Plan, PlanError> {
    Planner::new(grid, fleet, tasks.to_vec(), config.clone())?.construct()
}

/// Greedy construction followed by local search within the configured
/// budget.
pub fn plan_mission(
    tasks: &[InspectionTask],
    fleet: &[PlatformSpec],
    grid: &GridModel,
    config: &PlannerConfig,
) -> Result<Plan, PlanError> {
    let planner = Planner::new(grid, fleet, tasks.to_vec(), config.clone())?;
    let initial = planner.construct()?;
    planner.improve(&initial, config.budget)
}

/// Local search on an existing plan, using the plan's own configuration.
pub fn improve_plan(plan: &Plan, grid: &GridModel, budget: Budget) -> Result<Plan, PlanError> {
    let tasks = tasks_in_plan(plan, grid)?;
    let planner = Planner::new(grid, &plan.fleet, tasks, plan.config.clone())?;
    planner.improve(plan, budget)
}

/// Recomputes the charge stops of `route` from scratch: a full charge at
/// the nearest reachable station right before the first inspection that
/// would otherwise leave the battery unable to finish or reach a station.
pub fn insert_recharge_stops(
    route: &Route,
    platform: &PlatformSpec,
    grid: &GridModel,
    config: &PlannerConfig,
) -> Result<Route, PlanError> {
    if let Some(index) = route.first_discontinuity(1e-6) {
        return Err(PlanError::Discontinuous {
            platform: platform.id.clone(),
            index,
        });
    }
    let all = generate_tasks(grid);
    let mut tasks = Vec::new();
    let mut visits = Vec::new();
    for action in route.actions.iter().filter(|a| a.kind == ActionKind::Inspect) {
        let span_id = action.span_id.as_deref().unwrap_or_default();
        let task = all
            .iter()
            .find(|t| t.span_id == span_id)
            .ok_or_else(|| PlanError::UnknownSpan(span_id.to_string()))?;
        visits.push(Visit {
            task: tasks.len(),
            reversed: action.reversed,
        });
        tasks.push(task.clone());
    }
    let planner = Planner::new(grid, std::slice::from_ref(platform), tasks, config.clone())?;
    let schedule = planner
        .ctx
        .schedule(0, &visits)
        .map_err(|e| planner.schedule_error(0, e))?;
    Ok(planner.ctx.materialize(0, &schedule))
}

/// Rebuilds the task list covered by a plan's inspections, in grid order.
pub fn tasks_in_plan(plan: &Plan, grid: &GridModel) -> Result<Vec<InspectionTask>, PlanError> {
    let mut wanted = BTreeSet::new();
    for action in plan.routes.iter().flat_map(|r| &r.actions) {
        if action.kind == ActionKind::Inspect {
            let span = action.span_id.clone().unwrap_or_default();
            if grid.span(&span).is_none() {
                return Err(PlanError::UnknownSpan(span));
            }
            wanted.insert(span);
        }
    }
    Ok(generate_tasks(grid)
        .into_iter()
        .filter(|t| wanted.contains(&t.span_id))
        .collect())
}

pub fn write_plan(plan: &Plan, path: &Path) -> Result<(), FormatError> {
    format::write_json(plan, path)
}

pub fn read_plan(path: &Path) -> Result<Plan, FormatError> {
    format::read_json(path, "plan")
}

/// `(makespan, sum of route completions)`, compared lexicographically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Objective {
    pub makespan: f64,
    pub total: f64,
}

/// Improvement threshold; differences below it are float noise.
pub(crate) const IMPROVE_EPS: f64 = 1e-9;

impl Objective {
    pub fn of(schedules: &[Schedule]) -> Self {
        Objective {
            makespan: schedules.iter().map(|s| s.completion).fold(0.0, f64::max),
            total: schedules.iter().map(|s| s.completion).sum(),
        }
    }

    /// Strictly better without ever raising the makespan.
    pub fn improves_on(&self, other: &Objective) -> bool {
        self.makespan <= other.makespan
            && (self.makespan < other.makespan - IMPROVE_EPS
                || self.total < other.total - IMPROVE_EPS)
    }
}

/// Planner bound to one grid, fleet and task set.
pub struct Planner<'a> {
    pub(crate) ctx: Context<'a>,
    pub(crate) config: PlannerConfig,
    /// Task indices sorted by task id.
    pub(crate) order: Vec<usize>,
}

impl<'a> Planner<'a> {
    pub fn new(
        grid: &'a GridModel,
        fleet: &[PlatformSpec],
        tasks: Vec<InspectionTask>,
        config: PlannerConfig,
    ) -> Result<Self, PlanError> {
        let errs: Vec<String> = fleet.iter().flat_map(PlatformSpec::validate).collect();
        if !errs.is_empty() {
            return Err(PlanError::InvalidFleet(errs));
        }
        let mut seen = BTreeSet::new();
        for task in &tasks {
            if !seen.insert(task.task_id.as_str()) {
                return Err(PlanError::DuplicateTask(task.task_id.clone()));
            }
        }
        let mut order: Vec<usize> = (0..tasks.len()).collect();
        order.sort_by(|&a, &b| tasks[a].task_id.cmp(&tasks[b].task_id));
        let ctx = Context::new(grid, tasks, fleet.to_vec(), &config)?;
        Ok(Planner { ctx, config, order })
    }

    pub fn tasks(&self) -> &[InspectionTask] {
        &self.ctx.tasks
    }

    pub(crate) fn schedule_error(&self, platform: usize, err: ScheduleError) -> PlanError {
        let task_name = |t: Option<usize>| {
            t.map_or_else(
                || "on the way home".to_string(),
                |t| self.ctx.tasks[t].task_id.clone(),
            )
        };
        match err {
            ScheduleError::Incompatible { task } => {
                PlanError::InfeasibleTask(self.ctx.tasks[task].task_id.clone())
            }
            ScheduleError::NoReachableStation { task } => PlanError::NoReachableStation {
                platform: self.ctx.platforms[platform].id.clone(),
                context: format!("before {}", task_name(task)),
            },
            ScheduleError::Unreachable { task } => PlanError::UnreachableTask(task_name(task)),
        }
    }

    pub(crate) fn build_plan(
        &self,
        routes: &[Vec<Visit>],
        method: &str,
        moves: u64,
    ) -> Result<Plan, PlanError> {
        let mut out = Vec::with_capacity(routes.len());
        for (p, visits) in routes.iter().enumerate() {
            let schedule = self
                .ctx
                .schedule(p, visits)
                .map_err(|e| self.schedule_error(p, e))?;
            out.push(self.ctx.materialize(p, &schedule));
        }
        Ok(Plan::assemble(
            self.ctx.grid.digest(),
            &self.config,
            method,
            moves,
            &self.ctx.platforms,
            out,
        ))
    }

    /// Greedy insertion: repeatedly commits the (route, task, position,
    /// direction) with the smallest resulting makespan, then the smallest
    /// growth of the receiving route; remaining ties go to the lower route
    /// index, then the lexicographically smaller task id. If some task can
    /// no longer be placed, construction restarts with that task inserted
    /// ahead of the others.
    pub fn construct(&self) -> Result<Plan, PlanError> {
        let n_routes = self.ctx.platforms.len();
        for &t in &self.order {
            if !(0..n_routes).any(|p| self.ctx.compatible(p, t)) {
                return Err(PlanError::InfeasibleTask(self.ctx.tasks[t].task_id.clone()));
            }
        }
        let mut first: Vec<usize> = Vec::new();
        loop {
            match self.insert_all(&first) {
                Ok(routes) => return self.build_plan(&routes, "greedy", 0),
                Err(stuck) if !first.contains(&stuck) => {
                    log::debug!(
                        "construction stuck on {}; restarting with it first",
                        self.ctx.tasks[stuck].task_id
                    );
                    first.push(stuck);
                }
                Err(stuck) => {
                    return Err(PlanError::UnreachableTask(
                        self.ctx.tasks[stuck].task_id.clone(),
                    ))
                }
            }
        }
    }

    /// Greedy insertion placing the `first` tasks, in that order, before
    /// the rest. Fails with the task that could not be placed.
    fn insert_all(&self, first: &[usize]) -> Result<Vec<Vec<Visit>>, usize> {
        let n_routes = self.ctx.platforms.len();
        let mut routes: Vec<Vec<Visit>> = vec![Vec::new(); n_routes];
        let mut completion = vec![0.0f64; n_routes];
        let mut unassigned: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|t| !first.contains(t))
            .collect();
        let mut forced = first.iter().copied();
        loop {
            let pool: Vec<usize> = match forced.next() {
                Some(t) => vec![t],
                None if unassigned.is_empty() => return Ok(routes),
                None => unassigned.clone(),
            };
            let mut best: Option<(f64, f64, usize, usize, usize, bool)> = None;
            for r in 0..n_routes {
                let others = (0..n_routes)
                    .filter(|&o| o != r)
                    .map(|o| completion[o])
                    .fold(0.0, f64::max);
                for &t in &pool {
                    if !self.ctx.compatible(r, t) {
                        continue;
                    }
                    for pos in 0..=routes[r].len() {
                        for reversed in [false, true] {
                            let mut candidate = routes[r].clone();
                            candidate.insert(pos, Visit { task: t, reversed });
                            let Ok(s) = self.ctx.schedule(r, &candidate) else {
                                continue;
                            };
                            let makespan = s.completion.max(others);
                            let delta = s.completion - completion[r];
                            let better = match best {
                                None => true,
                                Some((m, d, ..)) => {
                                    makespan < m || (makespan == m && delta < d)
                                }
                            };
                            if better {
                                best = Some((makespan, delta, r, t, pos, reversed));
                            }
                        }
                    }
                }
            }
            let Some((_, _, r, t, pos, reversed)) = best else {
                return Err(pool[0]);
            };
            unassigned.retain(|&u| u != t);
            routes[r].insert(pos, Visit { task: t, reversed });
            completion[r] = self
                .ctx
                .schedule(r, &routes[r])
                .expect("candidate was feasible")
                .completion;
            log::debug!(
                "insert {} into {} at {pos} (route now ends {:.1} s)",
                self.ctx.tasks[t].task_id,
                self.ctx.platforms[r].id,
                completion[r]
            );
        }
    }

    /// Visit sequences of `plan`, indexed like this planner's fleet.
    pub(crate) fn visits_of(&self, plan: &Plan) -> Result<Vec<Vec<Visit>>, PlanError> {
        let by_id: BTreeMap<&str, usize> = self
            .ctx
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.task_id.as_str(), i))
            .collect();
        let mut routes = vec![Vec::new(); self.ctx.platforms.len()];
        for route in &plan.routes {
            let p = self
                .ctx
                .platforms
                .iter()
                .position(|s| s.id == route.platform_id)
                .ok_or_else(|| PlanError::UnknownPlatform(route.platform_id.clone()))?;
            for action in route.actions.iter().filter(|a| a.kind == ActionKind::Inspect) {
                let id = action.task_id.as_deref().unwrap_or_default();
                let task = *by_id
                    .get(id)
                    .ok_or_else(|| PlanError::UnknownTask(id.to_string()))?;
                routes[p].push(Visit {
                    task,
                    reversed: action.reversed,
                });
            }
        }
        Ok(routes)
    }
}
