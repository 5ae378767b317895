//! Exhaustive solver for small instances, used as ground truth for the
//! heuristic planner.
//!
//! Routes never interact, so the minimum makespan over all assignments
//! equals the minimum over assignments of the per-route optima. The solver
//! therefore finds, for every platform and every subset of tasks, the best
//! of all orderings and inspection directions, then enumerates all
//! task-to-platform assignments over those tables. Charge stops come from
//! the same greedy insertion the planner uses.

use rayon::prelude::*;

use crate::energy::PlatformSpec;
use crate::grid::GridModel;
use crate::planner::{InspectionTask, Objective, Plan, PlanError, Planner, PlannerConfig, Visit};

pub const MAX_TASKS: usize = 8;
pub const MAX_PLATFORMS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(
        "instance too large for exhaustive search: {tasks} tasks, {platforms} platforms \
         (limits {MAX_TASKS} and {MAX_PLATFORMS})"
    )]
    InstanceTooLarge { tasks: usize, platforms: usize },
    #[error("no feasible assignment exists")]
    Infeasible,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Calls `f` with every ordering of `items` combined with every choice of
/// inspection direction: `k! * 2^k` sequences for `k` items.
pub(crate) fn for_each_sequence(items: &[usize], mut f: impl FnMut(&[Visit])) {
    fn recurse(
        remaining: &mut Vec<usize>,
        prefix: &mut Vec<Visit>,
        f: &mut dyn FnMut(&[Visit]),
    ) {
        if remaining.is_empty() {
            f(prefix);
            return;
        }
        for idx in 0..remaining.len() {
            let task = remaining.remove(idx);
            for reversed in [false, true] {
                prefix.push(Visit { task, reversed });
                recurse(remaining, prefix, f);
                prefix.pop();
            }
            remaining.insert(idx, task);
        }
    }
    let mut remaining = items.to_vec();
    let mut prefix = Vec::with_capacity(items.len());
    recurse(&mut remaining, &mut prefix, &mut f);
}

/// Number of sequences `for_each_sequence` visits for `k` tasks.
pub fn sequence_count(k: usize) -> u64 {
    (1..=k as u64).product::<u64>() << k
}

pub fn exact_plan(
    tasks: &[InspectionTask],
    fleet: &[PlatformSpec],
    grid: &GridModel,
) -> Result<Plan, OracleError> {
    exact_plan_with(tasks, fleet, grid, &PlannerConfig::default())
}

pub fn exact_plan_with(
    tasks: &[InspectionTask],
    fleet: &[PlatformSpec],
    grid: &GridModel,
    config: &PlannerConfig,
) -> Result<Plan, OracleError> {
    if tasks.len() > MAX_TASKS || fleet.len() > MAX_PLATFORMS {
        return Err(OracleError::InstanceTooLarge {
            tasks: tasks.len(),
            platforms: fleet.len(),
        });
    }
    let planner = Planner::new(grid, fleet, tasks.to_vec(), config.clone())?;
    let order = &planner.order;
    let n = order.len();
    let m = fleet.len();

    // best[p][mask]: shortest completion for platform p serving exactly the
    // tasks in mask (bits index into `order`).
    let best: Vec<Vec<Option<(f64, Vec<Visit>)>>> = (0..m)
        .map(|p| {
            (0..1usize << n)
                .into_par_iter()
                .map(|mask| {
                    let items: Vec<usize> = (0..n)
                        .filter(|b| mask >> b & 1 == 1)
                        .map(|b| order[b])
                        .collect();
                    let mut best: Option<(f64, Vec<Visit>)> = None;
                    for_each_sequence(&items, |seq| {
                        if let Ok(s) = planner.ctx.schedule(p, seq) {
                            if best.as_ref().is_none_or(|(c, _)| s.completion < *c) {
                                best = Some((s.completion, seq.to_vec()));
                            }
                        }
                    });
                    best
                })
                .collect()
        })
        .collect();

    let mut winner: Option<(Objective, Vec<usize>)> = None;
    let mut assignment = vec![0usize; n];
    let total = m.checked_pow(n as u32).unwrap_or(0);
    for _ in 0..total {
        let mut masks = vec![0usize; m];
        for (bit, &p) in assignment.iter().enumerate() {
            masks[p] |= 1 << bit;
        }
        let completions: Option<Vec<f64>> = (0..m)
            .map(|p| best[p][masks[p]].as_ref().map(|(c, _)| *c))
            .collect();
        if let Some(completions) = completions {
            let objective = Objective {
                makespan: completions.iter().copied().fold(0.0, f64::max),
                total: completions.iter().sum(),
            };
            let better = match &winner {
                None => true,
                Some((w, _)) => {
                    objective.makespan < w.makespan
                        || (objective.makespan == w.makespan && objective.total < w.total)
                }
            };
            if better {
                winner = Some((objective, masks));
            }
        }
        // Next assignment, task 0 varying slowest.
        for digit in assignment.iter_mut().rev() {
            *digit += 1;
            if *digit < m {
                break;
            }
            *digit = 0;
        }
    }

    let (_, masks) = winner.ok_or(OracleError::Infeasible)?;
    let routes: Vec<Vec<Visit>> = masks
        .iter()
        .enumerate()
        .map(|(p, &mask)| best[p][mask].as_ref().map(|(_, s)| s.clone()).unwrap_or_default())
        .collect();
    Ok(planner.build_plan(&routes, "exact", 0)?)
}
