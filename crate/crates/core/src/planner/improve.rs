use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::context::{Schedule, Visit};
use super::types::{Budget, Plan};
use super::{Objective, PlanError, Planner};

/// Moves are evaluated in blocks; within a block the first improving move in
/// scan order wins, so the outcome does not depend on the worker count.
const BLOCK: usize = 256;

/// Random moves tried per kick step before giving up on finding a feasible
/// one.
const KICK_TRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Move {
    /// Take visits `i..i + len` of route `from` and reinsert them at `j` of
    /// route `to` (index into the route after removal), optionally reversed
    /// with every direction flipped.
    Relocate {
        from: usize,
        i: usize,
        len: usize,
        to: usize,
        j: usize,
        reverse: bool,
    },
    Swap {
        r1: usize,
        i: usize,
        r2: usize,
        j: usize,
    },
    /// Reverse visits `i..=j` of route `r`, flipping each direction.
    TwoOpt { r: usize, i: usize, j: usize },
    /// Exchange the tails `r1[i..]` and `r2[j..]`.
    Exchange {
        r1: usize,
        i: usize,
        r2: usize,
        j: usize,
    },
    Flip { r: usize, i: usize },
}

fn reversed_flipped(visits: &mut [Visit]) {
    visits.reverse();
    for v in visits {
        v.reversed = !v.reversed;
    }
}

impl Move {
    /// Routes after the move, only for the routes it touches.
    fn apply(self, routes: &[Vec<Visit>]) -> Vec<(usize, Vec<Visit>)> {
        match self {
            Move::Relocate {
                from,
                i,
                len,
                to,
                j,
                reverse,
            } => {
                let mut src = routes[from].clone();
                let mut seg: Vec<Visit> = src.drain(i..i + len).collect();
                if reverse {
                    reversed_flipped(&mut seg);
                }
                if from == to {
                    src.splice(j..j, seg);
                    vec![(from, src)]
                } else {
                    let mut dst = routes[to].clone();
                    dst.splice(j..j, seg);
                    vec![(from, src), (to, dst)]
                }
            }
            Move::Swap { r1, i, r2, j } => {
                if r1 == r2 {
                    let mut r = routes[r1].clone();
                    r.swap(i, j);
                    vec![(r1, r)]
                } else {
                    let mut a = routes[r1].clone();
                    let mut b = routes[r2].clone();
                    std::mem::swap(&mut a[i], &mut b[j]);
                    vec![(r1, a), (r2, b)]
                }
            }
            Move::TwoOpt { r, i, j } => {
                let mut route = routes[r].clone();
                reversed_flipped(&mut route[i..=j]);
                vec![(r, route)]
            }
            Move::Exchange { r1, i, r2, j } => {
                let mut a = routes[r1][..i].to_vec();
                let mut b = routes[r2][..j].to_vec();
                a.extend_from_slice(&routes[r2][j..]);
                b.extend_from_slice(&routes[r1][i..]);
                vec![(r1, a), (r2, b)]
            }
            Move::Flip { r, i } => {
                let mut route = routes[r].clone();
                route[i].reversed = !route[i].reversed;
                vec![(r, route)]
            }
        }
    }
}

/// All moves for the current routes, in canonical order.
pub(crate) fn neighbourhood(planner: &Planner, routes: &[Vec<Visit>]) -> Vec<Move> {
    let n = routes.len();
    let fits = |to: usize, seg: &[Visit]| seg.iter().all(|v| planner.ctx.compatible(to, v.task));
    let mut moves = Vec::new();
    for from in 0..n {
        for len in 1..=3 {
            for i in 0..(routes[from].len() + 1).saturating_sub(len) {
                let seg = &routes[from][i..i + len];
                for to in 0..n {
                    if !fits(to, seg) {
                        continue;
                    }
                    let slots = if from == to {
                        routes[to].len() - len + 1
                    } else {
                        routes[to].len() + 1
                    };
                    for j in 0..slots {
                        for reverse in [false, true] {
                            if from == to && i == j && !reverse {
                                continue;
                            }
                            moves.push(Move::Relocate {
                                from,
                                i,
                                len,
                                to,
                                j,
                                reverse,
                            });
                        }
                    }
                }
            }
        }
    }
    for r1 in 0..n {
        for i in 0..routes[r1].len() {
            for r2 in r1..n {
                let start = if r1 == r2 { i + 1 } else { 0 };
                for j in start..routes[r2].len() {
                    if r1 != r2
                        && !(planner.ctx.compatible(r2, routes[r1][i].task)
                            && planner.ctx.compatible(r1, routes[r2][j].task))
                    {
                        continue;
                    }
                    moves.push(Move::Swap { r1, i, r2, j });
                }
            }
        }
    }
    for (r, route) in routes.iter().enumerate() {
        for i in 0..route.len() {
            for j in i + 1..route.len() {
                moves.push(Move::TwoOpt { r, i, j });
            }
        }
    }
    for r1 in 0..n {
        for r2 in r1 + 1..n {
            let (a, b) = (&routes[r1], &routes[r2]);
            for i in 0..=a.len() {
                if !fits(r2, &a[i..]) {
                    continue;
                }
                for j in 0..=b.len() {
                    if (i == a.len() && j == b.len()) || !fits(r1, &b[j..]) {
                        continue;
                    }
                    moves.push(Move::Exchange { r1, i, r2, j });
                }
            }
        }
    }
    for (r, route) in routes.iter().enumerate() {
        for i in 0..route.len() {
            moves.push(Move::Flip { r, i });
        }
    }
    moves
}

#[derive(Clone)]
struct State {
    routes: Vec<Vec<Visit>>,
    schedules: Vec<Schedule>,
    objective: Objective,
}

impl State {
    fn commit(&mut self, changes: Vec<(usize, Vec<Visit>, Schedule)>) {
        for (r, visits, schedule) in changes {
            self.routes[r] = visits;
            self.schedules[r] = schedule;
        }
        self.objective = Objective::of(&self.schedules);
    }
}

/// Objective after applying `mv`, or `None` if it breaks feasibility.
fn evaluate(
    planner: &Planner,
    state: &State,
    mv: Move,
) -> Option<(Objective, Vec<(usize, Vec<Visit>, Schedule)>)> {
    let changed = mv.apply(&state.routes);
    let mut completions: Vec<f64> = state.schedules.iter().map(|s| s.completion).collect();
    let mut out = Vec::with_capacity(changed.len());
    for (r, visits) in changed {
        let s = planner.ctx.schedule(r, &visits).ok()?;
        completions[r] = s.completion;
        out.push((r, visits, s));
    }
    let objective = Objective {
        makespan: completions.iter().copied().fold(0.0, f64::max),
        total: completions.iter().sum(),
    };
    Some((objective, out))
}

/// Remaining search allowance.
struct Allowance {
    passes: u64,
    started: Instant,
    deadline: Option<Duration>,
}

impl Allowance {
    fn take_pass(&mut self) -> bool {
        if self.passes == 0 {
            return false;
        }
        if self.deadline.is_some_and(|d| self.started.elapsed() >= d) {
            log::warn!("local search stopped on wall-clock budget");
            self.passes = 0;
            return false;
        }
        self.passes -= 1;
        true
    }
}

impl Planner<'_> {
    /// Iterated first-improvement local search over segment relocation,
    /// swap, 2-opt, tail exchange and flip moves. A move is accepted only if
    /// it lowers the makespan, or keeps it and lowers the summed route
    /// completion times; charge stops are re-derived for every evaluated
    /// route. After each descent the best plan so far is kicked with a few
    /// random feasible moves and descended again; the result is the best
    /// plan seen.
    pub fn improve(&self, plan: &Plan, budget: Budget) -> Result<Plan, PlanError> {
        if budget.iterations == 0 {
            return Ok(plan.clone());
        }
        let routes = self.visits_of(plan)?;
        let schedules: Vec<Schedule> = routes
            .iter()
            .enumerate()
            .map(|(p, v)| self.ctx.schedule(p, v).map_err(|e| self.schedule_error(p, e)))
            .collect::<Result<_, _>>()?;
        let objective = Objective::of(&schedules);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let pool = (self.config.jobs > 1)
            .then(|| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.config.jobs)
                    .build()
                    .ok()
            })
            .flatten();
        let mut allowance = Allowance {
            passes: budget.iterations,
            started: Instant::now(),
            deadline: budget.wall_ms.map(Duration::from_millis),
        };

        let mut best = State {
            routes,
            schedules,
            objective,
        };
        let mut accepted = self.descend(&mut best, &mut rng, pool.as_ref(), &mut allowance);
        for kick in 0..self.config.kicks {
            if allowance.passes == 0 {
                break;
            }
            let Some(mut trial) = self.kick(&best, &mut rng) else {
                break;
            };
            let moves = self.descend(&mut trial, &mut rng, pool.as_ref(), &mut allowance);
            if trial.objective.improves_on(&best.objective) {
                log::debug!(
                    "kick {kick}: makespan {:.3} -> {:.3}",
                    best.objective.makespan,
                    trial.objective.makespan
                );
                best = trial;
                accepted += moves;
            }
        }
        let method = if plan.method == "greedy" || plan.method.is_empty() {
            "greedy+local_search".to_string()
        } else {
            plan.method.clone()
        };
        self.build_plan(&best.routes, &method, plan.improvement_moves + accepted)
    }

    /// Descends to a local optimum; returns the number of accepted moves.
    fn descend(
        &self,
        state: &mut State,
        rng: &mut ChaCha8Rng,
        pool: Option<&rayon::ThreadPool>,
        allowance: &mut Allowance,
    ) -> u64 {
        let mut accepted = 0;
        while allowance.take_pass() {
            let mut moves = neighbourhood(self, &state.routes);
            moves.shuffle(rng);
            let current = state.objective;
            let eval = |mv: &Move| {
                evaluate(self, state, *mv).filter(|(obj, _)| obj.improves_on(&current))
            };
            let mut found = None;
            for block in moves.chunks(BLOCK) {
                let hit = match pool {
                    Some(pool) => pool
                        .install(|| block.par_iter().map(eval).collect::<Vec<_>>())
                        .into_iter()
                        .flatten()
                        .next(),
                    None => block.iter().find_map(eval),
                };
                if hit.is_some() {
                    found = hit;
                    break;
                }
            }
            let Some((_, changes)) = found else {
                break;
            };
            state.commit(changes);
            accepted += 1;
        }
        accepted
    }

    /// Applies two or three random feasible moves, regardless of objective.
    fn kick(&self, from: &State, rng: &mut ChaCha8Rng) -> Option<State> {
        let mut state = from.clone();
        let mut applied = 0;
        for _ in 0..rng.gen_range(2..=3) {
            let moves = neighbourhood(self, &state.routes);
            if moves.is_empty() {
                break;
            }
            for _ in 0..KICK_TRIES {
                let mv = moves[rng.gen_range(0..moves.len())];
                if let Some((_, changes)) = evaluate(self, &state, mv) {
                    state.commit(changes);
                    applied += 1;
                    break;
                }
            }
        }
        (applied > 0).then_some(state)
    }
}
