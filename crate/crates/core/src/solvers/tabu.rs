//! Tabu search.
//!
//! Each step takes the best move among those not tabu; a tabu move is still
//! eligible when it would beat the best energy seen (aspiration). Ties
//! between equal deltas are broken uniformly at random from the seeded
//! generator. With bit moves a flipped bit stays tabu for `tenure` steps;
//! with level swaps the level a node just left is tabu for that node.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::{FlipState, Swaps};
use super::{improves, Budget, Clock, Neighborhood, Solution, SolverRequest, TracePoint};
use crate::encoding::Assignment;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabuParams {
    /// Moves for which a reversal stays tabu. `None` scales with the number
    /// of nodes (or bits on raw models), see [`auto_tenure`].
    pub tenure: Option<u64>,
    /// Stop after this many moves without a new best. `None` runs the full budget.
    pub stall_limit: Option<u64>,
    pub neighborhood: Neighborhood,
}

impl Default for TabuParams {
    fn default() -> Self {
        Self {
            tenure: None,
            stall_limit: None,
            neighborhood: Neighborhood::Auto,
        }
    }
}

/// A quarter of the move groups, at least `min(25, groups / 2)`. Short
/// tenures cycle on the layered networks; long ones freeze small models.
pub fn auto_tenure(groups: usize) -> u64 {
    (groups / 4).max(groups.div_ceil(2).min(25)).max(1) as u64
}

/// Move budget used when none is given: 20 passes' worth of flips.
pub(crate) fn default_iterations(n_vars: usize) -> u64 {
    20 * n_vars as u64 + 1000
}

/// Result of one tabu run from a given state.
pub(crate) struct TabuRun {
    pub best: Option<(Assignment, f64)>,
    pub moves: u64,
    pub trace: Vec<TracePoint>,
}

/// Lowest-delta selection with reservoir tie-breaking.
struct Pick<M> {
    chosen: Option<M>,
    delta: f64,
    ties: u32,
    /// Oldest tabu candidate, used when every move is tabu.
    oldest: Option<(u64, M)>,
}

impl<M: Copy> Pick<M> {
    fn new() -> Self {
        Self {
            chosen: None,
            delta: f64::INFINITY,
            ties: 0,
            oldest: None,
        }
    }

    #[inline]
    fn offer(&mut self, m: M, d: f64, allowed: bool, tabu_until: u64, rng: &mut ChaCha8Rng) {
        if !allowed {
            if self.oldest.is_none_or(|(t, _)| tabu_until < t) {
                self.oldest = Some((tabu_until, m));
            }
            return;
        }
        if d < self.delta {
            self.chosen = Some(m);
            self.delta = d;
            self.ties = 1;
        } else if d == self.delta {
            self.ties += 1;
            if rng.gen_range(0..self.ties) == 0 {
                self.chosen = Some(m);
            }
        }
    }

    fn take(self) -> Option<M> {
        self.chosen.or(self.oldest.map(|(_, m)| m))
    }
}

/// Runs tabu from `state` in place. `best` seeds the aspiration level and
/// is only replaced by strictly better valid states.
pub(crate) fn run_tabu(
    state: &mut FlipState<'_>,
    params: &TabuParams,
    max_moves: Option<u64>,
    clock: &Clock,
    rng: &mut ChaCha8Rng,
    mut best: Option<(Assignment, f64)>,
    trace_offset: u64,
) -> Result<TabuRun> {
    let mut swaps = if params.neighborhood.swaps(state.model())? {
        Swaps::new(state)
    } else {
        None
    };
    let n = state.len();
    let mut trace = Vec::new();
    if state.is_valid() && best.as_ref().is_none_or(|b| improves(state.energy(), b.1)) {
        best = Some((state.assignment(), state.energy()));
        trace.push(TracePoint {
            iteration: trace_offset,
            best_energy: state.energy(),
            wall_ms: clock.elapsed_ms(),
        });
    }
    if n == 0 || swaps.as_ref().is_some_and(|s| s.k < 2) {
        return Ok(TabuRun { best, moves: 0, trace });
    }

    let groups = swaps.as_ref().map_or(n, |s| s.nodes());
    let tenure = params.tenure.unwrap_or_else(|| auto_tenure(groups));
    let mut tabu_until = vec![0u64; n];
    let mut moves = 0u64;
    let mut last_improvement = 0u64;
    loop {
        if max_moves.is_some_and(|m| moves >= m) {
            break;
        }
        if params.stall_limit.is_some_and(|s| moves - last_improvement >= s) {
            break;
        }
        if moves % 64 == 0 && clock.expired() {
            break;
        }

        let best_e = best.as_ref().map_or(f64::INFINITY, |b| b.1);
        let current = state.energy();
        match &mut swaps {
            Some(sw) => {
                let mut pick = Pick::new();
                for node in 0..sw.nodes() {
                    let from = sw.level[node];
                    for to in (0..sw.k).filter(|&l| l != from) {
                        let d = sw.delta(state, node, to);
                        let t = tabu_until[node * sw.k + to];
                        pick.offer((node, to), d, t <= moves || current + d < best_e, t, rng);
                    }
                }
                let (node, to) = pick.take().expect("at least two levels");
                let left = node * sw.k + sw.level[node];
                sw.apply(state, node, to);
                moves += 1;
                tabu_until[left] = moves + tenure;
            }
            None => {
                let mut pick = Pick::new();
                for i in 0..n {
                    let d = state.delta(i);
                    pick.offer(i, d, tabu_until[i] <= moves || current + d < best_e, tabu_until[i], rng);
                }
                let i = pick.take().expect("at least one bit");
                state.flip(i);
                moves += 1;
                tabu_until[i] = moves + tenure;
            }
        }

        if state.is_valid() && improves(state.energy(), best_e) {
            best = Some((state.assignment(), state.energy()));
            last_improvement = moves;
            trace.push(TracePoint {
                iteration: trace_offset + moves,
                best_energy: state.energy(),
                wall_ms: clock.elapsed_ms(),
            });
        }
    }
    Ok(TabuRun { best, moves, trace })
}

pub fn solve_tabu(req: &SolverRequest<'_>, params: &TabuParams) -> Result<Solution> {
    req.validate()?;
    let clock = Clock::new(req.budget);
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let start = if params.neighborhood.swaps(req.qubo)? {
        req.valid_start(&mut rng)
    } else {
        req.start(&mut rng)
    };
    let mut state = FlipState::new(req.qubo, &start);
    let max_moves = match req.budget {
        Budget::Iterations(m) => Some(m),
        Budget::Seconds(_) => None,
    };
    let run = run_tabu(&mut state, params, max_moves, &clock, &mut rng, None, 0)?;
    let best = run.best.map_or(start, |b| b.0);
    Ok(Solution::finish(
        req,
        "tabu",
        best,
        run.moves,
        &clock,
        run.trace,
        BTreeMap::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{generate_layered, LayeredGenSpec};
    use crate::qubo::{assemble, ModelConfig};

    #[test]
    fn swaps_escape_the_reference_state() {
        let g = generate_layered(&LayeredGenSpec::scaled_infrastructure(40, 2)).unwrap();
        let q = assemble(&g, &ModelConfig::default()).unwrap();
        let req = SolverRequest::new(&q, 0, Budget::Iterations(400)).with_reference(g.initial_scores());
        let start = q.encoding().unwrap().encode(&g.initial_scores()).unwrap();
        let swap = solve_tabu(&req, &TabuParams::default()).unwrap();
        assert!(swap.energy < q.energy(&start));
        assert!(swap.trace.windows(2).all(|w| w[1].best_energy < w[0].best_energy));
    }

    #[test]
    fn level_swap_requires_encoding() {
        let q = crate::qubo::QuboModel::from_terms(1, Default::default(), None, Vec::new()).unwrap();
        let p = TabuParams {
            neighborhood: Neighborhood::LevelSwap,
            ..TabuParams::default()
        };
        assert!(solve_tabu(&SolverRequest::new(&q, 0, Budget::Iterations(1)), &p).is_err());
    }
}
