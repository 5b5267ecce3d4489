//! Multi-restart simulated annealing with single-bit Metropolis moves and a
//! geometric temperature schedule. Stands in for a sampling annealer: each
//! restart is one "shot" and the best shot wins.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{random_assignment, FlipState, Swaps};
use super::{improves, Budget, Clock, Neighborhood, Solution, SolverRequest, TracePoint};
use crate::encoding::Assignment;
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealParams {
    /// Sweeps per restart when the budget is time-based.
    pub sweeps: u64,
    pub restarts: u64,
    /// Initial temperature; `None` uses the largest coefficient magnitude.
    pub t_start: Option<f64>,
    pub t_end: f64,
    /// Run restarts on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    pub neighborhood: Neighborhood,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            restarts: 20,
            t_start: None,
            t_end: 1e-3,
            parallel: true,
            neighborhood: Neighborhood::Auto,
        }
    }
}

struct Shot {
    best: Option<(Assignment, f64)>,
    last: Assignment,
    sweeps: u64,
    /// `(sweep, energy)` at each new best within the shot.
    improvements: Vec<(u64, f64, f64)>,
}

/// Temperature for sweep `k` of `sweeps`: geometric from `t0` to `t1`, or
/// linear when one end is zero.
pub(crate) fn temperature(t0: f64, t1: f64, k: u64, sweeps: u64) -> f64 {
    if sweeps <= 1 {
        return t1;
    }
    let frac = k as f64 / (sweeps - 1) as f64;
    if t0 > 0.0 && t1 > 0.0 {
        t0 * (t1 / t0).powf(frac)
    } else {
        t0 + (t1 - t0) * frac
    }
}

fn accept(d: f64, t: f64, rng: &mut ChaCha8Rng) -> bool {
    if t > 0.0 {
        d <= 0.0 || rng.gen::<f64>() < (-d / t).exp()
    } else {
        d < 0.0
    }
}

fn run_shot(
    q: &QuboModel,
    start: &Assignment,
    sweeps: u64,
    (t0, t1): (f64, f64),
    swaps: bool,
    rng: &mut ChaCha8Rng,
    clock: &Clock,
) -> Shot {
    let mut state = FlipState::new(q, start);
    let mut swaps = if swaps { Swaps::new(&state) } else { None };
    let n = state.len();
    let mut best = None;
    let mut improvements = Vec::new();
    let mut consider = |state: &FlipState<'_>, best: &mut Option<(Assignment, f64)>, sweep: u64| {
        if state.is_valid() && best.as_ref().is_none_or(|b: &(Assignment, f64)| improves(state.energy(), b.1)) {
            *best = Some((state.assignment(), state.energy()));
            improvements.push((sweep, state.energy(), clock.elapsed_ms()));
        }
    };
    consider(&state, &mut best, 0);
    let mut done = 0;
    for k in 0..sweeps {
        if clock.expired() {
            break;
        }
        let t = temperature(t0, t1, k, sweeps);
        match &mut swaps {
            Some(sw) if sw.k > 1 => {
                for node in 0..sw.nodes() {
                    let mut to = rng.gen_range(0..sw.k - 1);
                    if to >= sw.level[node] {
                        to += 1;
                    }
                    let d = sw.delta(&state, node, to);
                    if accept(d, t, rng) {
                        sw.apply(&mut state, node, to);
                        if d < 0.0 {
                            consider(&state, &mut best, k + 1);
                        }
                    }
                }
            }
            Some(_) => {}
            None => {
                for i in 0..n {
                    let d = state.delta(i);
                    if accept(d, t, rng) {
                        state.flip(i);
                        if d < 0.0 {
                            consider(&state, &mut best, k + 1);
                        }
                    }
                }
            }
        }
        done = k + 1;
    }
    Shot {
        best,
        last: state.assignment(),
        sweeps: done,
        improvements,
    }
}

pub fn solve_anneal(req: &SolverRequest<'_>, params: &AnnealParams) -> Result<Solution> {
    req.validate()?;
    if params.restarts == 0 {
        return Err(Error::Validation("annealing needs at least one restart".into()));
    }
    let t0 = params.t_start.unwrap_or_else(|| req.qubo.max_abs_coefficient());
    let t1 = params.t_end;
    if !(t0 >= 0.0 && t1 >= 0.0 && t0.is_finite() && t1.is_finite()) {
        return Err(Error::Validation("temperatures must be finite and non-negative".into()));
    }
    let sweeps = match req.budget {
        Budget::Iterations(s) => s,
        Budget::Seconds(_) => params.sweeps,
    };
    let clock = Clock::new(req.budget);
    let swaps = params.neighborhood.swaps(req.qubo)?;

    // restart r draws from stream r of the seed, so shots are independent of scheduling
    let shot = |r: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        rng.set_stream(r);
        let start = match (r == 0 || req.initial.is_some(), swaps) {
            (true, true) => req.valid_start(&mut rng),
            (true, false) => req.start(&mut rng),
            (false, _) => random_assignment(req.qubo, &mut rng),
        };
        run_shot(req.qubo, &start, sweeps, (t0, t1), swaps, &mut rng, &clock)
    };
    let shots: Vec<Shot> = if params.parallel {
        (0..params.restarts).into_par_iter().map(shot).collect()
    } else {
        (0..params.restarts).map(shot).collect()
    };

    let mut best: Option<(Assignment, f64)> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    for s in &shots {
        for &(sweep, e, ms) in &s.improvements {
            if best.as_ref().is_none_or(|b| improves(e, b.1)) && trace.last().is_none_or(|p: &TracePoint| improves(e, p.best_energy)) {
                trace.push(TracePoint {
                    iteration: iterations + sweep,
                    best_energy: e,
                    wall_ms: ms,
                });
            }
        }
        iterations += s.sweeps;
        if let Some((a, e)) = &s.best {
            if best.as_ref().is_none_or(|b| improves(*e, b.1)) {
                best = Some((a.clone(), *e));
            }
        }
    }
    let best = best.map_or_else(|| shots[0].last.clone(), |b| b.0);
    let mut stats = BTreeMap::new();
    stats.insert("restarts".into(), params.restarts);
    Ok(Solution::finish(req, "anneal", best, iterations, &clock, trace, stats))
}
