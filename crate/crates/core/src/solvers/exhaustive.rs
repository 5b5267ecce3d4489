use std::collections::BTreeMap;

use super::state::FlipState;
use super::{Clock, Solution, SolverRequest, TracePoint};
use crate::encoding::Assignment;
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 24;

/// Global minimum over all `2^n` assignments, walked in Gray-code order so
/// each step is a single flip. Ties keep the first state reached.
pub fn exhaustive_minimum(q: &QuboModel, cap: usize) -> Result<(Assignment, f64)> {
    let n = q.n_vars();
    if n > cap || n >= usize::BITS as usize {
        return Err(Error::TooLarge { n_vars: n, cap });
    }
    let zero = Assignment::zeros(n);
    let mut state = FlipState::new(q, &zero);
    let mut best = (zero, state.energy());
    for k in 1..(1usize << n) {
        state.flip(k.trailing_zeros() as usize);
        if state.energy() < best.1 {
            best = (state.assignment(), state.energy());
        }
    }
    // re-evaluate to shed incremental rounding
    let e = q.energy(&best.0);
    Ok((best.0, e))
}

pub fn solve_exhaustive(req: &SolverRequest<'_>, cap: usize) -> Result<Solution> {
    req.validate()?;
    let clock = Clock::new(req.budget);
    let (best, energy) = exhaustive_minimum(req.qubo, cap)?;
    let iterations = 1u64 << req.qubo.n_vars();
    let trace = vec![TracePoint {
        iteration: iterations,
        best_energy: energy,
        wall_ms: clock.elapsed_ms(),
    }];
    Ok(Solution::finish(
        req,
        "exhaustive",
        best,
        iterations,
        &clock,
        trace,
        BTreeMap::new(),
    ))
}
