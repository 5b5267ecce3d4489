//! Interchangeable QUBO minimizers.
//!
//! Every solver takes a [`SolverRequest`] and returns a [`Solution`] whose
//! energy re-evaluates exactly on the model and whose decoded scores are
//! always valid (repaired when the raw best state was not one-hot).

mod anneal;
mod exhaustive;
mod hybrid;
pub mod remote;
mod state;
mod tabu;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use anneal::{solve_anneal, AnnealParams};
pub use exhaustive::{exhaustive_minimum, solve_exhaustive, DEFAULT_EXHAUSTIVE_CAP};
pub use hybrid::{solve_hybrid, HybridParams};
pub use tabu::{auto_tenure, solve_tabu, TabuParams};

use crate::encoding::Assignment;
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

/// How long a solver may run. For the hybrid solver `Iterations` counts
/// subproblem rounds; for annealing it counts sweeps per restart; for tabu
/// it counts single-bit moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Iterations(u64),
    Seconds(f64),
}

impl Budget {
    /// Named hybrid regimes: `min` (one subproblem round), `30s`, `180s`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "min" => Some(Budget::Iterations(1)),
            "30s" => Some(Budget::Seconds(30.0)),
            "180s" => Some(Budget::Seconds(180.0)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Budget::Seconds(s) if !(s.is_finite() && s > 0.0) => Err(Error::Validation(format!(
                "time budget must be positive, got {s}"
            ))),
            _ => Ok(()),
        }
    }
}

pub struct SolverRequest<'a> {
    pub qubo: &'a QuboModel,
    pub seed: u64,
    pub budget: Budget,
    /// Starting point; defaults to `reference_scores` encoded, else random.
    pub initial: Option<Assignment>,
    /// Previous per-node scores: the warm start and the repair fallback.
    pub reference_scores: Option<Vec<u32>>,
}

impl<'a> SolverRequest<'a> {
    pub fn new(qubo: &'a QuboModel, seed: u64, budget: Budget) -> Self {
        Self {
            qubo,
            seed,
            budget,
            initial: None,
            reference_scores: None,
        }
    }

    pub fn with_reference(mut self, scores: Vec<u32>) -> Self {
        self.reference_scores = Some(scores);
        self
    }

    pub fn with_initial(mut self, initial: Assignment) -> Self {
        self.initial = Some(initial);
        self
    }

    fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if let Some(a) = &self.initial {
            if a.len() != self.qubo.n_vars() {
                return Err(Error::Validation(format!(
                    "initial assignment has {} bits, model has {}",
                    a.len(),
                    self.qubo.n_vars()
                )));
            }
        }
        if let (Some(s), Some(enc)) = (&self.reference_scores, self.qubo.encoding()) {
            if s.len() != enc.num_nodes() {
                return Err(Error::Validation("reference scores length mismatch".into()));
            }
        }
        Ok(())
    }

    fn start(&self, rng: &mut impl rand::Rng) -> Assignment {
        if let Some(a) = &self.initial {
            return a.clone();
        }
        if let (Some(scores), Some(enc)) = (&self.reference_scores, self.qubo.encoding()) {
            let clamped: Vec<u32> = scores.iter().map(|&s| s.clamp(1, enc.levels())).collect();
            if let Ok(a) = enc.encode(&clamped) {
                return a;
            }
        }
        state::random_assignment(self.qubo, rng)
    }

    /// Like `start`, with any broken one-hot node repaired.
    fn valid_start(&self, rng: &mut impl rand::Rng) -> Assignment {
        let a = self.start(rng);
        match self.qubo.encoding() {
            Some(enc) => {
                let (scores, repairs) = enc.decode_repaired(&a, self.reference_scores.as_deref());
                if repairs > 0 {
                    enc.encode(&scores).expect("repaired scores are in range")
                } else {
                    a
                }
            }
            None => a,
        }
    }
}

/// Move set for the local-search solvers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// Level swaps on encoded models, bit flips otherwise.
    #[default]
    Auto,
    /// Single bit flips; the one-hot penalty alone steers validity.
    Bit,
    /// Move one node to another level (two bit flips). Needs an encoding.
    LevelSwap,
}

impl Neighborhood {
    pub(crate) fn swaps(self, q: &QuboModel) -> Result<bool> {
        match (self, q.encoding().is_some()) {
            (Neighborhood::Bit, _) => Ok(false),
            (Neighborhood::Auto, enc) => Ok(enc),
            (Neighborhood::LevelSwap, true) => Ok(true),
            (Neighborhood::LevelSwap, false) => Err(Error::Validation(
                "level-swap moves need a score encoding".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub best_energy: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub solver_name: String,
    pub seed: u64,
    pub energy: f64,
    pub decoded_scores: Vec<u32>,
    pub repairs: usize,
    pub iterations: u64,
    pub wall_time: f64,
    /// Solver-specific counters (subproblem rounds, remote fallbacks, ...).
    pub stats: BTreeMap<String, u64>,
    pub assignment: Assignment,
    /// Best-so-far energy at each improvement.
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
}

impl Solution {
    /// Repairs `best` when needed, re-evaluates its energy and fills in the
    /// decoded scores.
    pub(crate) fn finish(
        req: &SolverRequest<'_>,
        name: &str,
        best: Assignment,
        iterations: u64,
        clock: &Clock,
        trace: Vec<TracePoint>,
        stats: BTreeMap<String, u64>,
    ) -> Self {
        let (assignment, decoded_scores, repairs) = match req.qubo.encoding() {
            Some(enc) => {
                let (scores, repairs) = enc.decode_repaired(&best, req.reference_scores.as_deref());
                let assignment = if repairs > 0 {
                    enc.encode(&scores).expect("repaired scores are in range")
                } else {
                    best
                };
                (assignment, scores, repairs)
            }
            None => (best, Vec::new(), 0),
        };
        Self {
            solver_name: name.to_string(),
            seed: req.seed,
            energy: req.qubo.energy(&assignment),
            decoded_scores,
            repairs,
            iterations,
            wall_time: clock.elapsed_secs(),
            stats,
            assignment,
            trace,
        }
    }

    /// Solver trace as `iteration,best_energy,wall_ms` CSV.
    pub fn trace_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("iteration,best_energy,wall_ms\n");
        for p in &self.trace {
            let ms = if with_timing { p.wall_ms } else { 0.0 };
            out.push_str(&format!("{},{},{}\n", p.iteration, p.best_energy, ms));
        }
        out
    }
}

/// Wall clock with an optional deadline.
pub(crate) struct Clock {
    start: Instant,
    deadline: Option<Instant>,
}

impl Clock {
    pub(crate) fn new(budget: Budget) -> Self {
        let start = Instant::now();
        let deadline = match budget {
            Budget::Seconds(s) => Some(start + Duration::from_secs_f64(s)),
            Budget::Iterations(_) => None,
        };
        Self { start, deadline }
    }

    pub(crate) fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    pub(crate) fn elapsed_secs(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// `a < b` by more than rounding noise.
#[inline]
pub(crate) fn improves(a: f64, b: f64) -> bool {
    a < b - 1e-9 * b.abs().max(1.0)
}

/// A solver choice with its parameters, as named in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    Exhaustive {
        #[serde(default = "default_cap")]
        cap: usize,
    },
    Tabu(#[serde(default)] TabuParams),
    Anneal(#[serde(default)] AnnealParams),
    Hybrid(#[serde(default)] HybridParams),
}

fn default_cap() -> usize {
    DEFAULT_EXHAUSTIVE_CAP
}

impl SolverSpec {
    /// Default parameters for a solver name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "exhaustive" => Ok(SolverSpec::Exhaustive { cap: DEFAULT_EXHAUSTIVE_CAP }),
            "tabu" => Ok(SolverSpec::Tabu(TabuParams::default())),
            "anneal" => Ok(SolverSpec::Anneal(AnnealParams::default())),
            "hybrid" => Ok(SolverSpec::Hybrid(HybridParams::default())),
            other => Err(Error::UnknownSolver(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Exhaustive { .. } => "exhaustive",
            SolverSpec::Tabu(_) => "tabu",
            SolverSpec::Anneal(_) => "anneal",
            SolverSpec::Hybrid(_) => "hybrid",
        }
    }

    /// The budget used when a run does not specify one.
    pub fn default_budget(&self, n_vars: usize) -> Budget {
        match self {
            SolverSpec::Exhaustive { .. } => Budget::Iterations(1 << 24),
            SolverSpec::Tabu(_) => Budget::Iterations(tabu::default_iterations(n_vars)),
            SolverSpec::Anneal(p) => Budget::Iterations(p.sweeps),
            SolverSpec::Hybrid(_) => Budget::preset("min").unwrap(),
        }
    }

    pub fn solve(&self, req: &SolverRequest<'_>) -> Result<Solution> {
        match self {
            SolverSpec::Exhaustive { cap } => solve_exhaustive(req, *cap),
            SolverSpec::Tabu(p) => solve_tabu(req, p),
            SolverSpec::Anneal(p) => solve_anneal(req, p),
            SolverSpec::Hybrid(p) => solve_hybrid(req, p),
        }
    }
}
