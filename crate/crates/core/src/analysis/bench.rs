//! Scaling benchmark: wall time and mean final score per instance size and
//! solver, with the deviation from the tabu reference on the same instance.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mean_std;
use crate::error::{Error, Result};
use crate::netmodel::{generate_layered, LayeredGenSpec};
use crate::qubo::{assemble, ModelConfig};
use crate::solvers::{Budget, SolverRequest, SolverSpec};

/// Name of the solver every other one is compared against.
pub const REFERENCE_SOLVER: &str = "tabu";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSolver {
    pub solver: SolverSpec,
    /// Defaults to the solver's own default budget for the instance.
    #[serde(default)]
    pub budget: Option<Budget>,
}

impl BenchSolver {
    pub fn new(solver: SolverSpec, budget: Option<Budget>) -> Self {
        Self { solver, budget }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub solvers: Vec<BenchSolver>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub model: ModelConfig,
    /// Run instances on the rayon pool. Timings are less reliable in parallel.
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n_nodes: usize,
    pub solver_name: String,
    pub seed: u64,
    pub wall_time: f64,
    pub energy: f64,
    pub mean_initial: f64,
    pub mean_final: f64,
    /// Percent deviation of `mean_final` from the tabu run on the same
    /// instance; absent when tabu was not part of the run.
    pub deviation_pct: Option<f64>,
}

fn run_one(cfg: &BenchConfig, n: usize, seed: u64, s: &BenchSolver) -> Result<BenchRecord> {
    let g = generate_layered(&LayeredGenSpec::scaled_infrastructure(n, seed))?;
    let q = assemble(&g, &cfg.model)?;
    let budget = s.budget.unwrap_or_else(|| s.solver.default_budget(q.n_vars()));
    let req = SolverRequest::new(&q, seed, budget).with_reference(g.initial_scores());
    let start = Instant::now();
    let sol = s.solver.solve(&req)?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(BenchRecord {
        n_nodes: g.len(),
        solver_name: sol.solver_name.clone(),
        seed,
        wall_time,
        energy: sol.energy,
        mean_initial: mean_std(&g.initial_scores()).0,
        mean_final: mean_std(&sol.decoded_scores).0,
        deviation_pct: None,
    })
}

/// Runs every (size, solver, seed) combination on the scaled layered
/// generator and returns records sorted by `(size, solver, seed)`.
pub fn scaling_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.sizes.is_empty() || cfg.solvers.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Validation("bench needs at least one size, solver and seed".into()));
    }
    let jobs: Vec<(usize, u64, &BenchSolver)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| {
            cfg.seeds
                .iter()
                .flat_map(move |&seed| cfg.solvers.iter().map(move |s| (n, seed, s)))
        })
        .collect();
    let results: Vec<Result<BenchRecord>> = if cfg.parallel {
        jobs.par_iter().map(|&(n, seed, s)| run_one(cfg, n, seed, s)).collect()
    } else {
        jobs.iter().map(|&(n, seed, s)| run_one(cfg, n, seed, s)).collect()
    };
    let mut records = results.into_iter().collect::<Result<Vec<_>>>()?;

    for i in 0..records.len() {
        let (n, seed) = (records[i].n_nodes, records[i].seed);
        let reference = records
            .iter()
            .find(|r| r.n_nodes == n && r.seed == seed && r.solver_name == REFERENCE_SOLVER)
            .map(|r| r.mean_final);
        records[i].deviation_pct = reference.map(|m| {
            if records[i].solver_name == REFERENCE_SOLVER {
                0.0
            } else {
                (records[i].mean_final - m) / m * 100.0
            }
        });
    }
    records.sort_by(|a, b| {
        (a.n_nodes, &a.solver_name, a.seed).cmp(&(b.n_nodes, &b.solver_name, b.seed))
    });
    Ok(records)
}

/// `n_nodes,solver,seed,wall_time,energy,mean_initial,mean_final,deviation_pct`.
/// Wall times are written as 0 unless `with_timing`, so runs can be diffed.
pub fn bench_csv(records: &[BenchRecord], with_timing: bool) -> String {
    let mut out = String::from("n_nodes,solver,seed,wall_time,energy,mean_initial,mean_final,deviation_pct\n");
    for r in records {
        let t = if with_timing { r.wall_time } else { 0.0 };
        let dev = r.deviation_pct.map_or(String::new(), |d| d.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{t},{},{},{},{dev}",
            r.n_nodes, r.solver_name, r.seed, r.energy, r.mean_initial, r.mean_final
        );
    }
    out
}
