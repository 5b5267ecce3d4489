//! Time tabu and hybrid over growing instances and print the CSV.
//!
//!     cargo run --release --example scaling_bench -- [hybrid_seconds]

use qubo_risk::analysis::{bench_csv, scaling_bench, BenchConfig, BenchSolver};
use qubo_risk::qubo::ModelConfig;
use qubo_risk::solvers::{Budget, SolverSpec};

fn main() -> qubo_risk::Result<()> {
    let secs: f64 = std::env::args().nth(1).map_or(2.0, |s| s.parse().expect("seconds"));
    let cfg = BenchConfig {
        sizes: vec![50, 100, 200, 400],
        solvers: vec![
            BenchSolver::new(SolverSpec::from_name("tabu")?, None),
            BenchSolver::new(SolverSpec::from_name("hybrid")?, Some(Budget::Seconds(secs))),
        ],
        seeds: vec![0],
        model: ModelConfig::default(),
        parallel: false,
    };
    print!("{}", bench_csv(&scaling_bench(&cfg)?, true));
    Ok(())
}
