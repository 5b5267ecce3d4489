//! Run every solver on one instance and compare energies and mean scores.
//!
//!     cargo run --release --example solve_compare -- [nodes] [seed]

use qubo_risk::analysis::mean_std;
use qubo_risk::netmodel::generate_layered;
use qubo_risk::qubo::{assemble, ModelConfig};
use qubo_risk::solvers::{Budget, SolverRequest, SolverSpec};

fn main() -> qubo_risk::Result<()> {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().map_or(60, |s| s.parse().expect("node count"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let g = generate_layered(&qubo_risk::cli::preset_spec(nodes, seed))?;
    let q = assemble(&g, &ModelConfig::default())?;
    println!("{} nodes, {} variables, initial mean {:.3}", g.len(), q.n_vars(), mean_std(&g.initial_scores()).0);

    for name in ["tabu", "anneal", "hybrid"] {
        let spec = SolverSpec::from_name(name)?;
        let budget = match name {
            "hybrid" => Budget::Seconds(2.0),
            _ => spec.default_budget(q.n_vars()),
        };
        let req = SolverRequest::new(&q, seed, budget).with_reference(g.initial_scores());
        let sol = spec.solve(&req)?;
        let (mean, std) = mean_std(&sol.decoded_scores);
        println!(
            "{name:<7} energy {:>12.4}  mean {mean:.3}  std {std:.3}  repairs {}  {:.2}s",
            sol.energy, sol.repairs, sol.wall_time
        );
    }
    Ok(())
}
