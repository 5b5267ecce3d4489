//! Feed final scores back as initial scores until they stop changing.
//!
//!     cargo run --release --example recursive_stability -- [nodes] [iters]

use qubo_risk::analysis::{recursive_minimize, RecursionOptions};
use qubo_risk::netmodel::generate_layered;
use qubo_risk::qubo::ModelConfig;
use qubo_risk::solvers::SolverSpec;

fn main() -> qubo_risk::Result<()> {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().map_or(255, |s| s.parse().expect("node count"));
    let n_iters: usize = args.next().map_or(20, |s| s.parse().expect("iterations"));

    let g = generate_layered(&qubo_risk::cli::preset_spec(nodes, 0))?;
    let opts = RecursionOptions { n_iters, ..RecursionOptions::default() };
    for name in ["tabu", "hybrid"] {
        let t = recursive_minimize(&g, &ModelConfig::default(), &SolverSpec::from_name(name)?, None, 0, &opts)?;
        println!(
            "{name}: {:?} after {} solves (fixed point {:?}, cycle from {:?}, saturated {})",
            t.classification,
            t.iterations.len() - 1,
            t.fixed_point_iteration,
            t.cycle_start,
            t.saturated
        );
        let series: Vec<String> = t.mean_series().iter().map(|m| format!("{m:.2}")).collect();
        println!("  mean series: {}", series.join(" "));
    }
    Ok(())
}
