//! A single high-risk node among low-risk neighbours: the solve pulls it
//! down while its neighbourhood rises.
//!
//!     cargo run --release --example exception_absorption -- [seed]

use qubo_risk::analysis::transition_report;
use qubo_risk::netmodel::{exception_id, generate_layered, LayeredGenSpec};
use qubo_risk::qubo::{assemble, ModelConfig};
use qubo_risk::solvers::{solve_tabu, Budget, SolverRequest, TabuParams};

fn main() -> qubo_risk::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let g = generate_layered(&LayeredGenSpec::infrastructure_255(seed))?;
    let q = assemble(&g, &ModelConfig::default())?;
    let req = SolverRequest::new(&q, seed, Budget::Iterations(20 * q.n_vars() as u64 + 1000))
        .with_reference(g.initial_scores());
    let sol = solve_tabu(&req, &TabuParams::default())?;

    let id = exception_id(&g).expect("the preset has an exception");
    let i = g.node_index(id).unwrap();
    let adj = g.adjacency();
    let nbrs = &adj[i];
    let mean = |s: &[u32]| nbrs.iter().map(|&j| f64::from(s[j])).sum::<f64>() / nbrs.len() as f64;
    let initial = g.initial_scores();
    println!("exception node {id}: {} -> {}", initial[i], sol.decoded_scores[i]);
    println!(
        "{} neighbours: mean {:.3} -> {:.3}",
        nbrs.len(),
        mean(&initial),
        mean(&sol.decoded_scores)
    );

    let report = transition_report(&g, &sol)?;
    println!("\n{}", report.summary_csv());
    Ok(())
}
