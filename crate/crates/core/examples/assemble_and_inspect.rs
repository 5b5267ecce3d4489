//! Build the QUBO for a small graph and show where its energy comes from.

use std::collections::BTreeMap;

use qubo_risk::netmodel::{EdgeSpec, InfrastructureGraph, NodeSpec};
use qubo_risk::qubo::{assemble, export_qubo, ModelConfig};

fn main() -> qubo_risk::Result<()> {
    let mut web = NodeSpec::new(1, "dmz", 6);
    web.internet_flag = true;
    let g = InfrastructureGraph::new(
        vec!["dmz".into(), "core".into()],
        vec![web, NodeSpec::new(2, "core", 2), NodeSpec::new(3, "core", 3)],
        vec![EdgeSpec::new(1, 2, 0.8), EdgeSpec::new(2, 3, 0.5)],
        BTreeMap::new(),
    )?;

    let q = assemble(&g, &ModelConfig::default().with_levels(4))?;
    let enc = q.encoding().expect("assembled models carry their encoding");
    println!(
        "{} variables, {} linear and {} quadratic terms, penalty {:.1}",
        q.n_vars(),
        q.linear().len(),
        q.quadratic().len(),
        enc.penalty()
    );
    println!("{:<8} {:>8} {:>12} {:>12} {:>12}", "term", "weight", "offset", "linear", "quadratic");
    for p in q.provenance() {
        println!(
            "{:<8} {:>8.3} {:>12.3} {:>12.3} {:>12.3}",
            p.term, p.weight, p.offset, p.linear_sum, p.quadratic_sum
        );
    }

    for scores in [[4, 2, 3], [3, 3, 3], [1, 1, 1]] {
        let a = enc.encode(&scores)?;
        println!("E{scores:?} = {:.3}", q.energy(&a));
    }

    let text = String::from_utf8(export_qubo(&q)).expect("text format");
    println!("\nfirst lines of the exported model:");
    for line in text.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
