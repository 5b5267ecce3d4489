//! Shared helpers for the integration tests: a direct evaluator of the risk
//! Hamiltonian written from its definition, and small random instances.

#![allow(dead_code)]

use std::collections::BTreeMap;

use qubo_risk::netmodel::{EdgeSpec, InfrastructureGraph, NodeSpec};
use qubo_risk::qubo::Weights;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Energy of final scores `fs` evaluated term by term, straight from the
/// definitions. Shares no code with the assembler.
pub fn direct_energy(g: &InfrastructureGraph, fs: &[u32], w: &Weights, all_pairs: bool) -> f64 {
    let n = g.len();
    let is: Vec<f64> = g.nodes().iter().map(|n| f64::from(n.initial_score)).collect();
    let f: Vec<f64> = fs.iter().map(|&s| f64::from(s)).collect();
    let pos = |id: u32| g.nodes().iter().position(|n| n.id == id).unwrap();
    let edges: Vec<(usize, usize, f64)> = g.edges().iter().map(|e| (pos(e.a), pos(e.b), e.strength)).collect();
    let mut nbrs = vec![Vec::new(); n];
    for &(a, b, _) in &edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }

    let h1: f64 = (0..n).map(|i| is[i] * (is[i] - f[i]).powi(2)).sum();
    let h2: f64 = -edges.iter().map(|&(a, b, s)| s * f[a] * f[b]).sum::<f64>();
    let h3: f64 = (0..n)
        .filter(|&i| !nbrs[i].is_empty())
        .map(|i| {
            let avg = nbrs[i].iter().map(|&j| f[j]).sum::<f64>() / nbrs[i].len() as f64;
            (f[i] - avg).powi(2)
        })
        .sum();
    let flags: Vec<f64> = g
        .nodes()
        .iter()
        .map(|n| f64::from(u8::from(n.no_update_flag) + u8::from(n.internet_flag)))
        .collect();
    let pairs: Vec<(usize, usize)> = if all_pairs {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        edges.iter().map(|&(a, b, _)| (a, b)).collect()
    };
    let h4: f64 = -pairs.iter().map(|&(i, j)| (flags[i] + flags[j]) * (f[i] + f[j])).sum::<f64>();
    let h5: f64 = -(0..n).filter(|&i| is[i] >= 7.0).map(|i| f[i]).sum::<f64>();

    w.anchor * h1 + w.connectivity * h2 + w.neighbor * h3 + w.exposure * h4 + w.critical * h5
}

/// Every score vector in `{1..=k}^n`.
pub fn all_scores(n: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..=k).map(move |s| {
                    let mut v = v.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

/// Random graph with `n` nodes: random initial scores in `[1,10]`, random
/// flags, each pair linked with probability one half, strengths in `(0, 2]`.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> InfrastructureGraph {
    let nodes = (0..n)
        .map(|i| {
            let mut node = NodeSpec::new(i as u32 * 3 + 1, if i % 2 == 0 { "a" } else { "b" }, rng.gen_range(1..=10));
            node.no_update_flag = rng.gen_bool(0.3);
            node.internet_flag = rng.gen_bool(0.3);
            node
        })
        .collect::<Vec<_>>();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                edges.push(EdgeSpec::new(nodes[i].id, nodes[j].id, rng.gen_range(0.05..=2.0)));
            }
        }
    }
    InfrastructureGraph::new(vec!["a".into(), "b".into()], nodes, edges, BTreeMap::new()).unwrap()
}

/// Random non-negative weights with the given upper bound.
pub fn random_weights(rng: &mut impl Rng, max: f64) -> Weights {
    let mut w = || rng.gen_range(0.0..=max);
    Weights::new(w(), w(), w(), w(), w())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Starts a local HTTP sampler. `reply(request_index, model)` returns the
/// status code and JSON body for each request. Returns the endpoint URL.
pub fn spawn_sampler<F>(reply: F) -> String
where
    F: Fn(usize, &qubo_risk::qubo::QuboModel) -> (u16, String) + Send + 'static,
{
    use std::io::{BufRead, BufReader, Read, Write};

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for (k, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0; len];
            if reader.read_exact(&mut body).is_err() {
                continue;
            }
            let q = qubo_risk::qubo::import_qubo(&body).expect("solver sends valid models");
            let (status, json) = reply(k, &q);
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{json}",
                json.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    format!("http://{addr}/sample")
}

/// JSON body with one sample per score vector, each with the given energy
/// offset added to its true energy.
pub fn sample_body(q: &qubo_risk::qubo::QuboModel, levels: &[u32], error: f64) -> String {
    let enc = q.encoding().expect("fragment has an encoding");
    let a = enc.encode(&vec![levels[0]; enc.num_nodes()]).unwrap();
    let bits: Vec<String> = a.bits().iter().map(u8::to_string).collect();
    format!(r#"{{"samples": [[{}]], "energies": [{}]}}"#, bits.join(","), q.energy(&a) + error)
}
