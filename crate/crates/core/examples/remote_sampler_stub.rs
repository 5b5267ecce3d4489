//! The hybrid solver with a remote sampler: a local stub answers the first
//! request with a sample, then fails, and the solver falls back to local
//! enumeration for the remaining rounds.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use qubo_risk::netmodel::generate_layered;
use qubo_risk::qubo::{assemble, import_qubo, ModelConfig};
use qubo_risk::solvers::{solve_hybrid, Budget, HybridParams, SolverRequest};

/// Answers the first request with every node at level 1, then fails every
/// later one with a 503.
fn spawn_stub() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for (served, stream) in listener.incoming().enumerate() {
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
            let _ = reader.read_exact(&mut body);
            let response = if served == 0 {
                let q = import_qubo(&body).expect("solver sends valid models");
                let enc = q.encoding().expect("fragments keep their encoding");
                let a = enc.encode(&vec![1; enc.num_nodes()]).unwrap();
                let bits: Vec<String> = a.bits().iter().map(u8::to_string).collect();
                let json = format!(r#"{{"samples": [[{}]], "energies": [{}]}}"#, bits.join(","), q.energy(&a));
                format!("HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{json}", json.len())
            } else {
                "HTTP/1.1 503 Service Unavailable\r\nContent-Length: 0\r\n\r\n".to_string()
            };
            let _ = stream.write_all(response.as_bytes());
        }
    });
    format!("http://{addr}/sample")
}

fn main() -> qubo_risk::Result<()> {
    let g = generate_layered(&qubo_risk::cli::preset_spec(40, 1))?;
    let q = assemble(&g, &ModelConfig::default())?;
    let params = HybridParams {
        remote_endpoint: Some(spawn_stub()),
        remote_timeout_secs: 2.0,
        ..HybridParams::default()
    };
    let req = SolverRequest::new(&q, 1, Budget::Iterations(4)).with_reference(g.initial_scores());
    let sol = solve_hybrid(&req, &params)?;
    println!("energy {:.4} after {} rounds", sol.energy, sol.iterations);
    for (k, v) in &sol.stats {
        println!("  {k:<16} {v}");
    }
    Ok(())
}
