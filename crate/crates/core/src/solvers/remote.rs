//! Client for an external QUBO sampler reachable over HTTP.
//!
//! The request body is the fragment in the text QUBO format. The service
//! answers with `{"samples": [[0,1,...], ...], "energies": [...]}`. Every
//! returned energy is checked against a local evaluation and samples that
//! disagree are dropped.

use std::time::Duration;

use serde::Deserialize;

use crate::encoding::Assignment;
use crate::qubo::{export_qubo, QuboModel};

/// Environment variable read by the CLI for a default endpoint.
pub const SAMPLER_URL_ENV: &str = "QUBO_RISK_SAMPLER_URL";

#[derive(Debug, thiserror::Error)]
pub enum RemoteError {
    #[error("sampler request failed: {0}")]
    Network(String),
    #[error("sampler returned HTTP {0}")]
    Status(u16),
    #[error("malformed sampler response: {0}")]
    Malformed(String),
    #[error("all {0} returned samples failed local energy verification")]
    AllRejected(usize),
}

#[derive(Debug, Clone)]
pub struct RemoteSampler {
    endpoint: String,
    client: reqwest::blocking::Client,
}

/// Verified samples plus how many were thrown away.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub samples: Vec<(Assignment, f64)>,
    pub discarded: usize,
}

#[derive(Deserialize)]
struct Response {
    samples: Vec<Vec<u8>>,
    energies: Vec<f64>,
}

impl RemoteSampler {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, RemoteError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RemoteError::Network(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            client,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn sample(&self, fragment: &QuboModel) -> Result<SampleBatch, RemoteError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .header(reqwest::header::CONTENT_TYPE, "text/plain")
            .body(export_qubo(fragment))
            .send()
            .map_err(|e| RemoteError::Network(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(RemoteError::Status(status.as_u16()));
        }
        let body = resp.bytes().map_err(|e| RemoteError::Network(e.to_string()))?;
        verify_response(fragment, &body)
    }
}

/// Parses a sampler response and keeps the samples whose reported energy
/// matches the local one.
pub fn verify_response(fragment: &QuboModel, body: &[u8]) -> Result<SampleBatch, RemoteError> {
    let resp: Response =
        serde_json::from_slice(body).map_err(|e| RemoteError::Malformed(e.to_string()))?;
    if resp.samples.len() != resp.energies.len() {
        return Err(RemoteError::Malformed(format!(
            "{} samples but {} energies",
            resp.samples.len(),
            resp.energies.len()
        )));
    }
    if resp.samples.is_empty() {
        return Err(RemoteError::Malformed("no samples".into()));
    }
    let n = fragment.n_vars();
    let mut samples = Vec::new();
    let mut discarded = 0;
    for (k, (bits, reported)) in resp.samples.into_iter().zip(resp.energies).enumerate() {
        if bits.len() != n {
            return Err(RemoteError::Malformed(format!(
                "samples[{k}] has {} bits, expected {n}",
                bits.len()
            )));
        }
        let a = Assignment::from_bits(bits)
            .map_err(|_| RemoteError::Malformed(format!("samples[{k}] is not binary")))?;
        let local = fragment.energy(&a);
        if reported.is_finite() && (local - reported).abs() <= 1e-6 * local.abs().max(1.0) {
            samples.push((a, local));
        } else {
            discarded += 1;
        }
    }
    if samples.is_empty() {
        return Err(RemoteError::AllRejected(discarded));
    }
    Ok(SampleBatch { samples, discarded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::SparseTerms;

    fn fragment() -> QuboModel {
        let mut t = SparseTerms::default();
        t.add_linear(0, -1.0);
        t.add_quadratic(0, 1, 2.0);
        QuboModel::from_terms(2, t, None, Vec::new()).unwrap()
    }

    #[test]
    fn keeps_only_matching_energies() {
        let body = br#"{"samples":[[1,0],[1,1],[0,0]],"energies":[-1.0,5.0,0.0]}"#;
        let b = verify_response(&fragment(), body).unwrap();
        assert_eq!(b.samples.len(), 2);
        assert_eq!(b.discarded, 1);
    }

    #[test]
    fn rejects_bad_shapes() {
        let q = fragment();
        assert!(matches!(
            verify_response(&q, br#"{"samples":[[1]],"energies":[0]}"#),
            Err(RemoteError::Malformed(_))
        ));
        assert!(matches!(
            verify_response(&q, br#"{"samples":[[1,2]],"energies":[0]}"#),
            Err(RemoteError::Malformed(_))
        ));
        assert!(matches!(
            verify_response(&q, br#"{"samples":[[1,1]],"energies":[0]}"#),
            Err(RemoteError::AllRejected(1))
        ));
        assert!(matches!(verify_response(&q, b"nope"), Err(RemoteError::Malformed(_))));
    }
}
