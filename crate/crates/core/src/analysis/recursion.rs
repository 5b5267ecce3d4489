//! Recursive minimization: the final scores of one solve become the initial
//! scores of the next, with flags and edges unchanged.

use serde::{Deserialize, Serialize};

use super::mean_std;
use crate::error::{Error, Result};
use crate::netmodel::InfrastructureGraph;
use crate::qubo::{assemble_with_critical, ModelConfig, CRITICAL_THRESHOLD};
use crate::solvers::{Budget, SolverRequest, SolverSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Some iteration reproduced its input.
    Stable,
    /// No fixed point or cycle, and the mean score never fell and ended higher.
    Divergent,
    /// A score vector recurred that was not the immediate predecessor.
    Oscillating,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean: f64,
    pub std: f64,
    pub scores: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionTrace {
    pub n_iters: usize,
    /// Iteration 0 holds the starting scores.
    pub iterations: Vec<IterationRecord>,
    pub classification: Classification,
    pub fixed_point_iteration: Option<usize>,
    /// Iteration whose scores recurred, for oscillating traces.
    pub cycle_start: Option<usize>,
    /// Every final score at the top level.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecursionOptions {
    pub n_iters: usize,
    /// Keep the critical set of the original scores instead of re-deriving it
    /// from the current ones each iteration.
    pub h5_frozen: bool,
}

impl Default for RecursionOptions {
    fn default() -> Self {
        Self {
            n_iters: 20,
            h5_frozen: false,
        }
    }
}

impl RecursionTrace {
    /// Mean score after each of the `n_iters` iterations. A trace that
    /// stopped early is continued along its fixed point or cycle, which is
    /// what a deterministic solver would produce.
    pub fn mean_series(&self) -> Vec<f64> {
        self.continued(|r| r.mean)
    }

    pub fn std_series(&self) -> Vec<f64> {
        self.continued(|r| r.std)
    }

    fn continued(&self, value: impl Fn(&IterationRecord) -> f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.iterations.iter().skip(1).map(value).collect();
        let last = self.iterations.len() - 1;
        let period = match (self.fixed_point_iteration, self.cycle_start) {
            (Some(_), _) => 1,
            (None, Some(s)) => last - s,
            _ => return out,
        };
        while !out.is_empty() && out.len() < self.n_iters {
            out.push(out[out.len() - period]);
        }
        out
    }

    /// `iteration,mean,std` CSV over the full `n_iters` series.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("iteration,mean,std\n");
        for (t, (m, s)) in self.mean_series().iter().zip(self.std_series()).enumerate() {
            out.push_str(&format!("{},{m},{s}\n", t + 1));
        }
        out
    }
}

/// Runs the recursion with an arbitrary step: `step(t, g_t)` returns the
/// final scores for the graph whose initial scores are the previous result.
pub fn recursive_minimize_with(
    g: &InfrastructureGraph,
    n_iters: usize,
    top_level: u32,
    mut step: impl FnMut(usize, &InfrastructureGraph) -> Result<Vec<u32>>,
) -> Result<RecursionTrace> {
    if n_iters == 0 {
        return Err(Error::Validation("recursion needs at least one iteration".into()));
    }
    let record = |iteration: usize, scores: Vec<u32>| {
        let (mean, std) = mean_std(&scores);
        IterationRecord {
            iteration,
            mean,
            std,
            scores,
        }
    };
    let mut iterations = vec![record(0, g.initial_scores())];
    let mut fixed_point_iteration = None;
    let mut cycle_start = None;
    let mut current = g.clone();
    for t in 1..=n_iters {
        let wrap = |e: Error| Error::Iteration {
            iteration: t,
            source: Box::new(e),
        };
        let scores = step(t, &current).map_err(wrap)?;
        if scores.len() != g.len() {
            return Err(wrap(Error::Validation("step returned the wrong number of scores".into())));
        }
        let prev = &iterations[t - 1].scores;
        if &scores == prev {
            iterations.push(record(t, scores));
            fixed_point_iteration = Some(t);
            break;
        }
        if let Some(s) = iterations[..t - 1].iter().position(|r| r.scores == scores) {
            iterations.push(record(t, scores));
            cycle_start = Some(s);
            break;
        }
        current = current.with_initial_scores(&scores).map_err(wrap)?;
        iterations.push(record(t, scores));
    }

    let means: Vec<f64> = iterations.iter().map(|r| r.mean).collect();
    let classification = if fixed_point_iteration.is_some() {
        Classification::Stable
    } else if cycle_start.is_some() {
        Classification::Oscillating
    } else if means.windows(2).all(|w| w[1] >= w[0]) && means[means.len() - 1] > means[0] {
        Classification::Divergent
    } else {
        Classification::MaxIters
    };
    let saturated = iterations.last().unwrap().scores.iter().all(|&s| s == top_level);
    Ok(RecursionTrace {
        n_iters,
        iterations,
        classification,
        fixed_point_iteration,
        cycle_start,
        saturated,
    })
}

/// Recursion with a QUBO solver. Each iteration rebuilds the model from the
/// current scores and warm-starts the solver from them with the same seed.
pub fn recursive_minimize(
    g: &InfrastructureGraph,
    cfg: &ModelConfig,
    solver: &SolverSpec,
    budget: Option<Budget>,
    seed: u64,
    opts: &RecursionOptions,
) -> Result<RecursionTrace> {
    let frozen: Option<Vec<bool>> = opts.h5_frozen.then(|| {
        g.initial_scores()
            .iter()
            .map(|&s| s >= CRITICAL_THRESHOLD)
            .collect()
    });
    recursive_minimize_with(g, opts.n_iters, cfg.levels, |_, gt| {
        let q = assemble_with_critical(gt, cfg, frozen.as_deref())?;
        let budget = budget.unwrap_or_else(|| solver.default_budget(q.n_vars()));
        let req = SolverRequest::new(&q, seed, budget).with_reference(gt.initial_scores());
        Ok(solver.solve(&req)?.decoded_scores)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{EdgeSpec, NodeSpec};
    use crate::qubo::Weights;
    use std::collections::BTreeMap;

    fn line(scores: &[u32]) -> InfrastructureGraph {
        let nodes = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| NodeSpec::new(i as u32, "l", s))
            .collect();
        let edges = (1..scores.len() as u32).map(|i| EdgeSpec::new(i - 1, i, 1.0)).collect();
        InfrastructureGraph::new(vec!["l".into()], nodes, edges, BTreeMap::new()).unwrap()
    }

    #[test]
    fn identity_step_is_stable_at_one() {
        let g = line(&[1, 4, 2]);
        let t = recursive_minimize_with(&g, 20, 10, |_, gt| Ok(gt.initial_scores())).unwrap();
        assert_eq!(t.classification, Classification::Stable);
        assert_eq!(t.fixed_point_iteration, Some(1));
        assert_eq!(t.mean_series().len(), 20);
        assert_eq!(t.series_csv().lines().count(), 21);
    }

    #[test]
    fn rising_scores_diverge_and_saturate() {
        let g = line(&[1, 1]);
        let t = recursive_minimize_with(&g, 20, 10, |_, gt| {
            Ok(gt.initial_scores().iter().map(|&s| (s + 1).min(10)).collect())
        })
        .unwrap();
        // reaches 10 at iteration 9, repeats at 10
        assert_eq!(t.classification, Classification::Stable);
        assert_eq!(t.fixed_point_iteration, Some(10));
        assert!(t.saturated);

        let t = recursive_minimize_with(&g, 5, 10, |_, gt| Ok(gt.initial_scores().iter().map(|&s| s + 1).collect()))
            .unwrap();
        assert_eq!(t.classification, Classification::Divergent);
        assert!(!t.saturated);
        assert_eq!(t.iterations.len(), 6);
    }

    #[test]
    fn two_cycles_are_oscillating() {
        let g = line(&[1, 2]);
        let t = recursive_minimize_with(&g, 20, 10, |_, gt| {
            Ok(gt.initial_scores().iter().map(|&s| 3 - s).collect())
        })
        .unwrap();
        assert_eq!(t.classification, Classification::Oscillating);
        assert_eq!(t.cycle_start, Some(0));
        let series = t.mean_series();
        assert_eq!(series.len(), 20);
        assert_eq!(t.iterations[2].scores, vec![1, 2]);
        assert_eq!(t.series_csv().lines().count(), 21);
    }

    #[test]
    fn wandering_is_max_iters() {
        let g = line(&[5]);
        let seq = [6, 4, 7, 3, 8];
        let t = recursive_minimize_with(&g, 5, 10, |k, _| Ok(vec![seq[k - 1]])).unwrap();
        assert_eq!(t.classification, Classification::MaxIters);
    }

    #[test]
    fn errors_carry_the_iteration() {
        let g = line(&[5]);
        let err = recursive_minimize_with(&g, 5, 10, |k, gt| {
            if k == 3 {
                Err(Error::Validation("boom".into()))
            } else {
                Ok(vec![gt.initial_scores()[0] % 9 + 1])
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Iteration { iteration: 3, .. }));
        assert!(recursive_minimize_with(&g, 0, 10, |_, _| Ok(vec![1])).is_err());
    }

    #[test]
    fn isolated_anchor_only_node_is_stable_at_one() {
        let g = line(&[6]);
        let cfg = ModelConfig::with_weights(Weights::new(1.0, 0.0, 0.0, 0.0, 0.0));
        let spec = SolverSpec::from_name("exhaustive").unwrap();
        let t = recursive_minimize(&g, &cfg, &spec, None, 0, &RecursionOptions::default()).unwrap();
        assert_eq!(t.classification, Classification::Stable);
        assert_eq!(t.fixed_point_iteration, Some(1));
        assert_eq!(t.iterations[1].scores, vec![6]);
    }
}
