//! Decomposition solver.
//!
//! Each round picks a small cluster of coupled nodes around the most
//! frustrated node, solves the cluster exactly with everything else clamped
//! to the incumbent, and follows up with a short tabu segment. When the
//! cluster optimum does not improve, its runner-up is applied instead as a
//! perturbation. Cluster subproblems can be sent to a remote sampler; any
//! remote failure falls back to the exact local solve.
//!
//! Nodes are handled as whole one-hot groups so every subproblem state is a
//! valid score assignment. Raw QUBOs without an encoding use one bit per group.

use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::remote::{RemoteError, RemoteSampler};
use super::state::FlipState;
use super::tabu::{run_tabu, TabuParams};
use super::{improves, Budget, Clock, Neighborhood, Solution, SolverRequest, TracePoint};
use crate::encoding::{Assignment, ScoreEncoding};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

const MAX_SUBPROBLEM_BITS: u32 = 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridParams {
    /// Subproblem size in bits of search space: a cluster of `m` nodes with
    /// `K` options each is kept under `2^subproblem_bits` states.
    pub subproblem_bits: u32,
    /// Tabu moves after each subproblem; `None` uses one move per variable.
    pub tabu_moves: Option<u64>,
    /// Tenure of the tabu segments; `None` picks it from the model size.
    pub tenure: Option<u64>,
    pub neighborhood: Neighborhood,
    pub remote_endpoint: Option<String>,
    pub remote_timeout_secs: f64,
}

impl Default for HybridParams {
    fn default() -> Self {
        Self {
            subproblem_bits: 20,
            tabu_moves: None,
            tenure: None,
            neighborhood: Neighborhood::Auto,
            remote_endpoint: None,
            remote_timeout_secs: 10.0,
        }
    }
}

impl HybridParams {
    /// Nodes per cluster for groups with `options` states each.
    pub fn cluster_size(&self, options: usize) -> usize {
        let per = (options.max(2) as f64).log2();
        ((f64::from(self.subproblem_bits) / per).floor() as usize).max(1)
    }
}

/// How variables are grouped into nodes.
#[derive(Clone, Copy)]
struct Layout {
    onehot: bool,
    size: usize,
    count: usize,
}

impl Layout {
    fn of(q: &QuboModel) -> Self {
        match q.encoding() {
            Some(enc) => Layout {
                onehot: true,
                size: enc.levels() as usize,
                count: enc.num_nodes(),
            },
            None => Layout {
                onehot: false,
                size: 1,
                count: q.n_vars(),
            },
        }
    }

    fn options(&self) -> usize {
        if self.onehot {
            self.size
        } else {
            2
        }
    }

    /// The variable that is set when group `g` takes option `o`.
    fn var(&self, g: usize, o: usize) -> Option<usize> {
        if self.onehot {
            Some(g * self.size + o)
        } else if o == 1 {
            Some(g)
        } else {
            None
        }
    }

    fn group_of(&self, v: usize) -> usize {
        v / self.size
    }

    fn option_of(&self, v: usize) -> usize {
        if self.onehot {
            v % self.size
        } else {
            1
        }
    }

    /// Current option of group `g`; `None` when a one-hot group is broken.
    fn current(&self, bits: &[u8], g: usize) -> Option<usize> {
        if !self.onehot {
            return Some(usize::from(bits[g]));
        }
        let span = &bits[g * self.size..(g + 1) * self.size];
        let mut found = None;
        for (o, &b) in span.iter().enumerate() {
            if b == 1 {
                if found.is_some() {
                    return None;
                }
                found = Some(o);
            }
        }
        found
    }
}

/// Energy change when group `g` moves from option `from` to `to`.
fn move_delta(state: &FlipState<'_>, q: &QuboModel, lay: &Layout, g: usize, from: usize, to: usize) -> f64 {
    match (lay.var(g, from), lay.var(g, to)) {
        (Some(v), Some(w)) => state.field(w) - state.field(v) - q.quadratic_coefficient(v, w),
        (Some(v), None) => -state.field(v),
        (None, Some(w)) => state.field(w),
        (None, None) => 0.0,
    }
}

/// Most negative single-group move for each group. Broken groups rank first.
fn frustration(state: &FlipState<'_>, q: &QuboModel, lay: &Layout) -> Vec<f64> {
    (0..lay.count)
        .map(|g| match lay.current(state.bits(), g) {
            None => f64::NEG_INFINITY,
            Some(cur) => (0..lay.options())
                .filter(|&o| o != cur)
                .map(|o| move_delta(state, q, lay, g, cur, o))
                .fold(f64::INFINITY, f64::min),
        })
        .collect()
}

/// Total-order key for a float where lower sorts first.
fn key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

/// Picks a seed and grows a cluster through coupled groups, most frustrated
/// first; tops up with the next most frustrated groups when the coupled
/// neighbourhood runs out.
fn pick_cluster(
    q: &QuboModel,
    lay: &Layout,
    frus: &[f64],
    m: usize,
    recent: &VecDeque<usize>,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let tiebreak: Vec<u64> = (0..lay.count).map(|_| rng.gen()).collect();
    let mut order: Vec<usize> = (0..lay.count).collect();
    order.sort_by_key(|&g| (key(frus[g]), tiebreak[g]));
    let seed = order
        .iter()
        .copied()
        .find(|g| !recent.contains(g))
        .unwrap_or(order[0]);

    let mut taken = vec![false; lay.count];
    let mut cluster = Vec::with_capacity(m);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((key(frus[seed]), tiebreak[seed], seed)));
    while cluster.len() < m {
        let Some(Reverse((_, _, g))) = heap.pop() else {
            match order.iter().copied().find(|&g| !taken[g]) {
                Some(g) => {
                    heap.push(Reverse((key(frus[g]), tiebreak[g], g)));
                    continue;
                }
                None => break,
            }
        };
        if taken[g] {
            continue;
        }
        taken[g] = true;
        cluster.push(g);
        for o in 0..lay.options() {
            let Some(v) = lay.var(g, o) else { continue };
            for (u, _) in q.csr().row(v) {
                let h = lay.group_of(u);
                if !taken[h] {
                    heap.push(Reverse((key(frus[h]), tiebreak[h], h)));
                }
            }
        }
    }
    cluster
}

/// Cluster energy as a function of the cluster options, other variables
/// clamped: `sum_k h[k][o_k] + sum_{k<l} J[k,l][o_k][o_l]`.
struct Subproblem {
    m: usize,
    r: usize,
    h: Vec<f64>,
    /// `J[k,l]` for `k < l`, stored at `k * m + l` as an `r x r` block.
    j: Vec<Vec<f64>>,
}

impl Subproblem {
    fn build(state: &FlipState<'_>, q: &QuboModel, lay: &Layout, cluster: &[usize], pos: &mut [usize]) -> Self {
        let m = cluster.len();
        let r = lay.options();
        for (k, &g) in cluster.iter().enumerate() {
            pos[g] = k;
        }
        let mut h = vec![0.0; m * r];
        let mut j = vec![Vec::new(); m * m];
        for (k, &g) in cluster.iter().enumerate() {
            for o in 0..r {
                let Some(v) = lay.var(g, o) else { continue };
                let mut acc = q.diag()[v];
                for (u, c) in q.csr().row(v) {
                    let l = pos[lay.group_of(u)];
                    if l == usize::MAX {
                        if state.bit(u) {
                            acc += c;
                        }
                    } else if l > k {
                        let block = &mut j[k * m + l];
                        if block.is_empty() {
                            block.resize(r * r, 0.0);
                        }
                        block[o * r + lay.option_of(u)] += c;
                    }
                }
                h[k * r + o] = acc;
            }
        }
        for &g in cluster {
            pos[g] = usize::MAX;
        }
        Self { m, r, h, j }
    }

    fn pair(&self, k: usize, ok: usize, l: usize, ol: usize) -> f64 {
        let (a, oa, b, ob) = if k < l { (k, ok, l, ol) } else { (l, ol, k, ok) };
        let block = &self.j[a * self.m + b];
        if block.is_empty() {
            0.0
        } else {
            block[oa * self.r + ob]
        }
    }

    fn value(&self, config: &[usize]) -> f64 {
        let mut e = 0.0;
        for k in 0..self.m {
            e += self.h[k * self.r + config[k]];
            for l in k + 1..self.m {
                e += self.pair(k, config[k], l, config[l]);
            }
        }
        e
    }

    fn change(&self, config: &[usize], k: usize, to: usize) -> f64 {
        let from = config[k];
        let mut d = self.h[k * self.r + to] - self.h[k * self.r + from];
        for l in 0..self.m {
            if l != k {
                d += self.pair(k, to, l, config[l]) - self.pair(k, from, l, config[l]);
            }
        }
        d
    }

    /// Exact minimum by reflected mixed-radix Gray enumeration. Returns the
    /// best configuration and the best configuration different from it.
    fn solve(&self) -> (Vec<usize>, Option<Vec<usize>>) {
        let mut a = vec![0usize; self.m];
        let mut dir = vec![true; self.m];
        let mut e = self.value(&a);
        let mut best = (e, a.clone());
        let mut second: Option<(f64, Vec<usize>)> = None;
        loop {
            let mut k = 0;
            while k < self.m {
                let movable = if dir[k] { a[k] + 1 < self.r } else { a[k] > 0 };
                if movable {
                    break;
                }
                dir[k] = !dir[k];
                k += 1;
            }
            if k == self.m {
                break;
            }
            let to = if dir[k] { a[k] + 1 } else { a[k] - 1 };
            e += self.change(&a, k, to);
            a[k] = to;
            if e < best.0 {
                second = Some(std::mem::replace(&mut best, (e, a.clone())));
            } else if second.as_ref().is_none_or(|s| e < s.0) {
                second = Some((e, a.clone()));
            }
        }
        (best.1, second.map(|s| s.1))
    }
}

fn apply(state: &mut FlipState<'_>, lay: &Layout, cluster: &[usize], from: &[usize], to: &[usize]) {
    for (k, &g) in cluster.iter().enumerate() {
        if from[k] == to[k] {
            continue;
        }
        if let Some(v) = lay.var(g, from[k]) {
            state.flip(v);
        }
        if let Some(v) = lay.var(g, to[k]) {
            state.flip(v);
        }
    }
}

/// Sends the cluster to the remote sampler and returns its two best distinct
/// configurations.
fn remote_configs(
    sampler: &RemoteSampler,
    q: &QuboModel,
    lay: &Layout,
    cluster: &[usize],
    incumbent: &Assignment,
    stats: &mut BTreeMap<String, u64>,
) -> std::result::Result<(Vec<usize>, Option<Vec<usize>>), String> {
    let vars: Vec<usize> = cluster
        .iter()
        .flat_map(|&g| (0..lay.options()).filter_map(move |o| lay.var(g, o)))
        .collect();
    let enc = match q.encoding() {
        Some(e) => {
            let ids = cluster.iter().map(|&g| e.node_ids()[g]).collect();
            Some(ScoreEncoding::new(e.levels(), ids, e.penalty()).map_err(|e| e.to_string())?)
        }
        None => None,
    };
    let fragment = q.restrict(&vars, incumbent, enc).map_err(|e| e.to_string())?;
    *stats.entry("remote_calls".into()).or_default() += 1;
    let batch = sampler.sample(&fragment).map_err(|e| {
        if let RemoteError::AllRejected(n) = e {
            *stats.entry("discarded".into()).or_default() += n as u64;
        }
        e.to_string()
    })?;
    *stats.entry("discarded".into()).or_default() += batch.discarded as u64;

    let local = Layout {
        count: cluster.len(),
        ..*lay
    };
    let mut configs: Vec<(f64, Vec<usize>)> = Vec::new();
    for (a, e) in batch.samples {
        let config: Option<Vec<usize>> = (0..cluster.len()).map(|k| local.current(a.bits(), k)).collect();
        match config {
            Some(c) => configs.push((e, c)),
            None => *stats.entry("discarded".into()).or_default() += 1,
        }
    }
    configs.sort_by(|x, y| x.0.total_cmp(&y.0));
    configs.dedup_by(|x, y| x.1 == y.1);
    let mut it = configs.into_iter().map(|c| c.1);
    let best = it.next().ok_or("no one-hot samples")?;
    Ok((best, it.next()))
}

pub fn solve_hybrid(req: &SolverRequest<'_>, params: &HybridParams) -> Result<Solution> {
    req.validate()?;
    if params.subproblem_bits == 0 || params.subproblem_bits > MAX_SUBPROBLEM_BITS {
        return Err(Error::Validation(format!(
            "subproblem_bits must be in 1..={MAX_SUBPROBLEM_BITS}"
        )));
    }
    let q = req.qubo;
    let clock = Clock::new(req.budget);
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let sampler = params
        .remote_endpoint
        .as_ref()
        .map(|url| RemoteSampler::new(url.clone(), Duration::from_secs_f64(params.remote_timeout_secs)))
        .transpose()?;

    let lay = Layout::of(q);
    let start = req.valid_start(&mut rng);
    let mut incumbent = (start.clone(), q.energy(&start));
    let mut trace = vec![TracePoint {
        iteration: 0,
        best_energy: incumbent.1,
        wall_ms: clock.elapsed_ms(),
    }];
    let mut stats: BTreeMap<String, u64> = ["rounds", "improving", "remote_calls", "remote_failures", "discarded", "fallbacks"]
        .into_iter()
        .map(|k| (k.to_string(), 0))
        .collect();

    let rounds = match req.budget {
        Budget::Iterations(r) => r,
        Budget::Seconds(_) => u64::MAX,
    };
    let m = params.cluster_size(lay.options()).min(lay.count);
    let tabu = TabuParams {
        tenure: params.tenure,
        stall_limit: None,
        neighborhood: params.neighborhood,
    };
    let tabu_moves = params.tabu_moves.unwrap_or(q.n_vars() as u64);
    let memory = (lay.count / 4).clamp(1, 32);
    let mut recent = VecDeque::with_capacity(memory);
    let mut pos = vec![usize::MAX; lay.count];
    let mut round = 0u64;
    let first_round = Clock::new(Budget::Iterations(1));
    // Rounds continue from where the previous tabu segment ended; the
    // incumbent only records the best state seen.
    let mut walk = incumbent.0.clone();

    while lay.count > 0 && round < rounds && !(round > 0 && clock.expired()) {
        round += 1;
        let mut state = FlipState::new(q, &walk);
        let frus = frustration(&state, q, &lay);
        let cluster = pick_cluster(q, &lay, &frus, m, &recent, &mut rng);
        if recent.len() == memory {
            recent.pop_front();
        }
        recent.push_back(cluster[0]);

        let current: Vec<usize> = cluster
            .iter()
            .map(|&g| lay.current(state.bits(), g).expect("incumbent is one-hot"))
            .collect();
        let sub = Subproblem::build(&state, q, &lay, &cluster, &mut pos);

        let mut solved = None;
        if let Some(s) = &sampler {
            match remote_configs(s, q, &lay, &cluster, &walk, &mut stats) {
                Ok(r) => solved = Some(r),
                Err(_) => {
                    *stats.get_mut("remote_failures").unwrap() += 1;
                    *stats.get_mut("fallbacks").unwrap() += 1;
                }
            }
        }
        let (best, second) = solved.unwrap_or_else(|| sub.solve());

        let gain = sub.value(&best) - sub.value(&current);
        if improves(state.energy() + gain, state.energy()) {
            apply(&mut state, &lay, &cluster, &current, &best);
            *stats.get_mut("improving").unwrap() += 1;
        } else if let Some(kick) = second {
            apply(&mut state, &lay, &cluster, &current, &kick);
        }

        // the first round always completes so a short budget still gets one
        let run = run_tabu(
            &mut state,
            &tabu,
            Some(tabu_moves),
            if round == 1 { &first_round } else { &clock },
            &mut rng,
            Some(incumbent.clone()),
            round,
        )?;
        if let Some((a, _)) = run.best {
            let e = q.energy(&a);
            if improves(e, incumbent.1) {
                incumbent = (a, e);
                trace.push(TracePoint {
                    iteration: round,
                    best_energy: e,
                    wall_ms: clock.elapsed_ms(),
                });
            }
        }
        walk = state.assignment();
    }
    stats.insert("rounds".into(), round);
    Ok(Solution::finish(req, "hybrid", incumbent.0, round, &clock, trace, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::SparseTerms;

    fn random_model(n_nodes: usize, k: u32, seed: u64) -> QuboModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = ScoreEncoding::new(k, (0..n_nodes as u32).collect(), 8.0).unwrap();
        let n = enc.num_vars();
        let mut t = enc.onehot_penalty_terms();
        for i in 0..n {
            t.add_linear(i, rng.gen_range(-2.0..2.0));
            for j in i + 1..n {
                if i / k as usize != j / k as usize && rng.gen_bool(0.3) {
                    t.add_quadratic(i, j, rng.gen_range(-1.0..1.0));
                }
            }
        }
        QuboModel::from_terms(n, t, Some(enc), Vec::new()).unwrap()
    }

    #[test]
    fn cluster_size_matches_bits() {
        let p = HybridParams::default();
        assert_eq!(p.cluster_size(10), 6);
        assert_eq!(p.cluster_size(2), 20);
        assert_eq!(p.cluster_size(1 << 21), 1);
    }

    #[test]
    fn subproblem_enumeration_is_exact() {
        let q = random_model(5, 3, 4);
        let lay = Layout::of(&q);
        let enc = q.encoding().unwrap();
        let start = enc.encode(&[1, 2, 3, 1, 2]).unwrap();
        let state = FlipState::new(&q, &start);
        let cluster = vec![3, 0, 4];
        let mut pos = vec![usize::MAX; 5];
        let sub = Subproblem::build(&state, &q, &lay, &cluster, &mut pos);
        let (best, second) = sub.solve();
        let second = second.unwrap();
        assert_ne!(best, second);

        let energy_of = |cfg: &[usize]| {
            let mut scores = vec![1, 2, 3, 1, 2];
            for (k, &g) in cluster.iter().enumerate() {
                scores[g] = cfg[k] as u32 + 1;
            }
            q.energy(&enc.encode(&scores).unwrap())
        };
        let base = energy_of(&[0, 1, 1]) - sub.value(&[0, 1, 1]);
        let mut all = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let cfg = [a, b, c];
                    let e = energy_of(&cfg);
                    assert!((base + sub.value(&cfg) - e).abs() < 1e-9);
                    all.push(e);
                }
            }
        }
        all.sort_by(f64::total_cmp);
        assert!((energy_of(&best) - all[0]).abs() < 1e-9);
        assert!((energy_of(&second) - all[1]).abs() < 1e-9);
    }

    #[test]
    fn raw_models_use_bit_groups() {
        let mut t = SparseTerms::default();
        t.add_linear(0, 1.0);
        t.add_linear(1, -2.0);
        t.add_quadratic(0, 1, -3.0);
        t.add_linear(2, 0.5);
        let q = QuboModel::from_terms(3, t, None, Vec::new()).unwrap();
        let req = SolverRequest::new(&q, 1, Budget::Iterations(2));
        let sol = solve_hybrid(&req, &HybridParams::default()).unwrap();
        assert_eq!(sol.energy, -4.0);
        assert_eq!(sol.assignment.bits(), &[1, 1, 0]);
    }

    #[test]
    fn never_worse_than_start() {
        let q = random_model(12, 4, 9);
        let enc = q.encoding().unwrap();
        let start = enc.encode(&[1; 12]).unwrap();
        let e0 = q.energy(&start);
        let req = SolverRequest::new(&q, 3, Budget::Iterations(3)).with_initial(start);
        let sol = solve_hybrid(&req, &HybridParams::default()).unwrap();
        assert!(sol.energy <= e0 + 1e-9);
        assert_eq!(sol.repairs, 0);
        assert_eq!(sol.stats["rounds"], 3);
    }
}
