use rand::Rng;

use crate::encoding::Assignment;
use crate::qubo::QuboModel;

/// Incrementally maintained assignment: local fields give every single-flip
/// delta in O(1), a flip costs O(row degree).
pub(crate) struct FlipState<'q> {
    q: &'q QuboModel,
    x: Vec<u8>,
    /// `Q_ii + sum_j Q_ij x_j`
    field: Vec<f64>,
    energy: f64,
    groups: Option<Groups>,
}

/// One-hot bookkeeping: set-bit count per node and how many nodes are off.
struct Groups {
    size: usize,
    count: Vec<u32>,
    invalid: usize,
}

impl<'q> FlipState<'q> {
    pub(crate) fn new(q: &'q QuboModel, start: &Assignment) -> Self {
        let x = start.bits().to_vec();
        let mut field = q.diag().to_vec();
        for &(i, j, c) in q.quadratic() {
            if x[j] == 1 {
                field[i] += c;
            }
            if x[i] == 1 {
                field[j] += c;
            }
        }
        let groups = q.encoding().map(|enc| {
            let size = enc.levels() as usize;
            let count: Vec<u32> = x
                .chunks(size)
                .map(|c| c.iter().map(|&b| u32::from(b)).sum())
                .collect();
            let invalid = count.iter().filter(|&&c| c != 1).count();
            Groups { size, count, invalid }
        });
        Self {
            q,
            energy: q.energy(start),
            x,
            field,
            groups,
        }
    }

    #[inline]
    pub(crate) fn delta(&self, i: usize) -> f64 {
        if self.x[i] == 1 {
            -self.field[i]
        } else {
            self.field[i]
        }
    }

    #[inline]
    pub(crate) fn field(&self, i: usize) -> f64 {
        self.field[i]
    }

    pub(crate) fn flip(&mut self, i: usize) {
        self.energy += self.delta(i);
        let on = self.x[i] == 0;
        self.x[i] ^= 1;
        let sign = if on { 1.0 } else { -1.0 };
        for (u, c) in self.q.csr().row(i) {
            self.field[u] += sign * c;
        }
        if let Some(g) = &mut self.groups {
            let node = i / g.size;
            let before = g.count[node] == 1;
            if on {
                g.count[node] += 1;
            } else {
                g.count[node] -= 1;
            }
            let after = g.count[node] == 1;
            match (before, after) {
                (true, false) => g.invalid += 1,
                (false, true) => g.invalid -= 1,
                _ => {}
            }
        }
    }

    pub(crate) fn model(&self) -> &'q QuboModel {
        self.q
    }

    pub(crate) fn energy(&self) -> f64 {
        self.energy
    }

    pub(crate) fn bit(&self, i: usize) -> bool {
        self.x[i] == 1
    }

    pub(crate) fn len(&self) -> usize {
        self.x.len()
    }

    /// Every node one-hot (always true without an encoding).
    pub(crate) fn is_valid(&self) -> bool {
        self.groups.as_ref().is_none_or(|g| g.invalid == 0)
    }

    pub(crate) fn assignment(&self) -> Assignment {
        Assignment::from_bits(self.x.clone()).expect("bits are 0/1")
    }

    pub(crate) fn bits(&self) -> &[u8] {
        &self.x
    }
}

/// Level-swap view of an encoded model: a move sends one node from its
/// current level to another, flipping two bits and staying one-hot.
pub(crate) struct Swaps {
    pub k: usize,
    /// Couplings between levels of the same node, `k x k` per node.
    intra: Vec<f64>,
    /// Current level index per node.
    pub level: Vec<usize>,
}

impl Swaps {
    /// `None` when the model has no encoding or `state` is not one-hot.
    pub(crate) fn new(state: &FlipState<'_>) -> Option<Self> {
        let enc = state.q.encoding()?;
        let k = enc.levels() as usize;
        let nodes = enc.num_nodes();
        let mut level = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let span = &state.x[node * k..(node + 1) * k];
            if span.iter().filter(|&&b| b == 1).count() != 1 {
                return None;
            }
            level.push(span.iter().position(|&b| b == 1).unwrap());
        }
        let mut intra = vec![0.0; nodes * k * k];
        for &(i, j, c) in state.q.quadratic() {
            if i / k == j / k {
                let node = i / k;
                intra[node * k * k + (i % k) * k + j % k] = c;
                intra[node * k * k + (j % k) * k + i % k] = c;
            }
        }
        Some(Self { k, intra, level })
    }

    pub(crate) fn nodes(&self) -> usize {
        self.level.len()
    }

    #[inline]
    pub(crate) fn delta(&self, state: &FlipState<'_>, node: usize, to: usize) -> f64 {
        let from = self.level[node];
        let base = node * self.k;
        state.field[base + to] - state.field[base + from] - self.intra[node * self.k * self.k + from * self.k + to]
    }

    pub(crate) fn apply(&mut self, state: &mut FlipState<'_>, node: usize, to: usize) {
        let base = node * self.k;
        state.flip(base + self.level[node]);
        state.flip(base + to);
        self.level[node] = to;
    }
}

/// A random starting point: one random level per node when the model is
/// encoded, uniform random bits otherwise.
pub(crate) fn random_assignment(q: &QuboModel, rng: &mut impl Rng) -> Assignment {
    match q.encoding() {
        Some(enc) => {
            let scores: Vec<u32> = (0..enc.num_nodes())
                .map(|_| rng.gen_range(1..=enc.levels()))
                .collect();
            enc.encode(&scores).expect("levels drawn in range")
        }
        None => Assignment::from_bools(&(0..q.n_vars()).map(|_| rng.gen::<bool>()).collect::<Vec<_>>()),
    }
}
