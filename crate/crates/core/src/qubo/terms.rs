use crate::encoding::Assignment;

/// Coefficients below this magnitude are dropped when compacting.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// A bag of bit-level QUBO terms: `offset + sum c_i x_i + sum_{i<j} c_ij x_i x_j`.
///
/// Terms may be pushed in any order with repeated keys; [`compact`](Self::compact)
/// sorts, merges and prunes them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseTerms {
    pub offset: f64,
    linear: Vec<(usize, f64)>,
    quadratic: Vec<(usize, usize, f64)>,
}

impl SparseTerms {
    pub fn add_linear(&mut self, var: usize, value: f64) {
        self.linear.push((var, value));
    }

    /// Order of `u` and `v` does not matter; `u == v` folds into the linear part.
    pub fn add_quadratic(&mut self, u: usize, v: usize, value: f64) {
        match u.cmp(&v) {
            std::cmp::Ordering::Less => self.quadratic.push((u, v, value)),
            std::cmp::Ordering::Greater => self.quadratic.push((v, u, value)),
            std::cmp::Ordering::Equal => self.linear.push((u, value)),
        }
    }

    pub fn extend(&mut self, other: &SparseTerms) {
        self.offset += other.offset;
        self.linear.extend_from_slice(&other.linear);
        self.quadratic.extend_from_slice(&other.quadratic);
    }

    pub fn scale(&mut self, factor: f64) {
        self.offset *= factor;
        self.linear.iter_mut().for_each(|t| t.1 *= factor);
        self.quadratic.iter_mut().for_each(|t| t.2 *= factor);
    }

    pub fn compact(&mut self) {
        self.linear.sort_unstable_by_key(|t| t.0);
        self.linear = merge(self.linear.drain(..), |t| t.0, |t| &mut t.1, |t| t.1);
        self.quadratic.sort_unstable_by_key(|t| (t.0, t.1));
        self.quadratic = merge(self.quadratic.drain(..), |t| (t.0, t.1), |t| &mut t.2, |t| t.2);
    }

    pub fn linear(&self) -> &[(usize, f64)] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    /// Largest variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        let lin = self.linear.iter().map(|t| t.0);
        let quad = self.quadratic.iter().map(|t| t.1);
        lin.chain(quad).max()
    }

    /// Direct evaluation, independent of any compaction.
    pub fn evaluate(&self, a: &Assignment) -> f64 {
        let lin: f64 = self.linear.iter().filter(|t| a.get(t.0)).map(|t| t.1).sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .filter(|t| a.get(t.0) && a.get(t.1))
            .map(|t| t.2)
            .sum();
        self.offset + lin + quad
    }

    /// `|c_v| + sum_u |c_uv|` for every variable in `0..n_vars`: an upper bound
    /// on the energy change caused by flipping `v` from any state.
    pub fn row_bounds(&self, n_vars: usize) -> Vec<f64> {
        let mut bounds = vec![0.0; n_vars];
        for &(v, c) in &self.linear {
            bounds[v] += c.abs();
        }
        for &(u, v, c) in &self.quadratic {
            bounds[u] += c.abs();
            bounds[v] += c.abs();
        }
        bounds
    }

    pub(crate) fn into_parts(self) -> (f64, Vec<(usize, f64)>, Vec<(usize, usize, f64)>) {
        (self.offset, self.linear, self.quadratic)
    }
}

fn merge<T, K: PartialEq>(
    items: impl Iterator<Item = T>,
    key: impl Fn(&T) -> K,
    value_mut: impl Fn(&mut T) -> &mut f64,
    value: impl Fn(&T) -> f64,
) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for item in items {
        match out.last_mut() {
            Some(last) if key(last) == key(&item) => *value_mut(last) += value(&item),
            _ => {
                if out.last().is_some_and(|l| value(l).abs() <= PRUNE_THRESHOLD) {
                    out.pop();
                }
                out.push(item);
            }
        }
    }
    if out.last().is_some_and(|l| value(l).abs() <= PRUNE_THRESHOLD) {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_merges_and_prunes() {
        let mut t = SparseTerms::default();
        t.add_linear(3, 1.0);
        t.add_linear(1, 2.0);
        t.add_linear(3, -1.0);
        t.add_quadratic(2, 0, 1.5);
        t.add_quadratic(0, 2, 0.5);
        t.add_quadratic(1, 1, 4.0);
        t.add_quadratic(4, 5, 1e-13);
        t.compact();
        assert_eq!(t.linear(), &[(1, 6.0)]);
        assert_eq!(t.quadratic(), &[(0, 2, 2.0)]);
    }

    #[test]
    fn evaluate_and_row_bounds() {
        let mut t = SparseTerms::default();
        t.offset = 1.0;
        t.add_linear(0, -2.0);
        t.add_quadratic(0, 1, 3.0);
        t.compact();
        let a = Assignment::from_bits(vec![1, 1]).unwrap();
        assert_eq!(t.evaluate(&a), 2.0);
        assert_eq!(t.row_bounds(3), vec![5.0, 3.0, 0.0]);
    }
}
