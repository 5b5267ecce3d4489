use serde::{Deserialize, Serialize};

use super::terms::SparseTerms;
use crate::encoding::{Assignment, ScoreEncoding};
use crate::error::{Error, Result};

/// Audit record of what one Hamiltonian term contributed to the assembled model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermProvenance {
    pub term: String,
    pub weight: f64,
    /// Weighted constant contribution.
    pub offset: f64,
    /// Sum of the weighted linear coefficients it produced.
    pub linear_sum: f64,
    /// Sum of the weighted quadratic coefficients it produced.
    pub quadratic_sum: f64,
}

/// Symmetric row-compressed view of the quadratic part, for O(degree) updates.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Csr {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    fn build(n: usize, quadratic: &[(usize, usize, f64)]) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v, _) in quadratic {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut cols = vec![0u32; offsets[n]];
        let mut vals = vec![0.0; offsets[n]];
        for &(u, v, c) in quadratic {
            cols[fill[u]] = v as u32;
            vals[fill[u]] = c;
            fill[u] += 1;
            cols[fill[v]] = u as u32;
            vals[fill[v]] = c;
            fill[v] += 1;
        }
        Self { offsets, cols, vals }
    }

    #[inline]
    pub(crate) fn row(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[v]..self.offsets[v + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&u, &c)| (u as usize, c))
    }
}

/// Sparse upper-triangular QUBO:
/// `energy(x) = offset + sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j`.
///
/// Immutable once built. Linear and quadratic entries are kept sorted by
/// index with no zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    n_vars: usize,
    offset: f64,
    linear: Vec<(usize, f64)>,
    quadratic: Vec<(usize, usize, f64)>,
    encoding: Option<ScoreEncoding>,
    provenance: Vec<TermProvenance>,
    diag: Vec<f64>,
    csr: Csr,
}

impl QuboModel {
    pub fn from_terms(
        n_vars: usize,
        mut terms: SparseTerms,
        encoding: Option<ScoreEncoding>,
        provenance: Vec<TermProvenance>,
    ) -> Result<Self> {
        terms.compact();
        if let Some(max) = terms.max_var() {
            if max >= n_vars {
                return Err(Error::Validation(format!(
                    "term references variable {max} but the model has {n_vars}"
                )));
            }
        }
        if let Some(enc) = &encoding {
            if enc.num_vars() != n_vars {
                return Err(Error::Validation(format!(
                    "encoding covers {} variables, model has {n_vars}",
                    enc.num_vars()
                )));
            }
        }
        let (offset, linear, quadratic) = terms.into_parts();
        let finite = offset.is_finite()
            && linear.iter().all(|t| t.1.is_finite())
            && quadratic.iter().all(|t| t.2.is_finite());
        if !finite {
            return Err(Error::Validation("non-finite QUBO coefficient".into()));
        }
        let mut diag = vec![0.0; n_vars];
        for &(v, c) in &linear {
            diag[v] = c;
        }
        let csr = Csr::build(n_vars, &quadratic);
        Ok(Self {
            n_vars,
            offset,
            linear,
            quadratic,
            encoding,
            provenance,
            diag,
            csr,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Nonzero `Q_ii`, ascending by variable.
    pub fn linear(&self) -> &[(usize, f64)] {
        &self.linear
    }

    /// Nonzero `Q_ij` with `i < j`, ascending by `(i, j)`.
    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn linear_coefficient(&self, i: usize) -> f64 {
        self.diag.get(i).copied().unwrap_or(0.0)
    }

    pub fn quadratic_coefficient(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.quadratic
            .binary_search_by(|t| (t.0, t.1).cmp(&key))
            .map_or(0.0, |k| self.quadratic[k].2)
    }

    pub fn encoding(&self) -> Option<&ScoreEncoding> {
        self.encoding.as_ref()
    }

    pub fn provenance(&self) -> &[TermProvenance] {
        &self.provenance
    }

    pub(crate) fn csr(&self) -> &Csr {
        &self.csr
    }

    pub(crate) fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Largest coefficient magnitude among linear and quadratic entries.
    pub fn max_abs_coefficient(&self) -> f64 {
        let lin = self.linear.iter().map(|t| t.1.abs());
        let quad = self.quadratic.iter().map(|t| t.2.abs());
        lin.chain(quad).fold(0.0, f64::max)
    }

    /// Full evaluation in O(nnz).
    ///
    /// # Panics
    /// If the assignment length differs from `n_vars`.
    pub fn energy(&self, a: &Assignment) -> f64 {
        assert_eq!(a.len(), self.n_vars, "assignment length mismatch");
        let bits = a.bits();
        let mut e = self.offset;
        for &(i, c) in &self.linear {
            if bits[i] == 1 {
                e += c;
            }
        }
        for &(i, j, c) in &self.quadratic {
            if bits[i] == 1 && bits[j] == 1 {
                e += c;
            }
        }
        e
    }

    /// `energy(a with bit i flipped) - energy(a)` in O(row degree).
    pub fn delta_energy(&self, a: &Assignment, i: usize) -> f64 {
        let bits = a.bits();
        let field = self.diag[i]
            + self
                .csr
                .row(i)
                .filter(|&(u, _)| bits[u] == 1)
                .map(|(_, c)| c)
                .sum::<f64>();
        if bits[i] == 1 {
            -field
        } else {
            field
        }
    }

    /// The sub-QUBO over `vars` with every other variable clamped to its
    /// value in `clamp`. Variable `k` of the fragment is `vars[k]`; the
    /// fragment's energy equals the full energy of the merged assignment.
    pub fn restrict(
        &self,
        vars: &[usize],
        clamp: &Assignment,
        encoding: Option<ScoreEncoding>,
    ) -> Result<QuboModel> {
        let mut local = vec![usize::MAX; self.n_vars];
        for (k, &v) in vars.iter().enumerate() {
            if v >= self.n_vars || local[v] != usize::MAX {
                return Err(Error::Validation(format!("bad fragment variable {v}")));
            }
            local[v] = k;
        }
        let free = |v: usize| local[v] != usize::MAX;
        let on = |v: usize| clamp.get(v);

        let mut terms = SparseTerms::default();
        terms.offset = self.offset;
        for &(i, c) in &self.linear {
            match (free(i), on(i)) {
                (true, _) => terms.add_linear(local[i], c),
                (false, true) => terms.offset += c,
                _ => {}
            }
        }
        for &(i, j, c) in &self.quadratic {
            match (free(i), free(j)) {
                (true, true) => terms.add_quadratic(local[i], local[j], c),
                (true, false) if on(j) => terms.add_linear(local[i], c),
                (false, true) if on(i) => terms.add_linear(local[j], c),
                (false, false) if on(i) && on(j) => terms.offset += c,
                _ => {}
            }
        }
        QuboModel::from_terms(vars.len(), terms, encoding, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> QuboModel {
        let mut t = SparseTerms::default();
        t.offset = 0.5;
        t.add_linear(0, 1.0);
        t.add_linear(2, -3.0);
        t.add_quadratic(0, 1, 2.0);
        t.add_quadratic(1, 2, -1.5);
        t.add_quadratic(0, 2, 4.0);
        QuboModel::from_terms(3, t, None, Vec::new()).unwrap()
    }

    fn all_assignments(n: usize) -> impl Iterator<Item = Assignment> {
        (0..1u32 << n)
            .map(move |c| Assignment::from_bits((0..n).map(|b| ((c >> b) & 1) as u8).collect()).unwrap())
    }

    #[test]
    fn zero_assignment_is_offset() {
        assert_eq!(small().energy(&Assignment::zeros(3)), 0.5);
    }

    #[test]
    fn delta_matches_full_reevaluation() {
        let q = small();
        for a in all_assignments(3) {
            for i in 0..3 {
                let mut b = a.clone();
                b.flip(i);
                let expected = q.energy(&b) - q.energy(&a);
                assert!((q.delta_energy(&a, i) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coefficient_lookup() {
        let q = small();
        assert_eq!(q.quadratic_coefficient(2, 1), -1.5);
        assert_eq!(q.quadratic_coefficient(0, 0), 0.0);
        assert_eq!(q.linear_coefficient(1), 0.0);
        assert_eq!(q.max_abs_coefficient(), 4.0);
    }

    #[test]
    fn restricted_fragment_energy_matches() {
        let q = small();
        for clamp in all_assignments(3) {
            let frag = q.restrict(&[2, 0], &clamp, None).unwrap();
            for y in all_assignments(2) {
                let mut merged = clamp.clone();
                merged.set(2, y.get(0));
                merged.set(0, y.get(1));
                assert!((frag.energy(&y) - q.energy(&merged)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_out_of_range_terms() {
        let mut t = SparseTerms::default();
        t.add_linear(5, 1.0);
        assert!(QuboModel::from_terms(3, t, None, Vec::new()).is_err());
    }
}
