//! Dense helpers shared by the certifier and the subspace iteration.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::poly::{MultiIndex, Polynomial};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
pub struct SymEig {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

pub fn sym_eig(m: &DMatrix<f64>) -> SymEig {
    let n = m.nrows();
    if n == 0 {
        return SymEig {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SymEig { values, vectors }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eig(m).min()
}

/// Monomials seen so far, each mapped to a coordinate slot. Vectors over a
/// `CoordSpace` may be shorter than its dimension; missing slots are zero.
#[derive(Debug, Default, Clone)]
pub struct CoordSpace {
    slots: HashMap<MultiIndex, usize>,
    monomials: Vec<MultiIndex>,
}

impl CoordSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn embed(&mut self, p: &Polynomial) -> Vec<f64> {
        let mut pairs = Vec::with_capacity(p.num_terms());
        for (a, c) in p.terms() {
            let next = self.monomials.len();
            let slot = *self.slots.entry(a.clone()).or_insert_with(|| {
                self.monomials.push(a.clone());
                next
            });
            pairs.push((slot, c));
        }
        let mut v = vec![0.0; self.monomials.len()];
        for (slot, c) in pairs {
            v[slot] = c;
        }
        v
    }

    pub fn polynomial(&self, n: usize, v: &[f64]) -> Polynomial {
        let mut p = Polynomial::zero(n);
        for (a, &c) in self.monomials.iter().zip(v) {
            if c != 0.0 {
                p.add_term(a.clone(), c);
            }
        }
        p
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `v -= c * u` over the common prefix, then `v` extended as needed.
fn sub_scaled(v: &mut Vec<f64>, c: f64, u: &[f64]) {
    if v.len() < u.len() {
        v.resize(u.len(), 0.0);
    }
    for (x, y) in v.iter_mut().zip(u) {
        *x -= c * y;
    }
}

/// Orthonormal basis of a growing subspace, stored as coordinate vectors.
#[derive(Debug, Clone, Default)]
pub struct OrthoBasis {
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Component of `v` orthogonal to the basis (two Gram–Schmidt passes) and
    /// the coefficients of its projection.
    pub fn split(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r = v.to_vec();
        let mut coeffs = vec![0.0; self.vectors.len()];
        for _ in 0..2 {
            for (k, q) in self.vectors.iter().enumerate() {
                let c = dot(q, &r);
                coeffs[k] += c;
                sub_scaled(&mut r, c, q);
            }
        }
        (coeffs, r)
    }

    /// Orthogonal-complement residual norm of `v` relative to `‖v‖`.
    pub fn relative_residual(&self, v: &[f64]) -> f64 {
        let nv = norm(v);
        if nv == 0.0 {
            return 0.0;
        }
        norm(&self.split(v).1) / nv
    }

    /// Column-pivoted reduction: orthogonalizes `candidates` against the basis
    /// and each other, always taking the largest remaining residual next;
    /// residuals at or below `tol` times the largest candidate norm are
    /// dropped. Returns the indices of the candidates that added a direction.
    pub fn extend_pivoted(&mut self, candidates: &[Vec<f64>], tol: f64) -> Vec<usize> {
        let scale = candidates.iter().map(|c| norm(c)).fold(0.0, f64::max);
        if scale == 0.0 {
            return Vec::new();
        }
        let mut residuals: Vec<Vec<f64>> = candidates.iter().map(|c| self.split(c).1).collect();
        let mut taken = Vec::new();
        let mut open: Vec<usize> = (0..candidates.len()).collect();
        loop {
            let best = open
                .iter()
                .copied()
                .map(|i| (i, norm(&residuals[i])))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            let Some((i, nr)) = best else { break };
            if nr <= tol * scale {
                break;
            }
            // re-orthogonalize the pivot once more before accepting it
            let (_, mut r) = self.split(&residuals[i]);
            let nr2 = norm(&r);
            if nr2 <= tol * scale {
                break;
            }
            r.iter_mut().for_each(|x| *x /= nr2);
            open.retain(|&j| j != i);
            for &j in &open {
                let c = dot(&r, &residuals[j]);
                sub_scaled(&mut residuals[j], c, &r);
            }
            self.vectors.push(r);
            taken.push(i);
        }
        taken
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_sorted() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 5.0]);
        let e = sym_eig(&m);
        assert_eq!(e.values, vec![-1.0, 2.0, 5.0]);
        assert_eq!(e.vectors[(1, 0)].abs(), 1.0);
    }

    #[test]
    fn pivoted_extension_drops_dependent_columns() {
        let mut b = OrthoBasis::new();
        let cands = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        let taken = b.extend_pivoted(&cands, 1e-10);
        assert_eq!(b.dim(), 2);
        assert_eq!(taken.len(), 2);
        assert!(b.relative_residual(&[3.0, -4.0, 0.0]) < 1e-15);
        assert!((b.relative_residual(&[0.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coordinate_space_roundtrip() {
        let mut cs = CoordSpace::new();
        let p = Polynomial::univariate(&[1.0, 0.0, 3.0]);
        let q = Polynomial::univariate(&[0.0, 2.0]);
        let vp = cs.embed(&p);
        let vq = cs.embed(&q);
        assert_eq!(cs.dim(), 3);
        assert_eq!(cs.polynomial(1, &vp), p);
        assert_eq!(cs.polynomial(1, &vq), q);
    }
}
