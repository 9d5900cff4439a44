//! Sum-of-squares certification through Gram matrices.
//!
//! `p = mᵀ G m` over the monomial vector `m` of degree `≤ d`; `p` is a sum
//! of squares iff some such `G` is positive semidefinite. The set of Gram
//! matrices of `p` is an affine slice cut out by one equation per exponent
//! `γ`, and the equations touch disjoint sets of entries, so the slice has a
//! closed-form projection. [`certify_sos`] alternates that projection with
//! eigenvalue clipping.

mod certify;
mod polish;
mod sdpa;
mod zeros;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::poly::{monomial_basis, Degree, GradedBasis, MultiIndex, Polynomial};

pub use certify::{
    certify_sos, check_certificate, coefficient_scale, find_negative, find_negative_orthant, validate_certificate, CertificateCheck, CertifyConfig,
    CertifyOutcome, GramCertificate, Square,
};
pub use sdpa::{export_sdpa, sdpa_string};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SosError {
    #[error("polynomial of degree {degree} does not fit half-degree {d}")]
    DegreeOverflow { degree: Degree, d: u32 },
}

/// Gram-matrix feasibility problem for `p` on the basis of degree `≤ d`.
#[derive(Debug, Clone)]
pub struct GramProblem {
    pub p: Polynomial,
    pub d: u32,
    pub basis: GradedBasis,
    /// `γ ↦` positions `(i, j)` with `basis[i] + basis[j] = γ`, both orders.
    pub groups: BTreeMap<MultiIndex, Vec<(usize, usize)>>,
    /// `γ ↦ p_γ`, zero for absent coefficients.
    pub targets: BTreeMap<MultiIndex, f64>,
}

impl GramProblem {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.groups.len()
    }
}

pub fn build_gram_problem(p: &Polynomial, d: u32) -> Result<GramProblem, SosError> {
    if !p.degree().at_most(2 * d) {
        return Err(SosError::DegreeOverflow { degree: p.degree(), d });
    }
    let basis = monomial_basis(p.n(), d);
    let mut groups: BTreeMap<MultiIndex, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, a) in basis.monomials().iter().enumerate() {
        for (j, b) in basis.monomials().iter().enumerate() {
            groups.entry(a.add(b)).or_default().push((i, j));
        }
    }
    let targets = groups.keys().map(|g| (g.clone(), p.coeff(g))).collect();
    Ok(GramProblem {
        p: p.clone(),
        d,
        basis,
        groups,
        targets,
    })
}

/// `∑_{|α|≤d} (x^α)²`, whose Gram matrix on the degree-`d` basis is the identity.
pub fn interior_point(n: usize, d: u32) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for a in monomial_basis(n, d).monomials() {
        p.add_term(a.add(a), 1.0);
    }
    p
}

/// [`interior_point`] plus `(1/n)·∑_{|α|=d} x^α·x^{β(α)}`, where `β(α)` is `α`
/// with one unit removed from its first nonzero coordinate. The added
/// off-diagonal Gram entries are small enough that the Gram matrix stays
/// positive definite, and the degree `2d − 1` part is nonzero with positive
/// orthant moment.
pub fn orthant_interior_point(n: usize, d: u32) -> Polynomial {
    let mut p = interior_point(n, d);
    if d == 0 {
        return p;
    }
    for a in monomial_basis(n, d).monomials().iter().filter(|a| a.degree() == d) {
        let mut e = a.exponents().to_vec();
        let i = e.iter().position(|&k| k > 0).expect("degree d > 0");
        e[i] -= 1;
        p.add_term(a.add(&MultiIndex::new(e)), 1.0 / n as f64);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use nalgebra::DMatrix;

    #[test]
    fn small_problem_groups() {
        let p = Polynomial::univariate(&[1.0, 0.0, 1.0]);
        let g = build_gram_problem(&p, 1).unwrap();
        assert_eq!(g.size(), 2);
        let want: Vec<(MultiIndex, Vec<(usize, usize)>)> = vec![
            (MultiIndex::univariate(0), vec![(0, 0)]),
            (MultiIndex::univariate(1), vec![(0, 1), (1, 0)]),
            (MultiIndex::univariate(2), vec![(1, 1)]),
        ];
        assert_eq!(g.groups.into_iter().collect::<Vec<_>>(), want);
        assert_eq!(g.targets.values().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn bivariate_counts() {
        let g = build_gram_problem(&Polynomial::zero(2), 1).unwrap();
        assert_eq!(g.size(), 3);
        assert_eq!(g.num_constraints(), 6);
        assert!(g.targets.values().all(|&t| t == 0.0));
        let total: usize = g.groups.values().map(Vec::len).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn degree_overflow() {
        let p = Polynomial::univariate(&[0.0, 0.0, 0.0, 1.0]);
        assert!(build_gram_problem(&p, 1).is_err());
    }

    #[test]
    fn interior_points() {
        assert_eq!(interior_point(1, 1), Polynomial::univariate(&[1.0, 0.0, 1.0]));
        assert_eq!(interior_point(1, 2), Polynomial::univariate(&[1.0, 0.0, 1.0, 0.0, 1.0]));
        let want = Polynomial::from_terms(2, [(vec![0, 0], 1.0), (vec![2, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        assert_eq!(interior_point(2, 1), want);
        assert_eq!(orthant_interior_point(1, 1), Polynomial::univariate(&[1.0, 1.0, 1.0]));
    }

    #[test]
    fn orthant_point_gram_is_definite() {
        for n in 1..=3 {
            for d in 1..=3 {
                let f = orthant_interior_point(n, d);
                let basis = monomial_basis(n, d);
                let m = basis.len();
                let mut g = DMatrix::<f64>::identity(m, m);
                for (i, a) in basis.monomials().iter().enumerate() {
                    if a.degree() != d {
                        continue;
                    }
                    let mut e = a.exponents().to_vec();
                    let k = e.iter().position(|&k| k > 0).unwrap();
                    e[k] -= 1;
                    let j = basis.position(&MultiIndex::new(e)).unwrap();
                    g[(i, j)] += 0.5 / n as f64;
                    g[(j, i)] += 0.5 / n as f64;
                }
                let mut recon = Polynomial::zero(n);
                for i in 0..m {
                    for j in 0..m {
                        recon.add_term(basis.get(i).add(basis.get(j)), g[(i, j)]);
                    }
                }
                assert!(recon.max_abs_diff(&f) < 1e-15, "n={n} d={d}");
                assert!(min_eigenvalue(&g) > 0.1, "n={n} d={d}");
            }
        }
    }
}
