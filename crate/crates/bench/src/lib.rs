//! Fixed workloads shared by the benchmarks.

use sos_transport::builtin::motzkin;
use sos_transport::linops::{FiniteMap, MapDefault};
use sos_transport::{interior_point, monomial_basis, LinearFunctional, MultiIndex, OperatorExpr, Polynomial};

/// `p² + q²` with fixed small integer coefficients in two variables.
pub fn two_squares(d: u32) -> Polynomial {
    let basis = monomial_basis(2, d);
    let mut p = Polynomial::zero(2);
    let mut q = Polynomial::zero(2);
    for (i, a) in basis.monomials().iter().enumerate() {
        p.add_term(a.clone(), ((i % 5) as f64) - 2.0);
        q.add_term(a.clone(), ((i % 3) as f64) - 1.0);
    }
    &(&p * &p) + &(&q * &q)
}

/// Motzkin plus a multiple of the identity-Gram interior point; SOS.
pub fn lifted_motzkin(eps: f64) -> Polynomial {
    &motzkin() + &interior_point(2, 3).scale(eps)
}

/// A triangular operator on `ℝ[x, y]_{≤d}`: each monomial goes to a fixed
/// combination of monomials of no larger degree.
pub fn triangular_operator(d: u32) -> OperatorExpr {
    let basis = monomial_basis(2, d);
    let mut map = FiniteMap::new(2, MapDefault::Zero);
    for (j, a) in basis.monomials().iter().enumerate() {
        let mut img = Polynomial::zero(2);
        for (i, b) in basis.monomials()[..=j].iter().enumerate() {
            img.add_term(b.clone(), 0.1 / (1 + i + j) as f64);
        }
        map = map.with_image(a.clone(), img);
    }
    OperatorExpr::FiniteMap(map)
}

/// Gaussian rank-one operator on two variables with direction `interior_point(2, 3)`.
pub fn gaussian_rank_one() -> OperatorExpr {
    OperatorExpr::rank_one(LinearFunctional::gaussian_full(2), interior_point(2, 3))
}

pub fn monomial(e: &[u32]) -> Polynomial {
    Polynomial::monomial(MultiIndex::new(e.to_vec()), 1.0)
}
