//! Subspace stabilization `V ← V + A·V` started from a single polynomial.
//!
//! Starting from `V_0 = span{p}`, the spaces `V_i = span{p, Ap, …, A^i p}`
//! are grown one orthonormal direction at a time (Arnoldi order): the image
//! of the newest direction is reduced against `V_i`, and growth stops when
//! nothing survives the drop tolerance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{op_apply, OperatorError, OperatorExpr};
use crate::linalg::{norm, CoordSpace, OrthoBasis};
use crate::poly::{Degree, Polynomial};

/// Residuals below this fraction of the largest candidate norm are dropped.
pub const DROP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrylovStatus {
    Stabilized,
    /// Some `A^k p` left the degree bound.
    DegreeEscape,
    /// Dimension still growing after the step cap.
    NoStabilization,
}

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub status: KrylovStatus,
    pub n: usize,
    pub space: CoordSpace,
    pub basis: OrthoBasis,
    /// Number of `V ← V + AV` steps taken.
    pub steps: usize,
    /// `deg(A^k p)` for `k = 0, 1, …` as observed.
    pub degree_trace: Vec<Degree>,
    /// `dim V_i` after each step, starting with `dim V_0`.
    pub dims: Vec<usize>,
    /// `‖p‖`; `p = norm_p · q_0`.
    pub norm_p: f64,
}

impl KrylovOutcome {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis_polynomials(&self) -> Vec<Polynomial> {
        self.basis
            .vectors()
            .iter()
            .map(|v| self.space.polynomial(self.n, v))
            .collect()
    }

    /// `H = QᵀAQ` and the largest relative residual `‖(I−QQᵀ)Aq_j‖/‖Aq_j‖`.
    pub fn compressed(&mut self, a: &OperatorExpr) -> Result<(DMatrix<f64>, f64), OperatorError> {
        let k = self.basis.dim();
        let mut h = DMatrix::zeros(k, k);
        let mut worst = 0.0f64;
        let qs = self.basis_polynomials();
        for (j, q) in qs.iter().enumerate() {
            let img = op_apply(a, q)?;
            let v = self.space.embed(&img);
            let (coeffs, r) = self.basis.split(&v);
            let nv = norm(&v);
            if nv > 0.0 {
                worst = worst.max(norm(&r) / nv);
            }
            for (i, c) in coeffs.into_iter().enumerate() {
                h[(i, j)] = c;
            }
        }
        Ok((h, worst))
    }
}

fn observed_degree(w: &Polynomial) -> Degree {
    w.degree()
}

/// Runs the stabilization from `p`. `degree_bound` caps `deg(A^k p)`;
/// `max_steps` caps the number of steps.
pub fn stabilize(
    a: &OperatorExpr,
    p: &Polynomial,
    degree_bound: Option<u32>,
    max_steps: usize,
) -> Result<KrylovOutcome, OperatorError> {
    let n = p.n();
    if let Some(m) = a.n() {
        if m != n {
            return Err(OperatorError::VariableMismatch { expected: m, got: n });
        }
    }
    let mut space = CoordSpace::new();
    let mut basis = OrthoBasis::new();
    let v0 = space.embed(p);
    let norm_p = norm(&v0);
    basis.extend_pivoted(&[v0], DROP_TOLERANCE);

    let escapes = |d: Degree| match (d, degree_bound) {
        (Degree::Finite(k), Some(b)) => k > b,
        _ => false,
    };

    let mut w = p.clone();
    let mut trace = vec![observed_degree(&w)];
    let mut dims = vec![basis.dim()];
    let outcome = |status, space, basis, steps, trace, dims| KrylovOutcome {
        status,
        n,
        space,
        basis,
        steps,
        degree_trace: trace,
        dims,
        norm_p,
    };
    if escapes(trace[0]) {
        return Ok(outcome(KrylovStatus::DegreeEscape, space, basis, 0, trace, dims));
    }
    if basis.dim() == 0 {
        return Ok(outcome(KrylovStatus::Stabilized, space, basis, 0, trace, dims));
    }

    let mut steps = 0;
    let mut newest = basis.dim() - 1;
    loop {
        if steps >= max_steps {
            return Ok(outcome(KrylovStatus::NoStabilization, space, basis, steps, trace, dims));
        }
        steps += 1;

        if !w.is_zero() {
            w = op_apply(a, &w)?;
            let s = w.max_abs_coeff();
            if s > 0.0 && s.is_finite() {
                w = w.scale(1.0 / s);
            }
        }
        let d = observed_degree(&w);
        trace.push(d);
        if escapes(d) {
            dims.push(basis.dim());
            return Ok(outcome(KrylovStatus::DegreeEscape, space, basis, steps, trace, dims));
        }

        let q = space.polynomial(n, &basis.vectors()[newest]);
        let img = op_apply(a, &q)?;
        let v = space.embed(&img);
        let added = basis.extend_pivoted(&[v], DROP_TOLERANCE);
        dims.push(basis.dim());
        if added.is_empty() {
            return Ok(outcome(KrylovStatus::Stabilized, space, basis, steps, trace, dims));
        }
        newest = basis.dim() - 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{shift_odd, shift_even};
    use crate::poly::MultiIndex;

    fn x(k: u32) -> Polynomial {
        Polynomial::monomial(MultiIndex::univariate(k), 1.0)
    }

    #[test]
    fn shift_a_on_x_stabilizes_in_two() {
        let out = stabilize(&shift_odd(), &x(1), Some(20), 64).unwrap();
        assert_eq!(out.status, KrylovStatus::Stabilized);
        assert_eq!(out.dim(), 2);
        assert!(out.steps <= 2);
        assert_eq!(out.dims, vec![1, 2, 2]);
    }

    #[test]
    fn sum_escapes_with_linear_trace() {
        let s = OperatorExpr::sum(vec![shift_odd(), shift_even()]);
        let out = stabilize(&s, &x(0), Some(16), 64).unwrap();
        assert_eq!(out.status, KrylovStatus::DegreeEscape);
        let want: Vec<Degree> = (0..=17).map(Degree::Finite).collect();
        assert_eq!(out.degree_trace, want);
    }

    #[test]
    fn zero_operator_one_step() {
        let z = OperatorExpr::sum(vec![]);
        let out = stabilize(&z, &x(3), None, 64).unwrap();
        assert_eq!(out.status, KrylovStatus::Stabilized);
        assert_eq!(out.steps, 1);
        assert_eq!(out.dim(), 1);
        assert_eq!(out.degree_trace, vec![Degree::Finite(3), Degree::NegInfinity]);
    }

    #[test]
    fn step_cap_reported() {
        let s = OperatorExpr::sum(vec![shift_odd(), shift_even()]);
        let out = stabilize(&s, &x(0), None, 5).unwrap();
        assert_eq!(out.status, KrylovStatus::NoStabilization);
        assert_eq!(out.steps, 5);
    }
}
