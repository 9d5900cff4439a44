use nalgebra::DVector;

use super::krylov::{stabilize, KrylovStatus};
use super::matrix::{expm_dense, DEFAULT_EXPM_TOL};
use super::{OperatorError, OperatorExpr};
use crate::moments::{FunctionalError, LinearFunctional};
use crate::poly::{basis_size, Polynomial};

const SMALL_EXPONENT: f64 = 1e-8;

/// `e^{tA}p` for `A = l ⊗ f`: `p + (l(p)/λ)(e^{tλ} − 1) f` with `λ = l(f)`.
/// Near `tλ = 0` the factor `(e^{tλ} − 1)/λ` is replaced by its series
/// `t(1 + tλ/2)`.
pub fn rank_one_exp(
    l: &LinearFunctional,
    f: &Polynomial,
    t: f64,
    p: &Polynomial,
) -> Result<Polynomial, FunctionalError> {
    if t == 0.0 {
        return Ok(p.clone());
    }
    let lp = l.apply(p)?;
    if lp == 0.0 {
        return Ok(p.clone());
    }
    let lambda = l.apply(f)?;
    let x = t * lambda;
    let factor = if x.abs() < SMALL_EXPONENT {
        t * (1.0 + x / 2.0)
    } else {
        x.exp_m1() / lambda
    };
    let mut out = p.clone();
    out.axpy(lp * factor, f);
    Ok(out)
}

/// `e^{tA}p`, computed on the stabilized subspace through `p`. Fails with
/// [`OperatorError::BlowUp`] when no invariant subspace of degree at most
/// `bound` is found.
pub fn exp_apply(a: &OperatorExpr, t: f64, p: &Polynomial, bound: u32) -> Result<Polynomial, OperatorError> {
    if t == 0.0 {
        return Ok(p.clone());
    }
    if let OperatorExpr::RankOne { functional, f } = a {
        if f.n() != p.n() {
            return Err(OperatorError::VariableMismatch {
                expected: f.n(),
                got: p.n(),
            });
        }
        return Ok(rank_one_exp(functional, f, t, p)?);
    }
    Ok(exp_apply_many(a, &[t], p, bound)?.remove(0))
}

/// `e^{tA}p` for several times, sharing one stabilization.
pub fn exp_apply_many(
    a: &OperatorExpr,
    ts: &[f64],
    p: &Polynomial,
    bound: u32,
) -> Result<Vec<Polynomial>, OperatorError> {
    let n = p.n();
    let max_steps = basis_size(n, bound) + 1;
    let mut k = stabilize(a, p, Some(bound), max_steps)?;
    if k.status != KrylovStatus::Stabilized {
        return Err(OperatorError::BlowUp {
            degree_trace: k.degree_trace,
            cause: k.status,
        });
    }
    if k.dim() == 0 {
        return Ok(ts.iter().map(|_| Polynomial::zero(n)).collect());
    }
    let (h, _) = k.compressed(a)?;
    let mut e0 = DVector::zeros(k.dim());
    e0[0] = k.norm_p;
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        if t == 0.0 {
            out.push(p.clone());
            continue;
        }
        let y = expm_dense(&h, t, DEFAULT_EXPM_TOL)? * &e0;
        let mut coords = vec![0.0; k.space.dim()];
        for (j, q) in k.basis.vectors().iter().enumerate() {
            for (c, qi) in coords.iter_mut().zip(q) {
                *c += y[j] * qi;
            }
        }
        out.push(k.space.polynomial(n, &coords));
    }
    Ok(out)
}
