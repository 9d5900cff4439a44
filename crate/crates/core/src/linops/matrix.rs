use nalgebra::DMatrix;

use super::{op_apply, OperatorError, OperatorExpr};
use crate::poly::{GradedBasis, Polynomial};

pub const DEFAULT_EXPM_TOL: f64 = 1e-12;

const MAX_TERMS: usize = 60;

/// Restriction of an operator to `span(basis)`; column `j` holds the
/// coordinates of `A(basis[j])`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub basis: GradedBasis,
    pub entries: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Matrix action on a polynomial of the span. Returns the first
    /// monomial of `p` outside the basis as the error.
    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial, crate::poly::MultiIndex> {
        let v = nalgebra::DVector::from_vec(self.basis.coordinates(p)?);
        let w = &self.entries * v;
        Ok(self.basis.polynomial(w.as_slice()))
    }
}

pub fn restrict_matrix(a: &OperatorExpr, basis: &GradedBasis) -> Result<OperatorMatrix, OperatorError> {
    let m = basis.len();
    let mut entries = DMatrix::zeros(m, m);
    for (j, alpha) in basis.monomials().iter().enumerate() {
        let image = op_apply(a, &Polynomial::monomial(alpha.clone(), 1.0))?;
        let col = basis.coordinates(&image).map_err(|escaping| OperatorError::NotInvariant {
            witness: alpha.clone(),
            escaping,
        })?;
        for (i, c) in col.into_iter().enumerate() {
            entries[(i, j)] = c;
        }
    }
    Ok(OperatorMatrix {
        basis: basis.clone(),
        entries,
    })
}

/// `e^{tM}` for an operator matrix.
pub fn expm(m: &OperatorMatrix, t: f64, tol: f64) -> Result<OperatorMatrix, OperatorError> {
    Ok(OperatorMatrix {
        basis: m.basis.clone(),
        entries: expm_dense(&m.entries, t, tol)?,
    })
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scaling and squaring: scale `tM` by `2^-s` until its 1-norm is at most
/// 0.5, sum the Taylor series until the next term is below `tol` relative to
/// the partial sum, then square `s` times.
pub fn expm_dense(m: &DMatrix<f64>, t: f64, tol: f64) -> Result<DMatrix<f64>, OperatorError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    let a = m * t;
    let nrm = norm1(&a);
    if !nrm.is_finite() {
        return Err(OperatorError::Overflow { norm: nrm });
    }
    let mut s = 0i32;
    let mut scaled = nrm;
    while scaled > 0.5 {
        scaled /= 2.0;
        s += 1;
    }
    let b = a * 2f64.powi(-s);

    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=MAX_TERMS {
        term = &term * &b / k as f64;
        sum += &term;
        if norm1(&term) <= tol * norm1(&sum) {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    if sum.iter().any(|x| !x.is_finite()) {
        return Err(OperatorError::Overflow { norm: nrm });
    }
    Ok(sum)
}
