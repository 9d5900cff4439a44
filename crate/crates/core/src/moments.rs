//! Linear functionals on polynomials: Gaussian-weighted moments over `ℝⁿ` and
//! the orthant `[0,∞)ⁿ`, their degree-graded restrictions, Riesz functionals
//! of moment tables, point evaluation, and explicit coefficient tables.
//!
//! The weight is the product Gaussian `e^{-(x1²+⋯+xn²)}`, so every moment
//! factors into univariate moments `∫ x^k e^{-x²} dx = Γ((k+1)/2)` (zero for
//! odd `k` on the full line). Gamma values at half-integers come from the
//! recurrence `Γ(z+1) = z Γ(z)` started at `Γ(1/2) = √π` and `Γ(1) = 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::poly::{MultiIndex, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("functional expects {expected} variables, polynomial has {got}")]
    VariableMismatch { expected: usize, got: usize },
    #[error("polynomial degree {degree} exceeds table bound {bound}")]
    DegreeExceedsBound { degree: u32, bound: u32 },
    #[error("moment table has no entry for {0:?}")]
    MissingEntry(MultiIndex),
    #[error("odd graded functional needs d >= 1")]
    OddLevelZero,
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { expected: usize, got: usize },
}

/// `Γ((k+1)/2)` by exact recurrence from `Γ(1/2)` or `Γ(1)`.
pub fn half_gamma(k: u32) -> f64 {
    let (mut z, mut val) = if k % 2 == 0 {
        (0.5, std::f64::consts::PI.sqrt())
    } else {
        (1.0, 1.0)
    };
    let target = (k as f64 + 1.0) / 2.0;
    while z < target {
        val *= z;
        z += 1.0;
    }
    val
}

/// `∫_{ℝⁿ} x^α e^{-|x|²} dx`.
pub fn gaussian_moment_full(alpha: &MultiIndex) -> f64 {
    alpha
        .exponents()
        .iter()
        .map(|&k| if k % 2 == 1 { 0.0 } else { half_gamma(k) })
        .product()
}

/// `∫_{[0,∞)ⁿ} x^α e^{-|x|²} dx`.
pub fn gaussian_moment_orthant(alpha: &MultiIndex) -> f64 {
    alpha
        .exponents()
        .iter()
        .map(|&k| half_gamma(k) / 2.0)
        .product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Full,
    Orthant,
}

impl Domain {
    pub fn moment(self, alpha: &MultiIndex) -> f64 {
        match self {
            Domain::Full => gaussian_moment_full(alpha),
            Domain::Orthant => gaussian_moment_orthant(alpha),
        }
    }
}

/// Which homogeneous degree a graded functional reads: `2d` or `2d − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// Sequence `α ↦ s_α`. Unlike [`Polynomial`], zero entries are kept so that
/// "present and zero" differs from "missing".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentTable {
    n: usize,
    entries: BTreeMap<MultiIndex, f64>,
}

impl MomentTable {
    pub fn new(n: usize) -> Self {
        MomentTable {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Table of `f(α)` for every `|α| ≤ d`.
    pub fn from_fn(n: usize, d: u32, f: impl Fn(&MultiIndex) -> f64) -> Self {
        let basis = crate::poly::monomial_basis(n, d);
        let mut t = MomentTable::new(n);
        for a in basis.monomials() {
            t.insert(a.clone(), f(a));
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, alpha: MultiIndex, value: f64) {
        assert_eq!(alpha.n(), self.n);
        self.entries.insert(alpha, value);
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries.get(alpha).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.entries.iter().map(|(a, &v)| (a, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    n: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl Serialize for MomentTable {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TableRepr {
            n: self.n,
            terms: self
                .entries
                .iter()
                .map(|(a, &v)| (a.exponents().to_vec(), v))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = TableRepr::deserialize(d)?;
        let mut t = MomentTable::new(repr.n);
        for (e, v) in repr.terms {
            if e.len() != repr.n {
                return Err(serde::de::Error::custom("exponent length mismatch"));
            }
            t.entries.insert(MultiIndex::new(e), v);
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FunctionalKind {
    /// `p ↦ ∫_{ℝⁿ} p e^{-|x|²}`.
    GaussianFull,
    /// `p ↦ ∫_{[0,∞)ⁿ} p e^{-|x|²}`.
    GaussianOrthant,
    /// Gaussian moment of the homogeneous component of degree `2d` (even)
    /// or `2d − 1` (odd) only.
    GradedGaussian {
        d: u32,
        parity: Parity,
        domain: Domain,
    },
    /// `L_s(x^α) = s_α`.
    Riesz { table: MomentTable },
    /// `f ↦ f(y)`.
    PointEval { y: Vec<f64> },
    /// Table lookup; absent entries within the bound are zero.
    Explicit { table: MomentTable, degree_bound: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    pub n: usize,
    #[serde(flatten)]
    pub kind: FunctionalKind,
}

impl LinearFunctional {
    pub fn gaussian_full(n: usize) -> Self {
        LinearFunctional {
            n,
            kind: FunctionalKind::GaussianFull,
        }
    }

    pub fn gaussian_orthant(n: usize) -> Self {
        LinearFunctional {
            n,
            kind: FunctionalKind::GaussianOrthant,
        }
    }

    pub fn graded(n: usize, d: u32, parity: Parity, domain: Domain) -> Result<Self, FunctionalError> {
        if parity == Parity::Odd && d == 0 {
            return Err(FunctionalError::OddLevelZero);
        }
        Ok(LinearFunctional {
            n,
            kind: FunctionalKind::GradedGaussian { d, parity, domain },
        })
    }

    pub fn riesz(table: MomentTable) -> Self {
        LinearFunctional {
            n: table.n(),
            kind: FunctionalKind::Riesz { table },
        }
    }

    pub fn point_eval(y: Vec<f64>) -> Self {
        LinearFunctional {
            n: y.len(),
            kind: FunctionalKind::PointEval { y },
        }
    }

    pub fn explicit(table: MomentTable, degree_bound: u32) -> Self {
        LinearFunctional {
            n: table.n(),
            kind: FunctionalKind::Explicit {
                table,
                degree_bound,
            },
        }
    }

    /// The homogeneous degree a graded functional reads, if graded.
    pub fn selected_degree(&self) -> Option<u32> {
        match &self.kind {
            FunctionalKind::GradedGaussian { d, parity, .. } => Some(match parity {
                Parity::Even => 2 * d,
                Parity::Odd => 2 * d - 1,
            }),
            _ => None,
        }
    }

    /// Value on a single monomial `x^α`.
    pub fn monomial_value(&self, alpha: &MultiIndex) -> Result<f64, FunctionalError> {
        if alpha.n() != self.n {
            return Err(FunctionalError::VariableMismatch {
                expected: self.n,
                got: alpha.n(),
            });
        }
        match &self.kind {
            FunctionalKind::GaussianFull => Ok(gaussian_moment_full(alpha)),
            FunctionalKind::GaussianOrthant => Ok(gaussian_moment_orthant(alpha)),
            FunctionalKind::GradedGaussian { domain, .. } => {
                if Some(alpha.degree()) == self.selected_degree() {
                    Ok(domain.moment(alpha))
                } else {
                    Ok(0.0)
                }
            }
            FunctionalKind::Riesz { table } => table
                .get(alpha)
                .ok_or_else(|| FunctionalError::MissingEntry(alpha.clone())),
            FunctionalKind::PointEval { y } => {
                if y.len() != self.n {
                    return Err(FunctionalError::PointLength {
                        expected: self.n,
                        got: y.len(),
                    });
                }
                Ok(alpha.monomial_value(y))
            }
            FunctionalKind::Explicit {
                table,
                degree_bound,
            } => {
                if alpha.degree() > *degree_bound {
                    return Err(FunctionalError::DegreeExceedsBound {
                        degree: alpha.degree(),
                        bound: *degree_bound,
                    });
                }
                Ok(table.get(alpha).unwrap_or(0.0))
            }
        }
    }

    pub fn apply(&self, p: &Polynomial) -> Result<f64, FunctionalError> {
        functional_apply(self, p)
    }
}

/// Evaluates `F(p)` by linearity over the terms of `p`.
pub fn functional_apply(f: &LinearFunctional, p: &Polynomial) -> Result<f64, FunctionalError> {
    if p.n() != f.n {
        return Err(FunctionalError::VariableMismatch {
            expected: f.n,
            got: p.n(),
        });
    }
    if let FunctionalKind::Explicit { degree_bound, .. } = &f.kind {
        if let Some(deg) = p.degree().finite() {
            if deg > *degree_bound {
                return Err(FunctionalError::DegreeExceedsBound {
                    degree: deg,
                    bound: *degree_bound,
                });
            }
        }
    }
    if let FunctionalKind::PointEval { y } = &f.kind {
        return p.evaluate(y).map_err(|_| FunctionalError::PointLength {
            expected: f.n,
            got: y.len(),
        });
    }
    let mut acc = 0.0;
    for (a, c) in p.terms() {
        acc += c * f.monomial_value(a)?;
    }
    Ok(acc)
}

/// `L_s(p) = ∑ p_α s_α`.
pub fn riesz_apply(s: &MomentTable, p: &Polynomial) -> Result<f64, FunctionalError> {
    if p.n() != s.n() {
        return Err(FunctionalError::VariableMismatch {
            expected: s.n(),
            got: p.n(),
        });
    }
    p.terms().try_fold(0.0, |acc, (a, c)| {
        s.get(a)
            .map(|v| acc + c * v)
            .ok_or_else(|| FunctionalError::MissingEntry(a.clone()))
    })
}
