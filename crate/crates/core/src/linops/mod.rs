//! Linear operators on polynomial spaces.
//!
//! An [`OperatorExpr`] is a lazily evaluated expression tree. Leaves are
//! rank-one maps `p ↦ l(p)·f`, finite monomial maps, and univariate monomial
//! rules; inner nodes are sums, compositions, scalings and commutators. Every
//! linear operator on polynomials can be written as `∑ q_α ∂^α` with unique
//! polynomial coefficients, but that normal form is never built here: the
//! constructions in this crate only need the leaves above, and products such
//! as `AB` stay symbolic so that operators whose exponential is undefined can
//! still be applied to single polynomials.

mod exp;
mod krylov;
mod matrix;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::{FunctionalError, LinearFunctional};
use crate::poly::{Degree, MultiIndex, Polynomial};

pub use exp::{exp_apply, exp_apply_many, rank_one_exp};
pub use krylov::{stabilize, KrylovOutcome, KrylovStatus, DROP_TOLERANCE};
pub use matrix::{expm, expm_dense, restrict_matrix, OperatorMatrix, DEFAULT_EXPM_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("variable count mismatch: operator has {expected}, input has {got}")]
    VariableMismatch { expected: usize, got: usize },
    #[error("monomial rule covers x^{k} {matches} times (need exactly once)")]
    RuleCoverage { k: u32, matches: usize },
    #[error("monomial rule maps x^{k} to a negative exponent")]
    NegativeExponent { k: u32 },
    #[error("invalid rule modulus/residue ({residue} mod {modulus})")]
    InvalidRule { residue: u32, modulus: u32 },
    #[error("monomial rules are univariate only")]
    RuleNotUnivariate,
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("image of {witness:?} has term {escaping:?} outside the basis")]
    NotInvariant {
        witness: MultiIndex,
        escaping: MultiIndex,
    },
    #[error("matrix exponential overflowed (scaled norm {norm})")]
    Overflow { norm: f64 },
    #[error("no finite invariant subspace found ({cause:?}); degree trace {degree_trace:?}")]
    BlowUp {
        degree_trace: Vec<Degree>,
        cause: KrylovStatus,
    },
    #[error("unknown builtin operator {0:?}")]
    UnknownBuiltin(String),
}

/// Image of monomials that are not listed in a [`FiniteMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDefault {
    Zero,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMap {
    pub n: usize,
    pub images: BTreeMap<MultiIndex, Polynomial>,
    pub default: MapDefault,
}

impl FiniteMap {
    pub fn new(n: usize, default: MapDefault) -> Self {
        FiniteMap {
            n,
            images: BTreeMap::new(),
            default,
        }
    }

    pub fn with_image(mut self, alpha: MultiIndex, image: Polynomial) -> Self {
        self.images.insert(alpha, image);
        self
    }
}

#[derive(Serialize, Deserialize)]
struct FiniteMapRepr {
    n: usize,
    images: Vec<(MultiIndex, Polynomial)>,
    default: MapDefault,
}

impl Serialize for FiniteMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FiniteMapRepr {
            n: self.n,
            images: self
                .images
                .iter()
                .map(|(a, p)| (a.clone(), p.clone()))
                .collect(),
            default: self.default,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = FiniteMapRepr::deserialize(d)?;
        Ok(FiniteMap {
            n: r.n,
            images: r.images.into_iter().collect(),
            default: r.default,
        })
    }
}

/// `x^k ↦ coefficient · x^{k+shift}` for `k ≥ k_min` with `k ≡ residue (mod modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleTerm {
    pub residue: u32,
    pub modulus: u32,
    pub k_min: u32,
    pub coefficient: f64,
    pub shift: i64,
}

impl RuleTerm {
    fn matches(&self, k: u32) -> bool {
        k >= self.k_min && k % self.modulus == self.residue
    }
}

/// Univariate operator given by periodic rules on monomials. Overrides fix
/// the image of individual small powers and shadow the rules there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialRule {
    pub rules: Vec<RuleTerm>,
    #[serde(default)]
    pub overrides: Vec<(u32, Polynomial)>,
}

impl MonomialRule {
    pub fn new(rules: Vec<RuleTerm>) -> Self {
        MonomialRule {
            rules,
            overrides: Vec::new(),
        }
    }

    fn override_for(&self, k: u32) -> Option<&Polynomial> {
        self.overrides.iter().find(|(j, _)| *j == k).map(|(_, p)| p)
    }

    /// Checks that every `k ∈ ℕ₀` is covered exactly once. Rule coverage is
    /// periodic past `max k_min` with period `lcm(moduli)`, so one period is
    /// enough.
    pub fn validate(&self) -> Result<(), OperatorError> {
        let mut period: u64 = 1;
        let mut start = 0u32;
        for r in &self.rules {
            if r.modulus == 0 || r.residue >= r.modulus {
                return Err(OperatorError::InvalidRule {
                    residue: r.residue,
                    modulus: r.modulus,
                });
            }
            period = lcm(period, r.modulus as u64);
            start = start.max(r.k_min);
        }
        for (k, p) in &self.overrides {
            if p.n() != 1 {
                return Err(OperatorError::RuleNotUnivariate);
            }
            start = start.max(k + 1);
        }
        let end = start as u64 + period;
        for k in 0..end as u32 {
            if self.override_for(k).is_some() {
                continue;
            }
            let hits: Vec<&RuleTerm> = self.rules.iter().filter(|r| r.matches(k)).collect();
            if hits.len() != 1 {
                return Err(OperatorError::RuleCoverage {
                    k,
                    matches: hits.len(),
                });
            }
            if k as i64 + hits[0].shift < 0 {
                return Err(OperatorError::NegativeExponent { k });
            }
        }
        Ok(())
    }

    pub fn image(&self, k: u32) -> Result<Polynomial, OperatorError> {
        if let Some(p) = self.override_for(k) {
            return Ok(p.clone());
        }
        let mut hit = None;
        let mut count = 0;
        for r in &self.rules {
            if r.matches(k) {
                hit = Some(r);
                count += 1;
            }
        }
        match (hit, count) {
            (Some(r), 1) => {
                let e = k as i64 + r.shift;
                if e < 0 {
                    return Err(OperatorError::NegativeExponent { k });
                }
                Ok(Polynomial::monomial(
                    MultiIndex::univariate(e as u32),
                    r.coefficient,
                ))
            }
            _ => Err(OperatorError::RuleCoverage { k, matches: count }),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    rename_all = "snake_case",
    try_from = "OperatorDescriptor",
    into = "OperatorDescriptor"
)]
pub enum OperatorExpr {
    /// `p ↦ functional(p) · f`.
    RankOne {
        functional: LinearFunctional,
        f: Polynomial,
    },
    FiniteMap(FiniteMap),
    Rule(MonomialRule),
    Sum(Vec<OperatorExpr>),
    /// `Compose(A, B)` is `A ∘ B`: apply `B` first.
    Compose(Box<OperatorExpr>, Box<OperatorExpr>),
    Scale(f64, Box<OperatorExpr>),
    /// `AB − BA`.
    Bracket(Box<OperatorExpr>, Box<OperatorExpr>),
}

impl OperatorExpr {
    pub fn rank_one(functional: LinearFunctional, f: Polynomial) -> Self {
        OperatorExpr::RankOne { functional, f }
    }

    pub fn sum(terms: Vec<OperatorExpr>) -> Self {
        OperatorExpr::Sum(terms)
    }

    pub fn compose(a: OperatorExpr, b: OperatorExpr) -> Self {
        OperatorExpr::Compose(Box::new(a), Box::new(b))
    }

    pub fn scale(c: f64, a: OperatorExpr) -> Self {
        OperatorExpr::Scale(c, Box::new(a))
    }

    pub fn bracket(a: OperatorExpr, b: OperatorExpr) -> Self {
        OperatorExpr::Bracket(Box::new(a), Box::new(b))
    }

    /// Variable count, when some leaf fixes it.
    pub fn n(&self) -> Option<usize> {
        match self {
            OperatorExpr::RankOne { functional, .. } => Some(functional.n),
            OperatorExpr::FiniteMap(m) => Some(m.n),
            OperatorExpr::Rule(_) => Some(1),
            OperatorExpr::Sum(v) => v.iter().find_map(OperatorExpr::n),
            OperatorExpr::Scale(_, a) => a.n(),
            OperatorExpr::Compose(a, b) | OperatorExpr::Bracket(a, b) => a.n().or_else(|| b.n()),
        }
    }

    /// Structural checks: consistent variable counts and total rules.
    pub fn validate(&self) -> Result<(), OperatorError> {
        let n = self.n();
        self.validate_with(n)
    }

    fn validate_with(&self, n: Option<usize>) -> Result<(), OperatorError> {
        let check = |m: usize| match n {
            Some(e) if e != m => Err(OperatorError::VariableMismatch {
                expected: e,
                got: m,
            }),
            _ => Ok(()),
        };
        match self {
            OperatorExpr::RankOne { functional, f } => {
                check(functional.n)?;
                check(f.n())
            }
            OperatorExpr::FiniteMap(m) => {
                check(m.n)?;
                for (a, p) in &m.images {
                    check(a.n())?;
                    check(p.n())?;
                }
                Ok(())
            }
            OperatorExpr::Rule(r) => {
                check(1)?;
                r.validate()
            }
            OperatorExpr::Sum(v) => v.iter().try_for_each(|a| a.validate_with(n)),
            OperatorExpr::Scale(_, a) => a.validate_with(n),
            OperatorExpr::Compose(a, b) | OperatorExpr::Bracket(a, b) => {
                a.validate_with(n)?;
                b.validate_with(n)
            }
        }
    }

    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial, OperatorError> {
        op_apply(self, p)
    }
}

/// Applies `A` to `p` by linear extension of the node semantics.
pub fn op_apply(a: &OperatorExpr, p: &Polynomial) -> Result<Polynomial, OperatorError> {
    let n = p.n();
    match a {
        OperatorExpr::RankOne { functional, f } => {
            if f.n() != n {
                return Err(OperatorError::VariableMismatch {
                    expected: f.n(),
                    got: n,
                });
            }
            let v = functional.apply(p)?;
            Ok(f.scale(v))
        }
        OperatorExpr::FiniteMap(m) => {
            if m.n != n {
                return Err(OperatorError::VariableMismatch {
                    expected: m.n,
                    got: n,
                });
            }
            let mut out = Polynomial::zero(n);
            for (alpha, c) in p.terms() {
                match m.images.get(alpha) {
                    Some(img) => out.axpy(c, img),
                    None => {
                        if m.default == MapDefault::Identity {
                            out.add_term(alpha.clone(), c);
                        }
                    }
                }
            }
            Ok(out)
        }
        OperatorExpr::Rule(r) => {
            if n != 1 {
                return Err(OperatorError::RuleNotUnivariate);
            }
            let mut out = Polynomial::zero(1);
            for (alpha, c) in p.terms() {
                out.axpy(c, &r.image(alpha.exponents()[0])?);
            }
            Ok(out)
        }
        OperatorExpr::Sum(terms) => {
            let mut out = Polynomial::zero(n);
            for t in terms {
                out.axpy(1.0, &op_apply(t, p)?);
            }
            Ok(out)
        }
        OperatorExpr::Compose(outer, inner) => op_apply(outer, &op_apply(inner, p)?),
        OperatorExpr::Scale(c, inner) => Ok(op_apply(inner, p)?.scale(*c)),
        OperatorExpr::Bracket(x, y) => {
            let xy = op_apply(x, &op_apply(y, p)?)?;
            let yx = op_apply(y, &op_apply(x, p)?)?;
            Ok(&xy - &yx)
        }
    }
}

/// Reference to a builtin operator inside a JSON descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BuiltinRef {
    Name(String),
    Bounded { name: String, bound: Option<u32> },
}

/// JSON form of [`OperatorExpr`]: the same tree plus `builtin` leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorDescriptor {
    RankOne {
        functional: LinearFunctional,
        f: Polynomial,
    },
    FiniteMap(FiniteMap),
    Rule(MonomialRule),
    Sum(Vec<OperatorDescriptor>),
    Compose(Box<OperatorDescriptor>, Box<OperatorDescriptor>),
    Scale(f64, Box<OperatorDescriptor>),
    Bracket(Box<OperatorDescriptor>, Box<OperatorDescriptor>),
    Builtin(BuiltinRef),
}

impl TryFrom<OperatorDescriptor> for OperatorExpr {
    type Error = OperatorError;

    fn try_from(d: OperatorDescriptor) -> Result<Self, Self::Error> {
        let expr = match d {
            OperatorDescriptor::RankOne { functional, f } => OperatorExpr::RankOne { functional, f },
            OperatorDescriptor::FiniteMap(m) => OperatorExpr::FiniteMap(m),
            OperatorDescriptor::Rule(r) => OperatorExpr::Rule(r),
            OperatorDescriptor::Sum(v) => OperatorExpr::Sum(
                v.into_iter()
                    .map(OperatorExpr::try_from)
                    .collect::<Result<_, _>>()?,
            ),
            OperatorDescriptor::Compose(a, b) => {
                OperatorExpr::compose((*a).try_into()?, (*b).try_into()?)
            }
            OperatorDescriptor::Scale(c, a) => OperatorExpr::scale(c, (*a).try_into()?),
            OperatorDescriptor::Bracket(a, b) => {
                OperatorExpr::bracket((*a).try_into()?, (*b).try_into()?)
            }
            OperatorDescriptor::Builtin(r) => {
                let (name, bound) = match r {
                    BuiltinRef::Name(name) => (name, None),
                    BuiltinRef::Bounded { name, bound } => (name, bound),
                };
                crate::builtin::operator(&name, bound)?
            }
        };
        expr.validate()?;
        Ok(expr)
    }
}

impl From<OperatorExpr> for OperatorDescriptor {
    fn from(e: OperatorExpr) -> Self {
        match e {
            OperatorExpr::RankOne { functional, f } => OperatorDescriptor::RankOne { functional, f },
            OperatorExpr::FiniteMap(m) => OperatorDescriptor::FiniteMap(m),
            OperatorExpr::Rule(r) => OperatorDescriptor::Rule(r),
            OperatorExpr::Sum(v) => OperatorDescriptor::Sum(v.into_iter().map(Into::into).collect()),
            OperatorExpr::Compose(a, b) => {
                OperatorDescriptor::Compose(Box::new((*a).into()), Box::new((*b).into()))
            }
            OperatorExpr::Scale(c, a) => OperatorDescriptor::Scale(c, Box::new((*a).into())),
            OperatorExpr::Bracket(a, b) => {
                OperatorDescriptor::Bracket(Box::new((*a).into()), Box::new((*b).into()))
            }
        }
    }
}
