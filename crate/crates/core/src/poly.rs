//! Multivariate polynomials with `f64` coefficients over a fixed graded
//! monomial order.
//!
//! Monomials are ordered graded-lexicographically with `x1 > x2 > ...`:
//! total degree first, and inside one degree the monomial with the larger
//! leading exponent comes first, so the degree-2 block in two variables reads
//! `x1^2, x1*x2, x2^2`. Every matrix, file format and basis in the crate uses
//! this order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Coefficients with magnitude below this are treated as exact zeros.
pub const PRUNE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    VariableMismatch { left: usize, right: usize },
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    PointLength { expected: usize, got: usize },
    #[error("polynomials need at least one variable")]
    NoVariables,
}

/// Exponent vector `α ∈ ℕ₀ⁿ` of the monomial `x^α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `x_i` as a multi-index (0-based `i`).
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn univariate(k: u32) -> Self {
        MultiIndex(vec![k])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.n(), other.n());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn monomial_value(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Degree of a polynomial. The zero polynomial has degree `NegInfinity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(u32),
}

impl Degree {
    pub fn finite(self) -> Option<u32> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(k) => Some(k),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Degree::Finite(_))
    }

    /// `self ≤ bound` with `-∞ ≤ anything`.
    pub fn at_most(self, bound: u32) -> bool {
        match self {
            Degree::NegInfinity => true,
            Degree::Finite(k) => k <= bound,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => write!(f, "-inf"),
            Degree::Finite(k) => write!(f, "{k}"),
        }
    }
}

// Serialized as an integer, `null` for the zero polynomial.
impl Serialize for Degree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.finite().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Degree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match Option::<u32>::deserialize(d)? {
            Some(k) => Degree::Finite(k),
            None => Degree::NegInfinity,
        })
    }
}

/// Finitely supported coefficient map `α ↦ p_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(MultiIndex::zeros(n), c)
    }

    pub fn monomial(alpha: MultiIndex, c: f64) -> Self {
        let n = alpha.n();
        let mut p = Polynomial::zero(n);
        p.add_term(alpha, c);
        p
    }

    /// `x_i` (0-based index).
    pub fn var(n: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(n, i), 1.0)
    }

    /// Builds from `(exponents, coefficient)` pairs; repeated exponents are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if n == 0 {
            return Err(PolyError::NoVariables);
        }
        let mut p = Polynomial::zero(n);
        for (e, c) in terms {
            if e.len() != n {
                return Err(PolyError::VariableMismatch {
                    left: n,
                    right: e.len(),
                });
            }
            p.add_term(MultiIndex(e), c);
        }
        Ok(p)
    }

    /// Univariate polynomial from coefficients `[c0, c1, c2, ...]`.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let mut p = Polynomial::zero(1);
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::univariate(k as u32), c);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        debug_assert_eq!(alpha.n(), self.n);
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v.abs() < PRUNE_THRESHOLD {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.abs() >= PRUNE_THRESHOLD {
                    v.insert(c);
                }
            }
        }
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Terms in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Degree {
        self.terms
            .keys()
            .map(MultiIndex::degree)
            .max()
            .map_or(Degree::NegInfinity, Degree::Finite)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `∑_{|α|=k} p_α x^α`.
    pub fn homogeneous_component(&self, k: u32) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| a.degree() == k)
                .map(|(a, &c)| (a.clone(), c))
                .collect(),
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.n {
            return Err(PolyError::PointLength {
                expected: self.n,
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(a, &c)| c * a.monomial_value(point))
            .sum())
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (a, &v) in &self.terms {
            out.add_term(a.clone(), c * v);
        }
        out
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Polynomial) {
        assert_eq!(self.n, other.n, "variable count mismatch");
        if c == 0.0 {
            return;
        }
        for (a, &v) in &other.terms {
            self.add_term(a.clone(), c * v);
        }
    }

    fn check_n(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.n != other.n {
            Err(PolyError::VariableMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_n(other)?;
        let mut out = self.clone();
        out.axpy(1.0, other);
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_n(other)?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_n(other)?;
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, &u) in &self.terms {
            for (b, &v) in &other.terms {
                *acc.entry(a.add(b)).or_insert(0.0) += u * v;
            }
        }
        acc.retain(|_, c| c.abs() >= PRUNE_THRESHOLD);
        Ok(Polynomial {
            n: self.n,
            terms: acc,
        })
    }

    /// Largest coefficient-wise difference `max_α |p_α − q_α|`.
    pub fn max_abs_diff(&self, other: &Polynomial) -> f64 {
        let mut m: f64 = 0.0;
        for (a, &c) in &self.terms {
            m = m.max((c - other.coeff(a)).abs());
        }
        for (a, &c) in &other.terms {
            if !self.terms.contains_key(a) {
                m = m.max(c.abs());
            }
        }
        m
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    /// Panics on mismatched variable counts; use [`Polynomial::checked_add`] otherwise.
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("variable count mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("variable count mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("variable count mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            let factors: Vec<String> = a
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("x{}", j + 1)
                    } else {
                        format!("x{}^{}", j + 1, e)
                    }
                })
                .collect();
            let abs = c.abs();
            if factors.is_empty() {
                write!(f, "{abs}")?;
            } else if abs == 1.0 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{abs}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyRepr {
            n: self.n,
            terms: self.terms.iter().map(|(a, &c)| (a.0.clone(), c)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        Polynomial::from_terms(repr.n, repr.terms).map_err(serde::de::Error::custom)
    }
}

/// All monomials of degree `≤ d` in `n` variables, in graded order.
#[derive(Debug, Clone)]
pub struct GradedBasis {
    n: usize,
    d: u32,
    order: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

impl GradedBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree_bound(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.order
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.order[i]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    /// Coordinates of `p` in this basis, or the first monomial of `p` that
    /// lies outside the span.
    pub fn coordinates(&self, p: &Polynomial) -> Result<Vec<f64>, MultiIndex> {
        let mut v = vec![0.0; self.len()];
        for (a, c) in p.terms() {
            match self.position(a) {
                Some(i) => v[i] = c,
                None => return Err(a.clone()),
            }
        }
        Ok(v)
    }

    pub fn polynomial(&self, coords: &[f64]) -> Polynomial {
        let mut p = Polynomial::zero(self.n);
        for (a, &c) in self.order.iter().zip(coords) {
            p.add_term(a.clone(), c);
        }
        p
    }
}

/// Enumerates `{α ∈ ℕ₀ⁿ : |α| ≤ d}` in graded order.
pub fn monomial_basis(n: usize, d: u32) -> GradedBasis {
    assert!(n >= 1, "monomial_basis needs n >= 1");
    let mut order = Vec::new();
    let mut buf = vec![0u32; n];
    for deg in 0..=d {
        compositions(deg, 0, &mut buf, &mut order);
    }
    let position = order
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    GradedBasis {
        n,
        d,
        order,
        position,
    }
}

// Exponent vectors with the given total, leading coordinate descending.
fn compositions(remaining: u32, slot: usize, buf: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if slot + 1 == buf.len() {
        buf[slot] = remaining;
        out.push(MultiIndex(buf.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        buf[slot] = e;
        compositions(remaining - e, slot + 1, buf, out);
    }
    buf[slot] = 0;
}

/// `binomial(n + d, d)`, the dimension of the degree-`≤ d` polynomials.
pub fn basis_size(n: usize, d: u32) -> usize {
    let mut r: u128 = 1;
    for i in 1..=d as u128 {
        r = r * (n as u128 + i) / i;
    }
    r as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(c: &[f64]) -> Polynomial {
        Polynomial::univariate(c)
    }

    #[test]
    fn basis_orders() {
        let b = monomial_basis(1, 2);
        assert_eq!(
            b.monomials(),
            &[
                MultiIndex::univariate(0),
                MultiIndex::univariate(1),
                MultiIndex::univariate(2)
            ]
        );
        let b = monomial_basis(2, 1);
        let e: Vec<_> = b.monomials().iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(e, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        let b = monomial_basis(2, 2);
        let e: Vec<_> = b.monomials().iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(e[3..], [vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn basis_size_three_vars_degree_four() {
        // brute-force count over the box [0,4]^3
        let mut count = 0;
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                for c in 0..=4u32 {
                    if a + b + c <= 4 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 35);
        assert_eq!(monomial_basis(3, 4).len(), count);
    }

    #[test]
    fn basis_positions_invert_order() {
        let b = monomial_basis(3, 5);
        for (i, a) in b.monomials().iter().enumerate() {
            assert_eq!(b.position(a), Some(i));
        }
        let mut sorted = b.monomials().to_vec();
        sorted.sort();
        assert_eq!(sorted, b.monomials());
    }

    #[test]
    fn difference_of_squares() {
        let p = &uni(&[1.0, 1.0]) * &uni(&[-1.0, 1.0]);
        assert_eq!(p, uni(&[-1.0, 0.0, 1.0]));
    }

    #[test]
    fn additive_inverse_is_zero() {
        let p = uni(&[3.0, -2.0, 0.5]);
        let z = &p + &p.scale(-1.0);
        assert!(z.is_zero());
        assert_eq!(z.degree(), Degree::NegInfinity);
    }

    #[test]
    fn square_of_bivariate_quadratic() {
        let q = Polynomial::from_terms(2, [(vec![0, 0], 1.0), (vec![2, 0], 1.0), (vec![0, 2], 1.0)])
            .unwrap();
        let got = &q * &q;
        let expected = Polynomial::from_terms(
            2,
            [
                (vec![0, 0], 1.0),
                (vec![2, 0], 2.0),
                (vec![0, 2], 2.0),
                (vec![4, 0], 1.0),
                (vec![2, 2], 2.0),
                (vec![0, 4], 1.0),
            ],
        )
        .unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn mismatched_variables() {
        let p = Polynomial::var(1, 0);
        let q = Polynomial::var(2, 1);
        assert!(matches!(
            p.checked_add(&q),
            Err(PolyError::VariableMismatch { .. })
        ));
        assert!(p.checked_mul(&q).is_err());
        assert!(matches!(
            p.evaluate(&[1.0, 2.0]),
            Err(PolyError::PointLength { .. })
        ));
    }

    #[test]
    fn homogeneous_parts() {
        let p = uni(&[1.0, 3.0, 0.0, 1.0]);
        assert_eq!(p.homogeneous_component(1), uni(&[0.0, 3.0]));
        assert!(p.homogeneous_component(2).is_zero());
        let m = crate::builtin::motzkin();
        let top = m.homogeneous_component(6);
        let expected =
            Polynomial::from_terms(2, [(vec![4, 2], 1.0), (vec![2, 4], 1.0)]).unwrap();
        assert_eq!(top, expected);
    }

    #[test]
    fn evaluation() {
        assert_eq!(uni(&[1.0, 0.0, 1.0]).evaluate(&[2.0]).unwrap(), 5.0);
        assert_eq!(crate::builtin::motzkin().evaluate(&[1.0, 1.0]).unwrap(), 0.0);
        let p = uni(&[7.5, 2.0, -1.0]);
        assert_eq!(p.evaluate(&[0.0]).unwrap(), 7.5);
    }

    #[test]
    fn json_terms_sorted() {
        let p = Polynomial::from_terms(2, [(vec![0, 2], 1.0), (vec![0, 0], 2.0), (vec![1, 0], -1.5)])
            .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":2,"terms":[[[0,0],2.0],[[1,0],-1.5],[[0,2],1.0]]}"#);
        let back: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Polynomial>(r#"{"n":2,"terms":[[[1],1.0]]}"#).is_err());
    }

    #[test]
    fn degree_sentinel_orders_below_everything() {
        assert!(Degree::NegInfinity < Degree::Finite(0));
        assert!(Degree::NegInfinity.at_most(0));
        assert_eq!(serde_json::to_string(&Degree::NegInfinity).unwrap(), "null");
    }
}
