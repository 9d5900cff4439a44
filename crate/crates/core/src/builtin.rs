//! Named polynomials and operators used by the demos and the CLI.

use crate::linops::{FiniteMap, MapDefault, MonomialRule, OperatorError, OperatorExpr, RuleTerm};
use crate::poly::{MultiIndex, Polynomial};

/// Degree bound used for `prime_shift` when none is given.
pub const DEFAULT_PRIME_SHIFT_BOUND: u32 = 100;

/// `x₁⁴x₂² + x₁²x₂⁴ − 3x₁²x₂² + 1`.
pub fn motzkin() -> Polynomial {
    Polynomial::from_terms(
        2,
        [
            (vec![4, 2], 1.0),
            (vec![2, 4], 1.0),
            (vec![2, 2], -3.0),
            (vec![0, 0], 1.0),
        ],
    )
    .expect("motzkin terms are bivariate")
}

fn term(residue: u32, k_min: u32, shift: i64) -> RuleTerm {
    RuleTerm {
        residue,
        modulus: 2,
        k_min,
        coefficient: 1.0,
        shift,
    }
}

/// Even powers fixed, odd powers shifted up: `x^{2m} ↦ x^{2m}`, `x^{2m−1} ↦ x^{2m}`.
pub fn shift_odd() -> OperatorExpr {
    OperatorExpr::Rule(MonomialRule::new(vec![term(0, 0, 0), term(1, 1, 1)]))
}

/// Even powers shifted up, odd powers fixed: `x^{2m} ↦ x^{2m+1}`, `x^{2m−1} ↦ x^{2m−1}`.
pub fn shift_even() -> OperatorExpr {
    OperatorExpr::Rule(MonomialRule::new(vec![term(0, 0, 1), term(1, 1, 0)]))
}

/// The first `count` primes.
pub fn primes(count: usize) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(count);
    let mut c = 2u32;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// `x^{2m} ↦ x^{p_{m+1}}` for `m ≥ 1` (with `p_1 = 2, p_2 = 3, …`), every
/// other monomial to 0. Only powers `2m ≤ bound` are listed; higher even
/// powers are sent to 0 as well, so the map agrees with the infinite one on
/// `ℝ[x]_{≤ bound}`.
pub fn prime_shift(bound: u32) -> OperatorExpr {
    let top = (bound / 2) as usize;
    let ps = primes(top + 1);
    let mut map = FiniteMap::new(1, MapDefault::Zero);
    for m in 1..=top {
        map.images.insert(
            MultiIndex::univariate(2 * m as u32),
            Polynomial::monomial(MultiIndex::univariate(ps[m]), 1.0),
        );
    }
    OperatorExpr::FiniteMap(map)
}

pub const OPERATOR_NAMES: &[&str] = &[
    "shift-odd",
    "shift-even",
    "shift-sum",
    "shift-compose-oe",
    "shift-compose-eo",
    "shift-bracket",
    "prime_shift",
];

/// Older spellings accepted by [`operator`].
pub const OPERATOR_ALIASES: &[(&str, &str)] = &[
    ("exm4.3-A", "shift-odd"),
    ("exm4.3-B", "shift-even"),
    ("exm4.3-sum", "shift-sum"),
    ("exm4.6-AB", "shift-compose-oe"),
    ("exm4.6-BA", "shift-compose-eo"),
    ("exm4.8-bracket", "shift-bracket"),
    ("prime-shift", "prime_shift"),
];

pub fn canonical_operator_name(name: &str) -> &str {
    OPERATOR_ALIASES
        .iter()
        .find(|(alias, _)| *alias == name)
        .map_or(name, |(_, canonical)| canonical)
}

pub fn operator(name: &str, bound: Option<u32>) -> Result<OperatorExpr, OperatorError> {
    let op = match canonical_operator_name(name) {
        "shift-odd" => shift_odd(),
        "shift-even" => shift_even(),
        "shift-sum" => OperatorExpr::sum(vec![shift_odd(), shift_even()]),
        "shift-compose-oe" => OperatorExpr::compose(shift_odd(), shift_even()),
        "shift-compose-eo" => OperatorExpr::compose(shift_even(), shift_odd()),
        "shift-bracket" => OperatorExpr::bracket(shift_odd(), shift_even()),
        "prime_shift" => prime_shift(bound.unwrap_or(DEFAULT_PRIME_SHIFT_BOUND)),
        _ => return Err(OperatorError::UnknownBuiltin(name.to_string())),
    };
    Ok(op)
}

pub const POLYNOMIAL_NAMES: &[&str] = &["motzkin", "x", "minus-one", "x-minus-one-squared"];

pub fn polynomial(name: &str) -> Option<Polynomial> {
    match name {
        "motzkin" => Some(motzkin()),
        "x" => Some(Polynomial::var(1, 0)),
        "minus-one" => Some(Polynomial::constant(1, -1.0)),
        "x-minus-one-squared" => Some(Polynomial::univariate(&[1.0, -2.0, 1.0])),
        _ => None,
    }
}
