use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{build_graded_full, build_orthant, build_rank_one, find_tau, SearchConfig, TransportError, TransportPlan};
use crate::builtin::motzkin;
use crate::moments::{Domain, LinearFunctional};
use crate::poly::{monomial_basis, MultiIndex, Polynomial};
use crate::sos::interior_point;

/// Names accepted by [`scenario`].
pub const SCENARIO_NAMES: &[&str] = &["motzkin", "graded-full", "orthant-x"];

/// Grid start of the Motzkin scenario. With start 1 the first grid time
/// already certifies, and `e^{τλ}` with `λ = l(f) ≈ 25.9` makes the
/// transported problem badly scaled.
pub const MOTZKIN_T0: f64 = 1.0 / 1024.0;

/// Seed of the graded scenario's sample sets.
pub const GRADED_SCENARIO_SEED: u64 = 7;

fn random_sos(n: usize, half: u32, rng: &mut ChaCha8Rng) -> Polynomial {
    let basis = monomial_basis(n, half);
    let squares = rng.random_range(1..=3);
    let mut p = Polynomial::zero(n);
    for _ in 0..squares {
        let coords: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
        let q = basis.polynomial(&coords);
        p = p.checked_add(&q.checked_mul(&q).expect("same n")).expect("same n");
    }
    p
}

fn random_exponent(n: usize, total: u32, rng: &mut ChaCha8Rng) -> MultiIndex {
    let mut e = vec![0u32; n];
    for _ in 0..total {
        e[rng.random_range(0..n)] += 1;
    }
    MultiIndex::new(e)
}

/// `count` polynomials of degree at most `degree` that are nonnegative on
/// `ℝⁿ` (`Full`) or on `[0,∞)ⁿ` (`Orthant`), deterministic in `seed`.
///
/// The list starts with the named members that fit: Motzkin for `Full`,
/// `n = 2`, `degree ≥ 6`; `x₁` for `Orthant`, `degree ≥ 1`. The rest are
/// random `∑ qᵢ²` with one to three squares, times a random `x^β` on the
/// orthant. Full-space samples have even degree.
pub fn sample_pos(domain: Domain, n: usize, degree: u32, count: usize, seed: u64) -> Vec<Polynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    match domain {
        Domain::Full if n == 2 && degree >= 6 => out.push(motzkin()),
        Domain::Orthant if n >= 1 && degree >= 1 => out.push(Polynomial::var(n, 0)),
        _ => {}
    }
    while out.len() < count {
        let p = match domain {
            Domain::Full => random_sos(n, degree / 2, &mut rng),
            Domain::Orthant => {
                let b = rng.random_range(0..=degree);
                let monomial = Polynomial::monomial(random_exponent(n, b, &mut rng), 1.0);
                monomial
                    .checked_mul(&random_sos(n, (degree - b) / 2, &mut rng))
                    .expect("same n")
            }
        };
        out.push(p);
    }
    out.truncate(count);
    out
}

/// Rank-one transport of the Motzkin polynomial: `l` the Gaussian moment on
/// `ℝ²`, `f = interior_point(2, 3)`, half-degree 3.
pub fn motzkin_scenario(cfg: &SearchConfig) -> Result<TransportPlan, TransportError> {
    let a = build_rank_one(LinearFunctional::gaussian_full(2), interior_point(2, 3))?;
    find_tau(&a, &[motzkin()], 3, cfg)
}

/// Graded transport on `ℝ` with `d_max = 3`: the constant 1 and three
/// seeded samples of each degree 2, 4, 6.
pub fn graded_scenario(cfg: &SearchConfig) -> Result<TransportPlan, TransportError> {
    let mut samples = vec![Polynomial::constant(1, 1.0)];
    for d in 1..=3u32 {
        samples.extend(sample_pos(Domain::Full, 1, 2 * d, 3, GRADED_SCENARIO_SEED + u64::from(d)));
    }
    build_graded_full(1, 3, &samples, None, cfg)
}

/// Orthant transport on `[0,∞)` with `d_max = 2` and samples
/// `1, x, x² + x, (x − 1)²x`.
pub fn orthant_x_scenario(cfg: &SearchConfig) -> Result<TransportPlan, TransportError> {
    let samples = vec![
        Polynomial::constant(1, 1.0),
        Polynomial::univariate(&[0.0, 1.0]),
        Polynomial::univariate(&[0.0, 1.0, 1.0]),
        Polynomial::univariate(&[0.0, 1.0, -2.0, 1.0]),
    ];
    build_orthant(1, 2, &samples, cfg)
}

/// Default search configuration of a named scenario.
pub fn scenario_config(name: &str) -> SearchConfig {
    match name {
        "motzkin" => SearchConfig {
            start: MOTZKIN_T0,
            ..Default::default()
        },
        _ => SearchConfig::default(),
    }
}

/// Runs a named scenario; `None` for an unknown name.
pub fn scenario(name: &str, cfg: &SearchConfig) -> Option<Result<TransportPlan, TransportError>> {
    match name {
        "motzkin" => Some(motzkin_scenario(cfg)),
        "graded-full" => Some(graded_scenario(cfg)),
        "orthant-x" => Some(orthant_x_scenario(cfg)),
        _ => None,
    }
}
