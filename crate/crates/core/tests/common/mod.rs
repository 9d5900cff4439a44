//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sos_transport::{monomial_basis, MomentTable, MultiIndex, OperatorExpr, Polynomial};

/// Truncation of the Gaussian integrals.
pub const CUTOFF: f64 = 12.0;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // split first so that narrow peaks are not missed by the initial rule
    let pieces = 48;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            adapt(f, x0, x1, f0, fm, f1, simpson(x0, x1, f0, fm, f1), tol / pieces as f64, 40)
        })
        .sum()
}

/// `∫ x^k e^{−x²}` over `[−12, 12]` or `[0, 12]`, by quadrature.
pub fn quad_moment_1d(k: u32, orthant: bool) -> f64 {
    let a = if orthant { 0.0 } else { -CUTOFF };
    quad(&|x: f64| x.powi(k as i32) * (-x * x).exp(), a, CUTOFF, 1e-13)
}

/// Multivariate moment as a product of univariate quadratures (the weight
/// and the monomial both factor over coordinates).
pub fn quad_moment(alpha: &MultiIndex, orthant: bool) -> f64 {
    alpha.exponents().iter().map(|&k| quad_moment_1d(k, orthant)).product()
}

/// Genuine two-dimensional nested quadrature of `g(x, y) e^{−x²−y²}`.
pub fn quad_2d(g: &dyn Fn(f64, f64) -> f64, orthant: bool) -> f64 {
    let a = if orthant { 0.0 } else { -CUTOFF };
    quad(
        &|x: f64| quad(&|y: f64| g(x, y) * (-x * x - y * y).exp(), a, CUTOFF, 1e-12),
        a,
        CUTOFF,
        1e-11,
    )
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Dense polynomial of degree `≤ d` with N(0,1) coefficients.
pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, d: u32) -> Polynomial {
    let basis = monomial_basis(n, d);
    let coords: Vec<f64> = (0..basis.len()).map(|_| normal(rng)).collect();
    basis.polynomial(&coords)
}

/// `∑_{i<r} q_i²` with dense random `q_i` of degree `≤ d`.
pub fn random_sos(rng: &mut ChaCha8Rng, n: usize, d: u32, r: usize) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for _ in 0..r {
        let q = random_poly(rng, n, d);
        p = &p + &(&q * &q);
    }
    p
}

/// `∑_{k<terms} t^k A^k p / k!` by repeated application.
pub fn series_exp(a: &OperatorExpr, t: f64, p: &Polynomial, terms: usize) -> Polynomial {
    let mut out = p.clone();
    let mut term = p.clone();
    for k in 1..terms {
        term = a.apply(&term).unwrap().scale(t / k as f64);
        out = &out + &term;
    }
    out
}

/// `max|p − q| / max(1, max|q|)`.
pub fn rel_diff(p: &Polynomial, q: &Polynomial) -> f64 {
    p.max_abs_diff(q) / q.max_abs_coeff().max(1.0)
}

/// Smallest value of a univariate `p` on a uniform grid of `[−20, 20]`
/// and at every real critical point of `p` (real eigenvalues of the
/// companion matrix of `p′`, polished by Newton steps). For even degree
/// with positive leading coefficient this is the global minimum.
pub fn grid_min(p: &Polynomial, points: usize) -> f64 {
    let at = |x: f64| p.evaluate(&[x]).unwrap();
    let grid = (0..points)
        .map(|i| -20.0 + 40.0 * i as f64 / (points - 1) as f64)
        .map(at)
        .fold(f64::INFINITY, f64::min);
    critical_points(p).into_iter().map(at).fold(grid, f64::min)
}

fn coefficients(p: &Polynomial) -> Vec<f64> {
    let top = p.degree().finite().unwrap_or(0);
    (0..=top).map(|k| p.coeff(&MultiIndex::univariate(k))).collect()
}

/// Real roots of `p′`.
pub fn critical_points(p: &Polynomial) -> Vec<f64> {
    let a = coefficients(p);
    let d: Vec<f64> = a.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    let m = d.len().saturating_sub(1);
    if m == 0 {
        return Vec::new();
    }
    let mut comp = nalgebra::DMatrix::zeros(m, m);
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..m {
        comp[(i, m - 1)] = -d[i] / d[m];
    }
    let eval = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
    let dd: Vec<f64> = d.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    comp.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
        .map(|z| {
            let mut x = z.re;
            for _ in 0..20 {
                let s = eval(&dd, x);
                if s == 0.0 {
                    break;
                }
                let next = x - eval(&d, x) / s;
                if !next.is_finite() {
                    break;
                }
                x = next;
            }
            x
        })
        .collect()
}

/// Table of N(0,1) values on all `|α| ≤ d`.
pub fn random_table(rng: &mut ChaCha8Rng, n: usize, d: u32) -> MomentTable {
    let mut t = MomentTable::new(n);
    for a in monomial_basis(n, d).monomials() {
        t.insert(a.clone(), normal(rng));
    }
    t
}
