use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::polish::{polish, Structure};
use super::zeros::local_minima;
use super::{build_gram_problem, GramProblem};
use crate::linalg::sym_eig;
use crate::poly::{monomial_basis, MultiIndex, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub eig_tol: f64,
    pub coeff_tol: f64,
    pub refute_margin: f64,
    pub max_iter: usize,
    pub refute_samples: usize,
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            eig_tol: 1e-8,
            coeff_tol: 1e-8,
            refute_margin: 1e-10,
            max_iter: 50_000,
            refute_samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub weight: f64,
    pub poly: Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramCertificate {
    pub n: usize,
    pub d: u32,
    pub basis: Vec<MultiIndex>,
    /// Row-major rows of `G`.
    pub gram: Vec<Vec<f64>>,
    pub min_eig: f64,
    /// Largest `|(mᵀGm)_γ − p_γ|`.
    pub coeff_residual: f64,
    /// Largest `|(∑ λᵢ vᵢ²)_γ − p_γ|`.
    pub squares_residual: f64,
    /// `max(1, max_γ |p_γ|)`; tolerances are applied relative to it.
    pub scale: f64,
    pub iterations: usize,
    pub squares: Vec<Square>,
}

impl GramCertificate {
    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.gram.len();
        DMatrix::from_fn(m, m, |i, j| self.gram[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertifyOutcome {
    Certified(GramCertificate),
    RefutedByPoint {
        witness: Vec<f64>,
        value: f64,
    },
    Undecided {
        iterations: usize,
        /// Smallest eigenvalue of the last iterate on the affine slice.
        min_eig: f64,
        /// Largest coefficient mismatch of the last clipped (PSD) iterate.
        coeff_residual: f64,
    },
}

impl CertifyOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, CertifyOutcome::Certified(_))
    }

    pub fn certificate(&self) -> Option<&GramCertificate> {
        match self {
            CertifyOutcome::Certified(c) => Some(c),
            _ => None,
        }
    }
}

/// Iterations at which the factor refinement is tried: 50, 500, 5000, …
/// and the last one.
const POLISH_FIRST: usize = 50;
const POLISH_GROWTH: usize = 10;
const POLISH_STEPS: usize = 60;

pub fn coefficient_scale(p: &Polynomial) -> f64 {
    p.max_abs_coeff().max(1.0)
}

/// Flattened groups: entry `k` of the matrix belongs to group `group_of[k]`.
struct Slice {
    m: usize,
    group_of: Vec<usize>,
    sizes: Vec<f64>,
    targets: Vec<f64>,
    partner: Vec<Option<usize>>,
}

impl Slice {
    fn new(prob: &GramProblem) -> Self {
        let m = prob.size();
        let mut group_of = vec![0; m * m];
        let mut sizes = Vec::with_capacity(prob.groups.len());
        let mut targets = Vec::with_capacity(prob.groups.len());
        let mut partner = vec![None; prob.groups.len() * m];
        for (g, (gamma, pos)) in prob.groups.iter().enumerate() {
            for &(i, j) in pos {
                group_of[i * m + j] = g;
                partner[g * m + i] = Some(j);
            }
            sizes.push(pos.len() as f64);
            targets.push(prob.targets[gamma]);
        }
        Slice {
            m,
            group_of,
            sizes,
            targets,
            partner,
        }
    }

    fn sums(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let mut s = vec![0.0; self.sizes.len()];
        for i in 0..self.m {
            for j in 0..self.m {
                s[self.group_of[i * self.m + j]] += g[(i, j)];
            }
        }
        s
    }

    fn residual(&self, g: &DMatrix<f64>) -> f64 {
        self.sums(g)
            .iter()
            .zip(&self.targets)
            .map(|(s, t)| (s - t).abs())
            .fold(0.0, f64::max)
    }

    fn project(&self, g: &mut DMatrix<f64>) {
        let shift: Vec<f64> = self
            .sums(g)
            .iter()
            .zip(&self.targets)
            .zip(&self.sizes)
            .map(|((s, t), k)| (t - s) / k)
            .collect();
        for i in 0..self.m {
            for j in 0..self.m {
                g[(i, j)] += shift[self.group_of[i * self.m + j]];
            }
        }
    }
}

fn symmetrize(g: &mut DMatrix<f64>) {
    let m = g.nrows();
    for i in 0..m {
        for j in (i + 1)..m {
            let a = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = a;
            g[(j, i)] = a;
        }
    }
}

fn squares_from(g: &DMatrix<f64>, basis: &[MultiIndex], n: usize, drop_below: f64) -> (Vec<Square>, f64) {
    let e = sym_eig(g);
    let mut out = Vec::new();
    for (k, &lambda) in e.values.iter().enumerate() {
        if lambda < drop_below {
            continue;
        }
        let mut v = Polynomial::zero(n);
        for (i, a) in basis.iter().enumerate() {
            v.add_term(a.clone(), e.vectors[(i, k)]);
        }
        out.push(Square { weight: lambda, poly: v });
    }
    (out, e.min())
}

fn sum_of_squares(n: usize, squares: &[Square]) -> Polynomial {
    let mut acc = Polynomial::zero(n);
    for s in squares {
        acc.axpy(s.weight, &(&s.poly * &s.poly));
    }
    acc
}

fn gram_polynomial(g: &DMatrix<f64>, basis: &[MultiIndex], n: usize) -> Polynomial {
    let mut acc = Polynomial::zero(n);
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            acc.add_term(a.add(b), g[(i, j)]);
        }
    }
    acc
}

/// Sample points for the refutation pass: the origin, a uniform grid on
/// `[−3, 3]ⁿ` using about half the budget, then seeded Gaussian points.
pub(crate) fn refutation_points(n: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; n]];
    if samples <= 1 {
        return pts;
    }
    let mut k = 2usize;
    while (k + 1).checked_pow(n as u32).is_some_and(|c| c <= samples / 2) {
        k += 1;
    }
    if k.pow(n as u32) <= samples / 2 {
        let total = k.pow(n as u32);
        for idx in 0..total {
            let mut r = idx;
            let mut x = Vec::with_capacity(n);
            for _ in 0..n {
                x.push(-3.0 + 6.0 * (r % k) as f64 / (k - 1) as f64);
                r /= k;
            }
            pts.push(x);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pts.len() < samples {
        let s: f64 = if pts.len() % 2 == 0 { 1.0 } else { 3.0 };
        pts.push((0..n).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect());
    }
    pts
}

/// Local descents started from the lowest sample points.
const DESCENT_TRIES: usize = 64;
/// Extra descent starts far from the origin, where zeros of high-degree
/// squares often sit.
const WIDE_STARTS: usize = 300;
const WIDE_SCALES: [f64; 3] = [3.0, 10.0, 30.0];
const WIDE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
/// Minimum distance between descent starts.
const DESCENT_SPREAD: f64 = 0.25;
/// `|p(x)| ≤ ZERO_TOL·∑|c_α x^α|` together with
/// `(1 + |x|)·|∇p(x)| ≤ ZERO_TOL·∑|c_α x^α|` marks `x` as a numerical zero.
const ZERO_TOL: f64 = 1e-11;
/// Zeros closer than this (relative to `1 + |x|`) are merged.
const ZERO_MERGE: f64 = 1e-3;

/// Looks for a point with `p < −margin·max(1, ∑|c_α x^α|)`: first among the
/// sample points, then at local minima reached from the lowest of them.
/// Without one, returns the numerical zeros found by the descents.
fn scan(p: &Polynomial, cfg: &CertifyConfig) -> Result<Vec<Vec<f64>>, (Vec<f64>, f64)> {
    let pts = refutation_points(p.n(), cfg.refute_samples, cfg.seed);
    let negative = |value: f64, magnitude: f64| value < -cfg.refute_margin * magnitude.max(1.0);
    for x in &pts {
        let mut value = 0.0;
        let mut magnitude = 0.0;
        for (a, c) in p.terms() {
            let t = c * a.monomial_value(x);
            value += t;
            magnitude += t.abs();
        }
        if negative(value, magnitude) {
            return Err((x.clone(), value));
        }
    }
    let mut starts = pts;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ WIDE_SEED);
    for k in 0..WIDE_STARTS {
        let s = WIDE_SCALES[k % WIDE_SCALES.len()];
        starts.push((0..p.n()).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect());
    }
    let mut zeros: Vec<Vec<f64>> = Vec::new();
    for (x, l) in local_minima(p, &starts, DESCENT_TRIES, DESCENT_SPREAD) {
        if negative(l.value, l.magnitude) {
            return Err((x, l.value));
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = ZERO_TOL * l.magnitude.max(1.0);
        if !norm.is_finite() || l.value.abs() > tol || (1.0 + norm) * l.grad.norm() > tol {
            continue;
        }
        let seen = zeros.iter().any(|z| {
            z.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= ZERO_MERGE * (1.0 + norm)
        });
        if !seen {
            zeros.push(x);
        }
    }
    Ok(zeros)
}

/// A point where `p < −margin·max(1, ∑|c_α x^α|)`, searched as in the
/// refutation pass of [`certify_sos`].
pub fn find_negative(p: &Polynomial, cfg: &CertifyConfig) -> Option<(Vec<f64>, f64)> {
    scan(p, cfg).err()
}

/// Like [`find_negative`] on `[0, ∞)ⁿ`: the sample points are folded into
/// the orthant coordinatewise by `|·|`.
pub fn find_negative_orthant(p: &Polynomial, cfg: &CertifyConfig) -> Option<(Vec<f64>, f64)> {
    for mut x in refutation_points(p.n(), cfg.refute_samples, cfg.seed) {
        x.iter_mut().for_each(|v| *v = v.abs());
        let mut value = 0.0;
        let mut magnitude = 0.0;
        for (a, c) in p.terms() {
            let t = c * a.monomial_value(&x);
            value += t;
            magnitude += t.abs();
        }
        if value < -cfg.refute_margin * magnitude.max(1.0) {
            return Some((x, value));
        }
    }
    None
}

/// Orthonormal basis of `{u : uᵀ m(x) = 0 for every zero x}`; every Gram
/// matrix of a nonnegative `p` has its range there. `None` if no zeros or
/// the complement is trivial.
fn face_basis(basis: &[MultiIndex], zeros: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    if zeros.is_empty() {
        return None;
    }
    let m = basis.len();
    let mut z = DMatrix::zeros(m, zeros.len());
    for (k, x) in zeros.iter().enumerate() {
        let mut col = nalgebra::DVector::from_fn(m, |i, _| basis[i].monomial_value(x));
        col /= col.norm();
        z.set_column(k, &col);
    }
    let e = sym_eig(&(&z * z.transpose()));
    let top = e.values.iter().fold(0.0f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..m).filter(|&k| e.values[k] <= 1e-10 * top).collect();
    if keep.is_empty() {
        return None;
    }
    Some(DMatrix::from_fn(m, keep.len(), |i, c| e.vectors[(i, keep[c])]))
}

/// Decides `p ∈ ∑ℝ[x]²_{≤d}`, constructively.
///
/// A negative value at a sample point, or at a local minimum found by Newton
/// descent from the lowest sample points, refutes. Otherwise alternating
/// projections run from the diagonal seed `diag(max(p_{2α}, 0))` until an
/// iterate on the affine slice passes [`check_certificate`]. At iterations
/// 50, 500, 5000, … and at the last one, the clipped iterate is also refined
/// by damped Gauss–Newton on its factor and checked; when the descents found
/// real zeros of `p`, the factor is first confined to the face of Gram
/// matrices that vanish on their monomial vectors. After `max_iter`
/// rounds the outcome is `Undecided`.
pub fn certify_sos(p: &Polynomial, d: u32, cfg: &CertifyConfig) -> CertifyOutcome {
    let zeros = match scan(p, cfg) {
        Ok(z) => z,
        Err((witness, value)) => return CertifyOutcome::RefutedByPoint { witness, value },
    };
    let prob = match build_gram_problem(p, d) {
        Ok(prob) => prob,
        Err(_) => {
            return CertifyOutcome::Undecided {
                iterations: 0,
                min_eig: f64::NAN,
                coeff_residual: f64::INFINITY,
            }
        }
    };
    let slice = Slice::new(&prob);
    let basis: Vec<MultiIndex> = prob.basis.monomials().to_vec();
    let m = basis.len();
    let scale = coefficient_scale(p);

    let mut g = DMatrix::zeros(m, m);
    for (i, a) in basis.iter().enumerate() {
        g[(i, i)] = p.coeff(&a.add(a)).max(0.0);
    }
    let structure = Structure {
        m,
        partner: &slice.partner,
        targets: &slice.targets,
    };
    let try_cert = |g: &DMatrix<f64>, it: usize| {
        let cert = assemble(p, d, &basis, g, it, cfg.eig_tol);
        check_certificate(p, &cert, cfg.eig_tol, cfg.coeff_tol).passed().then_some(cert)
    };
    let face = face_basis(&basis, &zeros);
    let mut next_polish = POLISH_FIRST.min(cfg.max_iter);
    let mut last_min = f64::NAN;
    let mut last_gap = f64::INFINITY;
    for it in 0..=cfg.max_iter {
        let e = sym_eig(&g);
        last_min = e.min();
        if it > 0 && last_min >= -cfg.eig_tol * scale {
            if let Some(cert) = try_cert(&g, it) {
                return CertifyOutcome::Certified(cert);
            }
        }
        let mut lam = e.values.clone();
        lam.iter_mut().for_each(|l| *l = l.max(0.0));
        let v = &e.vectors;
        let mut clipped = v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lam)) * v.transpose();
        symmetrize(&mut clipped);
        last_gap = slice.residual(&clipped);
        if it == next_polish {
            next_polish = (next_polish * POLISH_GROWTH).min(cfg.max_iter);
            if next_polish == it {
                next_polish = usize::MAX;
            }
            let target = 0.1 * cfg.coeff_tol * scale;
            let mut start = clipped.clone();
            let mut attempts = Vec::with_capacity(2);
            if let Some(f) = &face {
                let refined = polish(&structure, &clipped, Some(f), target, POLISH_STEPS);
                start = refined.clone();
                attempts.push(refined);
            }
            attempts.push(polish(&structure, &start, None, target, POLISH_STEPS));
            for refined in attempts {
                if let Some(cert) = try_cert(&refined, it) {
                    return CertifyOutcome::Certified(cert);
                }
                let mut projected = refined;
                slice.project(&mut projected);
                if let Some(cert) = try_cert(&projected, it) {
                    return CertifyOutcome::Certified(cert);
                }
            }
        }
        if it == cfg.max_iter {
            break;
        }
        slice.project(&mut clipped);
        g = clipped;
    }
    CertifyOutcome::Undecided {
        iterations: cfg.max_iter,
        min_eig: last_min,
        coeff_residual: last_gap,
    }
}

fn assemble(
    p: &Polynomial,
    d: u32,
    basis: &[MultiIndex],
    g: &DMatrix<f64>,
    iterations: usize,
    eig_tol: f64,
) -> GramCertificate {
    let n = p.n();
    let scale = coefficient_scale(p);
    let recon = gram_polynomial(g, basis, n);
    let (squares, min_eig) = squares_from(g, basis, n, eig_tol * scale);
    let sq = sum_of_squares(n, &squares);
    GramCertificate {
        n,
        d,
        basis: basis.to_vec(),
        gram: (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect(),
        min_eig,
        coeff_residual: recon.max_abs_diff(p),
        squares_residual: sq.max_abs_diff(p),
        scale,
        iterations,
        squares,
    }
}

/// Outcome of an independent certificate check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub basis_ok: bool,
    pub symmetric: bool,
    pub min_eig: f64,
    pub coeff_residual: f64,
    pub recomputed_squares_residual: f64,
    pub stored_squares_residual: f64,
    pub stored_weights_nonneg: bool,
    pub scale: f64,
    pub eig_tol: f64,
    pub coeff_tol: f64,
}

impl CertificateCheck {
    pub fn passed(&self) -> bool {
        let eig = self.eig_tol * self.scale;
        let coeff = self.coeff_tol * self.scale;
        self.basis_ok
            && self.symmetric
            && self.min_eig >= -eig
            && self.coeff_residual <= coeff
            && self.recomputed_squares_residual <= coeff
            && self.stored_squares_residual <= coeff
            && self.stored_weights_nonneg
    }
}

/// Recomputes everything a certificate claims from `p`, the basis and `G`.
pub fn check_certificate(p: &Polynomial, c: &GramCertificate, eig_tol: f64, coeff_tol: f64) -> CertificateCheck {
    let scale = coefficient_scale(p);
    let mut out = CertificateCheck {
        basis_ok: false,
        symmetric: false,
        min_eig: f64::NEG_INFINITY,
        coeff_residual: f64::INFINITY,
        recomputed_squares_residual: f64::INFINITY,
        stored_squares_residual: f64::INFINITY,
        stored_weights_nonneg: false,
        scale,
        eig_tol,
        coeff_tol,
    };
    let expected = monomial_basis(p.n(), c.d);
    let m = expected.len();
    out.basis_ok = c.n == p.n()
        && c.basis.as_slice() == expected.monomials()
        && c.gram.len() == m
        && c.gram.iter().all(|r| r.len() == m)
        && p.degree().at_most(2 * c.d);
    if !out.basis_ok {
        return out;
    }
    let g = c.matrix();
    if g.iter().any(|x| !x.is_finite()) {
        return out;
    }
    let asym = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] - g[(j, i)]).abs())
        .fold(0.0, f64::max);
    out.symmetric = asym <= 1e-12 * scale;
    out.coeff_residual = gram_polynomial(&g, &c.basis, p.n()).max_abs_diff(p);
    let (recomputed, min_eig) = squares_from(&g, &c.basis, p.n(), eig_tol * scale);
    out.min_eig = min_eig;
    out.recomputed_squares_residual = sum_of_squares(p.n(), &recomputed).max_abs_diff(p);
    out.stored_weights_nonneg = c
        .squares
        .iter()
        .all(|s| s.weight >= 0.0 && s.weight.is_finite() && s.poly.n() == p.n());
    if out.stored_weights_nonneg {
        out.stored_squares_residual = sum_of_squares(p.n(), &c.squares).max_abs_diff(p);
    }
    out
}

/// True iff the certificate re-validates at the given tolerances, taken
/// relative to `max(1, max_γ |p_γ|)`.
pub fn validate_certificate(p: &Polynomial, c: &GramCertificate, eig_tol: f64, coeff_tol: f64) -> bool {
    check_certificate(p, c, eig_tol, coeff_tol).passed()
}
