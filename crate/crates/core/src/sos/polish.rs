//! Levenberg–Marquardt refinement of a Gram factor.
//!
//! Alternating projections converge slowly when every Gram matrix of `p` is
//! singular (for instance when `p` has real zeros). Starting from the
//! factor `V` of a clipped iterate, this solves `A(VVᵀ) = p` in the least
//! squares sense with minimum-norm damped Gauss–Newton steps. The result is
//! PSD by construction; whether it is a certificate is decided elsewhere.

use nalgebra::{DMatrix, DVector};

use crate::linalg::sym_eig;

/// Group structure needed to evaluate `A` and its Jacobian.
pub(crate) struct Structure<'a> {
    pub m: usize,
    /// `partner[g * m + i]` = `j` with `(i, j)` in group `g`, if any.
    pub partner: &'a [Option<usize>],
    pub targets: &'a [f64],
}

fn residual(s: &Structure, g: &DMatrix<f64>) -> DVector<f64> {
    let ng = s.targets.len();
    DVector::from_fn(ng, |k, _| {
        let mut acc = -s.targets[k];
        for i in 0..s.m {
            if let Some(j) = s.partner[k * s.m + i] {
                acc += g[(i, j)];
            }
        }
        acc
    })
}

fn jacobian(s: &Structure, v: &DMatrix<f64>) -> DMatrix<f64> {
    let ng = s.targets.len();
    let r = v.ncols();
    let mut jac = DMatrix::zeros(ng, s.m * r);
    for k in 0..ng {
        for i in 0..s.m {
            if let Some(j) = s.partner[k * s.m + i] {
                for c in 0..r {
                    jac[(k, i * r + c)] = 2.0 * v[(j, c)];
                }
            }
        }
    }
    jac
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn lift(map: Option<&DMatrix<f64>>, w: &DMatrix<f64>) -> DMatrix<f64> {
    match map {
        Some(n) => n * w,
        None => w.clone(),
    }
}

/// Jacobian with respect to `W` where `V = N W`.
fn reduce_jacobian(jac: &DMatrix<f64>, n: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let (m, mr) = (n.nrows(), n.ncols());
    let mut out = DMatrix::zeros(jac.nrows(), mr * r);
    for k in 0..jac.nrows() {
        let row = DMatrix::from_fn(m, r, |i, c| jac[(k, i * r + c)]);
        let red = n.transpose() * row;
        for a in 0..mr {
            for c in 0..r {
                out[(k, a * r + c)] = red[(a, c)];
            }
        }
    }
    out
}

/// Damped Gauss–Newton on the factor `V = N W` (or `V = W`) until
/// `max |A(VVᵀ) − p| ≤ target`. Returns the lifted `V`.
fn refine(
    s: &Structure,
    mut w: DMatrix<f64>,
    map: Option<&DMatrix<f64>>,
    target: f64,
    max_iter: usize,
) -> (DMatrix<f64>, f64) {
    let (rows, r) = (w.nrows(), w.ncols());
    let gram = |w: &DMatrix<f64>| {
        let v = lift(map, w);
        &v * v.transpose()
    };
    let mut res = residual(s, &gram(&w));
    let mut cost = res.norm_squared();
    let mut mu: Option<f64> = None;
    for _ in 0..max_iter {
        if max_abs(&res) <= target {
            break;
        }
        let mut jac = jacobian(s, &lift(map, &w));
        if let Some(n) = map {
            jac = reduce_jacobian(&jac, n, r);
        }
        let jjt = &jac * jac.transpose();
        let mut trial_mu = *mu.get_or_insert_with(|| 1e-6 * jjt.trace().max(1e-300) / jjt.nrows() as f64);
        let mut accepted = false;
        for _ in 0..30 {
            let mut lhs = jjt.clone();
            for k in 0..lhs.nrows() {
                lhs[(k, k)] += trial_mu;
            }
            let Some(ch) = lhs.cholesky() else {
                trial_mu *= 10.0;
                continue;
            };
            let step = jac.transpose() * ch.solve(&res);
            let mut wt = w.clone();
            for i in 0..rows {
                for c in 0..r {
                    wt[(i, c)] -= step[i * r + c];
                }
            }
            let rt = residual(s, &gram(&wt));
            let ct = rt.norm_squared();
            if ct < cost {
                w = wt;
                res = rt;
                cost = ct;
                mu = Some((trial_mu / 3.0).max(1e-300));
                accepted = true;
                break;
            }
            trial_mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let worst = max_abs(&res);
    (lift(map, &w), worst)
}

/// Ranks worth trying for the factor of `G`: the largest eigenvalue gaps
/// first, then the full numerical rank.
fn candidate_ranks(values_desc: &[f64], tries: usize) -> Vec<usize> {
    let top = values_desc.first().copied().unwrap_or(0.0);
    let full = values_desc.iter().filter(|&&l| l > 1e-12 * top).count();
    let mut gaps: Vec<(usize, f64)> = (1..full)
        .map(|r| (r, values_desc[r - 1] / values_desc[r]))
        .collect();
    gaps.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<usize> = gaps.into_iter().take(tries).map(|(r, _)| r).collect();
    if full > 0 && !out.contains(&full) {
        out.push(full);
    }
    out
}

/// Refines `G ⪰ 0` towards the slice at several factor ranks; returns
/// `VVᵀ` for the factor with the smallest residual. With `face = Some(N)`
/// (orthonormal columns) the factor is confined to `V = N W`, i.e. `G` to
/// the face `{N H Nᵀ : H ⪰ 0}`.
pub(crate) fn polish(
    s: &Structure,
    g: &DMatrix<f64>,
    face: Option<&DMatrix<f64>>,
    target: f64,
    max_iter: usize,
) -> DMatrix<f64> {
    let h = match face {
        Some(n) => n.transpose() * g * n,
        None => g.clone(),
    };
    let k = h.nrows();
    let e = sym_eig(&h);
    let desc: Vec<usize> = (0..k).rev().collect();
    let values: Vec<f64> = desc.iter().map(|&i| e.values[i].max(0.0)).collect();
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for r in candidate_ranks(&values, RANK_TRIES) {
        let w0 = DMatrix::from_fn(k, r, |i, c| e.vectors[(i, desc[c])] * values[c].sqrt());
        let (v, worst) = refine(s, w0, face, target, max_iter);
        let better = best.as_ref().is_none_or(|b| worst < b.1);
        if better {
            best = Some((v, worst));
        }
        if worst <= target {
            break;
        }
    }
    let Some((v, _)) = best else {
        return DMatrix::zeros(s.m, s.m);
    };
    let mut out = &v * v.transpose();
    for i in 0..s.m {
        for j in (i + 1)..s.m {
            let a = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = a;
            out[(j, i)] = a;
        }
    }
    out
}

const RANK_TRIES: usize = 6;
