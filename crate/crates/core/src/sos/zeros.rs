//! Local minimization of a polynomial from sample points.
//!
//! Used twice by the certifier: a negative local minimum refutes, and
//! numerical zeros `x₀` of a nonnegative `p` force every Gram matrix to
//! satisfy `G·m(x₀) = 0`, which lets the refinement work on that face.

use nalgebra::{DMatrix, DVector};

use crate::poly::Polynomial;

/// Value, rounding magnitude `∑|c_α x^α|`, gradient and Hessian at `x`.
pub(crate) struct Local {
    pub value: f64,
    pub magnitude: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

fn pow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

pub(crate) fn local(p: &Polynomial, x: &[f64]) -> Local {
    let n = x.len();
    let mut out = Local {
        value: 0.0,
        magnitude: 0.0,
        grad: DVector::zeros(n),
        hess: DMatrix::zeros(n, n),
    };
    for (a, c) in p.terms() {
        let e = a.exponents();
        let t = c * e.iter().zip(x).map(|(&k, &xi)| pow(xi, k)).product::<f64>();
        out.value += t;
        out.magnitude += t.abs();
        for i in 0..n {
            if e[i] == 0 {
                continue;
            }
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| pow(x[j], e[j])).product();
            out.grad[i] += c * e[i] as f64 * pow(x[i], e[i] - 1) * others;
            for j in 0..n {
                if j == i {
                    if e[i] >= 2 {
                        out.hess[(i, i)] += c * (e[i] * (e[i] - 1)) as f64 * pow(x[i], e[i] - 2) * others;
                    }
                } else if e[j] > 0 {
                    let rest: f64 = (0..n)
                        .filter(|&k| k != i && k != j)
                        .map(|k| pow(x[k], e[k]))
                        .product();
                    out.hess[(i, j)] +=
                        c * (e[i] * e[j]) as f64 * pow(x[i], e[i] - 1) * pow(x[j], e[j] - 1) * rest;
                }
            }
        }
    }
    out
}

/// Damped Newton descent on `p` from `x`; returns the final point.
pub(crate) fn descend(p: &Polynomial, mut x: Vec<f64>, steps: usize) -> Vec<f64> {
    let n = x.len();
    let mut cur = local(p, &x);
    let mut damping = 1e-3 * (1.0 + cur.hess.abs().max());
    for _ in 0..steps {
        if cur.grad.norm() <= 1e-15 * cur.magnitude.max(1.0) {
            break;
        }
        let mut moved = false;
        for _ in 0..40 {
            let mut h = cur.hess.clone();
            for i in 0..n {
                h[(i, i)] += damping;
            }
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&cur.grad),
                None => {
                    damping *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            let t = local(p, &trial);
            if t.value < cur.value {
                x = trial;
                cur = t;
                damping = (damping / 5.0).max(1e-300);
                moved = true;
                break;
            }
            damping *= 4.0;
        }
        if !moved {
            break;
        }
    }
    // Value decrease stalls at the rounding level of `p`; the gradient is
    // still informative there, so finish with plain Newton steps on it.
    for _ in 0..10 {
        let Some(step) = cur.hess.clone().lu().solve(&cur.grad) else {
            break;
        };
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
        let t = local(p, &trial);
        if !(t.grad.norm() < cur.grad.norm()) {
            break;
        }
        x = trial;
        cur = t;
    }
    x
}

/// Runs [`descend`] from up to `tries` of the `starts`, taken by smallest
/// relative value but skipping starts within `spread` of one already taken.
/// Returns all end points, most negative relative value first.
pub(crate) fn local_minima(p: &Polynomial, starts: &[Vec<f64>], tries: usize, spread: f64) -> Vec<(Vec<f64>, Local)> {
    let rel = |l: &Local| l.value / l.magnitude.max(1.0);
    let mut ranked: Vec<(f64, &Vec<f64>)> = starts.iter().map(|x| (rel(&local(p, x)), x)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut chosen: Vec<&Vec<f64>> = Vec::new();
    for (_, x) in ranked {
        if chosen.len() == tries {
            break;
        }
        let far = chosen
            .iter()
            .all(|c| c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() >= spread * spread);
        if far {
            chosen.push(x);
        }
    }
    let mut out: Vec<(Vec<f64>, Local)> = chosen
        .into_iter()
        .map(|x| {
            let y = descend(p, x.clone(), 60);
            let l = local(p, &y);
            (y, l)
        })
        .collect();
    out.sort_by(|a, b| rel(&a.1).total_cmp(&rel(&b.1)));
    out
}
