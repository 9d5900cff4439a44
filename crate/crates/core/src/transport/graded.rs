use super::{
    certify_batch, search, GradedLevel, Ladder, PlanCertificate, PlanKind, SearchConfig, SearchStep, TildeTerm,
    TransportError, TransportPlan, SCOPE,
};
use crate::linops::{exp_apply, restrict_matrix, OperatorExpr};
use crate::moments::{Domain, LinearFunctional, Parity};
use crate::poly::{monomial_basis, Polynomial};
use crate::sos::{find_negative, find_negative_orthant, interior_point, orthant_interior_point};

/// One term `c·l·f` added to the operator, with the samples it must carry.
struct Rung {
    stage: String,
    tilde: bool,
    /// Level index into the plan's levels.
    level: usize,
    l: LinearFunctional,
    f: Polynomial,
    fixed: Option<f64>,
    /// Samples of degree in `(low, cap]` are certified here; `None` means
    /// no lower limit.
    low: Option<u32>,
    cap: u32,
    half: u32,
    check_positive: bool,
}

fn degree(p: &Polynomial) -> u32 {
    p.degree().finite().unwrap_or(0)
}

fn check_samples(samples: &[Polynomial], domain: Domain, cfg: &SearchConfig) -> Result<(), TransportError> {
    for (index, p) in samples.iter().enumerate() {
        let hit = match domain {
            Domain::Full => find_negative(p, &cfg.certify),
            Domain::Orthant => find_negative_orthant(p, &cfg.certify),
        };
        if let Some((witness, value)) = hit {
            return Err(TransportError::SampleNotNonneg { index, witness, value });
        }
    }
    Ok(())
}

fn climb(
    n: usize,
    ladder: Ladder,
    mut levels: Vec<GradedLevel>,
    rungs: Vec<Rung>,
    samples: &[Polynomial],
    cfg: &SearchConfig,
) -> Result<TransportPlan, TransportError> {
    let mut terms: Vec<OperatorExpr> = Vec::new();
    let mut log: Vec<SearchStep> = Vec::new();
    let mut certificates: Vec<PlanCertificate> = Vec::new();
    let mut floor = [cfg.start, cfg.start];
    for rung in rungs {
        let mine: Vec<usize> = (0..samples.len())
            .filter(|&i| {
                let k = degree(&samples[i]);
                k <= rung.cap && rung.low.is_none_or(|c| k > c)
            })
            .collect();
        if rung.check_positive {
            for &i in &mine {
                let value = rung.l.apply(&samples[i])?;
                if !(value > 0.0) {
                    return Err(TransportError::HypothesisViolated { index: i, value });
                }
            }
        }
        let items: Vec<(Polynomial, u32)> = mine.iter().map(|&i| (samples[i].clone(), rung.half)).collect();
        let bound = 2 * rung.half;
        let with = |c: f64| {
            let mut t = terms.clone();
            t.push(OperatorExpr::scale(c, OperatorExpr::rank_one(rung.l.clone(), rung.f.clone())));
            OperatorExpr::sum(t)
        };
        let trial = |c: f64| {
            let a = with(c);
            certify_batch(&items, |g| Ok(exp_apply(&a, 1.0, g, bound)?), &cfg.certify)
        };
        let family = usize::from(rung.tilde);
        let (c, certs) = match rung.fixed {
            Some(c) => {
                let t = trial(c)?;
                log.push(SearchStep {
                    stage: rung.stage.clone(),
                    value: c,
                    passed: t.passed,
                    failed: t.failed.as_ref().map(|f| f.0),
                });
                if !t.passed {
                    let (index, detail) = t.failed.unwrap_or_default();
                    return Err(TransportError::SearchExhausted {
                        stage: rung.stage,
                        cap: c,
                        index: mine.get(index).copied().unwrap_or(index),
                        detail,
                    });
                }
                (c, t.certificates)
            }
            None => {
                let (c, certs) = search(&rung.stage, floor[family], cfg, &mut log, trial).map_err(|e| match e {
                    TransportError::SearchExhausted {
                        stage,
                        cap,
                        index,
                        detail,
                    } => TransportError::SearchExhausted {
                        stage,
                        cap,
                        index: mine.get(index).copied().unwrap_or(index),
                        detail,
                    },
                    other => other,
                })?;
                floor[family] = floor[family].max(c);
                (c, certs)
            }
        };
        terms.push(OperatorExpr::scale(c, OperatorExpr::rank_one(rung.l.clone(), rung.f.clone())));
        let level = &mut levels[rung.level];
        if rung.tilde {
            level.tilde = Some(TildeTerm { c, l: rung.l.clone() });
        } else {
            level.c = c;
        }
        // A c~ rung only seeds the next c rung, which re-certifies its
        // samples under the operator that is finally kept.
        if !rung.tilde {
            certificates.extend(certs);
            restrict_matrix(&OperatorExpr::sum(terms.clone()), &monomial_basis(n, 2 * level.d))?;
        }
    }
    let d_max = levels.iter().map(|l| l.d).max().unwrap_or(0);
    Ok(TransportPlan {
        kind: PlanKind::Graded { ladder, d_max, levels },
        operator: OperatorExpr::sum(terms),
        certificates,
        search_log: log,
        config: *cfg,
        scope: SCOPE.to_string(),
    })
}

fn uncovered(samples: &[Polynomial], cap: u32) -> Result<(), TransportError> {
    for p in samples {
        let k = degree(p);
        if k > cap {
            return Err(TransportError::DegreeOverflow { degree: k, bound: cap });
        }
    }
    Ok(())
}

/// `A = ∑_{d≤d_max} c_d·l_d·f_d` on `ℝⁿ` with `l_d` the Gaussian moment of
/// the degree-`2d` part and `f_d` = `interior_point(n, d)` unless given.
///
/// `c_0 = 1`. For `d ≥ 1`, `c_d` doubles from `max(start, c_{d−1})` until
/// the samples of degree in `(2d − 2, 2d]` certify at half-degree `d`.
/// Lower samples are unaffected by the new term, since `l_d` vanishes
/// on `ℝ[x]_{≤2d−2}`.
pub fn build_graded_full(
    n: usize,
    d_max: u32,
    samples: &[Polynomial],
    f: Option<&[Polynomial]>,
    cfg: &SearchConfig,
) -> Result<TransportPlan, TransportError> {
    uncovered(samples, 2 * d_max)?;
    check_samples(samples, Domain::Full, cfg)?;
    let fs = directions(n, d_max, f, interior_point)?;
    let mut levels = Vec::new();
    let mut rungs = Vec::new();
    for d in 0..=d_max {
        let l = LinearFunctional::graded(n, d, Parity::Even, Domain::Full)?;
        levels.push(GradedLevel {
            d,
            c: 0.0,
            l: l.clone(),
            f: fs[d as usize].clone(),
            tilde: None,
        });
        rungs.push(Rung {
            stage: format!("c_{d}"),
            tilde: false,
            level: d as usize,
            l,
            f: fs[d as usize].clone(),
            fixed: (d == 0).then_some(1.0),
            low: d.checked_sub(1).map(|e| 2 * e),
            cap: 2 * d,
            half: d,
            check_positive: true,
        });
    }
    climb(n, Ladder::Full, levels, rungs, samples, cfg)
}

fn directions(
    n: usize,
    d_max: u32,
    f: Option<&[Polynomial]>,
    default: fn(usize, u32) -> Polynomial,
) -> Result<Vec<Polynomial>, TransportError> {
    match f {
        Some(fs) if fs.len() == d_max as usize + 1 && fs.iter().all(|p| p.n() == n) => Ok(fs.to_vec()),
        Some(_) => Err(TransportError::InvalidLadder),
        None => Ok((0..=d_max).map(|d| default(n, d)).collect()),
    }
}

/// `A = ∑ c_i·l_i·f_i` over a user ladder `d_0 < d_1 < …`.
///
/// Checks on monomials of degree `≤ 2·d_last + 2`: `l_i(x^α) = 0` for
/// `|α| > 2d_i`, and `l_i(x^α) = 0` for `|α| ≤ 2d_{i−1}` (without the latter
/// `A` would not preserve the lower blocks). Positivity `l_i(p) > 0` is
/// checked on the samples of degree in `(2d_{i−1}, 2d_i]` only.
pub fn build_graded_custom(
    ladder: &[(u32, LinearFunctional)],
    f: &[Polynomial],
    samples: &[Polynomial],
    cfg: &SearchConfig,
) -> Result<TransportPlan, TransportError> {
    if ladder.len() != f.len() || ladder.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(TransportError::InvalidLadder);
    }
    let Some(n) = ladder.first().map(|(_, l)| l.n) else {
        return Err(TransportError::InvalidLadder);
    };
    if ladder.iter().any(|(_, l)| l.n != n) || f.iter().any(|p| p.n() != n) {
        return Err(TransportError::InvalidLadder);
    }
    let top = 2 * ladder.last().map(|x| x.0).unwrap_or(0);
    uncovered(samples, top)?;
    let basis = monomial_basis(n, top + 2);
    for (index, (d, l)) in ladder.iter().enumerate() {
        let below = index.checked_sub(1).map(|j| 2 * ladder[j].0);
        for alpha in basis.monomials() {
            let value = l.monomial_value(alpha)?;
            if value == 0.0 {
                continue;
            }
            if alpha.degree() > 2 * d {
                return Err(TransportError::AnnihilationViolated {
                    index,
                    alpha: alpha.clone(),
                    value,
                });
            }
            if below.is_some_and(|b| alpha.degree() <= b) {
                return Err(TransportError::LowerBlockRead {
                    index,
                    alpha: alpha.clone(),
                    value,
                });
            }
        }
    }
    check_samples(samples, Domain::Full, cfg)?;
    let mut levels = Vec::new();
    let mut rungs = Vec::new();
    for (i, ((d, l), fi)) in ladder.iter().zip(f).enumerate() {
        levels.push(GradedLevel {
            d: *d,
            c: 0.0,
            l: l.clone(),
            f: fi.clone(),
            tilde: None,
        });
        rungs.push(Rung {
            stage: format!("c_{i}"),
            tilde: false,
            level: i,
            l: l.clone(),
            f: fi.clone(),
            fixed: None,
            low: i.checked_sub(1).map(|j| 2 * ladder[j].0),
            cap: 2 * d,
            half: *d,
            check_positive: true,
        });
    }
    climb(n, Ladder::Custom, levels, rungs, samples, cfg)
}

/// Orthant ladder on `[0, ∞)ⁿ`: `A = ∑ c_d·l_d·f_d + ∑_{d≥1} c̃_d·l̃_d·f_d`
/// with `l_d`, `l̃_d` the orthant Gaussian moments of the parts of degree
/// `2d` and `2d − 1`, and `f_d = orthant_interior_point(n, d)`.
///
/// `c_0 = 1`. At level `d ≥ 1`, `c̃_d` is searched first so that samples of
/// degree `2d − 1` certify at half-degree `d` with `c_d = 0`, then `c_d` so
/// that the samples of degree `2d − 1` and `2d` certify together. The
/// second search is needed because `l̃_d` sends odd samples onto `f_d`,
/// which `l_d` reads, so `c_d` changes `e^A` on them; only the certificates
/// of the second search are kept.
pub fn build_orthant(
    n: usize,
    d_max: u32,
    samples: &[Polynomial],
    cfg: &SearchConfig,
) -> Result<TransportPlan, TransportError> {
    uncovered(samples, 2 * d_max)?;
    check_samples(samples, Domain::Orthant, cfg)?;
    let mut levels = Vec::new();
    let mut rungs = Vec::new();
    for d in 0..=d_max {
        let f = orthant_interior_point(n, d);
        let l = LinearFunctional::graded(n, d, Parity::Even, Domain::Orthant)?;
        levels.push(GradedLevel {
            d,
            c: 0.0,
            l: l.clone(),
            f: f.clone(),
            tilde: None,
        });
        if d > 0 {
            rungs.push(Rung {
                stage: format!("c~_{d}"),
                tilde: true,
                level: d as usize,
                l: LinearFunctional::graded(n, d, Parity::Odd, Domain::Orthant)?,
                f: f.clone(),
                fixed: None,
                low: Some(2 * d - 2),
                cap: 2 * d - 1,
                half: d,
                check_positive: false,
            });
        }
        rungs.push(Rung {
            stage: format!("c_{d}"),
            tilde: false,
            level: d as usize,
            l,
            f,
            fixed: (d == 0).then_some(1.0),
            low: d.checked_sub(1).map(|e| 2 * e),
            cap: 2 * d,
            half: d,
            check_positive: false,
        });
    }
    climb(n, Ladder::Orthant, levels, rungs, samples, cfg)
}
