use super::{certify_batch, search, PlanKind, SearchConfig, SearchStep, TransportError, TransportPlan, SCOPE};
use crate::linops::{rank_one_exp, OperatorExpr};
use crate::moments::LinearFunctional;
use crate::poly::Polynomial;

/// `A p = l(p)·f`, provided `l(f) > 0`.
pub fn build_rank_one(l: LinearFunctional, f: Polynomial) -> Result<OperatorExpr, TransportError> {
    let value = l.apply(&f)?;
    if !(value > 0.0) || f.is_zero() {
        return Err(TransportError::NonPositiveDirection { value });
    }
    Ok(OperatorExpr::rank_one(l, f))
}

/// Smallest grid time `τ ∈ {t0, t0·growth, …} ∩ [0, max]` at which
/// `e^{τA}g` certifies at half-degree `d` for every generator `g`.
///
/// Each generator must have `l(g) > 0`. After a pass, `τ·growth` is tried
/// once more and the result recorded in the plan.
pub fn find_tau(
    a: &OperatorExpr,
    generators: &[Polynomial],
    d: u32,
    cfg: &SearchConfig,
) -> Result<TransportPlan, TransportError> {
    let OperatorExpr::RankOne { functional: l, f } = a else {
        return Err(TransportError::NotRankOne);
    };
    let lf = l.apply(f)?;
    if !(lf > 0.0) {
        return Err(TransportError::NonPositiveDirection { value: lf });
    }
    for (index, g) in generators.iter().enumerate() {
        let degree = g.degree().finite().unwrap_or(0);
        if degree > 2 * d {
            return Err(TransportError::DegreeOverflow { degree, bound: 2 * d });
        }
        let value = l.apply(g)?;
        if !(value > 0.0) {
            return Err(TransportError::HypothesisViolated { index, value });
        }
    }
    let items: Vec<(Polynomial, u32)> = generators.iter().map(|g| (g.clone(), d)).collect();
    let trial = |t: f64| certify_batch(&items, |g| Ok(rank_one_exp(l, f, t, g)?), &cfg.certify);
    let mut log: Vec<SearchStep> = Vec::new();
    let (tau, certificates) = search("tau", cfg.start, cfg, &mut log, trial)?;
    let next = if tau == 0.0 { 1.0 } else { tau * cfg.growth };
    let check = trial(next)?;
    log.push(SearchStep {
        stage: "tau next".to_string(),
        value: next,
        passed: check.passed,
        failed: check.failed.as_ref().map(|f| f.0),
    });
    Ok(TransportPlan {
        kind: PlanKind::RankOne {
            l: l.clone(),
            f: f.clone(),
            tau,
            half_degree: d,
            next_grid_passes: check.passed,
        },
        operator: a.clone(),
        certificates,
        search_log: log,
        config: *cfg,
        scope: SCOPE.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sos::interior_point;

    #[test]
    fn direction_checked() {
        let e = build_rank_one(LinearFunctional::point_eval(vec![1.0]), Polynomial::univariate(&[-1.0, 1.0]));
        assert!(matches!(e, Err(TransportError::NonPositiveDirection { value }) if value == 0.0));
        assert!(build_rank_one(LinearFunctional::gaussian_full(2), interior_point(2, 3)).is_ok());
    }

    #[test]
    fn odd_generator_violates_hypothesis() {
        let a = build_rank_one(LinearFunctional::gaussian_full(1), interior_point(1, 1)).unwrap();
        let e = find_tau(&a, &[Polynomial::var(1, 0)], 1, &SearchConfig::default());
        assert_eq!(e, Err(TransportError::HypothesisViolated { index: 0, value: 0.0 }));
    }

    #[test]
    fn sos_generators_give_zero_time() {
        let a = build_rank_one(LinearFunctional::gaussian_full(1), interior_point(1, 1)).unwrap();
        let cfg = SearchConfig {
            start: 0.0,
            ..Default::default()
        };
        let plan = find_tau(&a, &[Polynomial::univariate(&[1.0, -2.0, 1.0])], 1, &cfg).unwrap();
        assert_eq!(plan.time(), 0.0);
        assert_eq!(plan.search_log[0].value, 0.0);
        assert!(plan.search_log[0].passed);
    }

    #[test]
    fn non_rank_one_rejected() {
        let a = OperatorExpr::scale(2.0, OperatorExpr::rank_one(LinearFunctional::gaussian_full(1), interior_point(1, 1)));
        assert_eq!(find_tau(&a, &[], 1, &SearchConfig::default()), Err(TransportError::NotRankOne));
    }
}
