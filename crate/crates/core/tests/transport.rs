mod common;

use std::sync::OnceLock;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sos_transport::builtin::motzkin;
use sos_transport::transport::{
    build_graded_custom, build_graded_full, build_orthant, build_rank_one, find_tau, graded_scenario,
    motzkin_scenario, orthant_x_scenario, sample_pos, scenario, scenario_config, transport_problem, verify_plan,
    Ladder, PlanKind, SearchConfig, TransportError, TransportPlan, MOTZKIN_T0, SCENARIO_NAMES,
};
use sos_transport::{
    interior_point, monomial_basis, validate_certificate, Domain, LinearFunctional, MultiIndex, Parity,
    Polynomial,
};

fn motzkin_plan() -> &'static TransportPlan {
    static PLAN: OnceLock<TransportPlan> = OnceLock::new();
    PLAN.get_or_init(|| motzkin_scenario(&scenario_config("motzkin")).unwrap())
}

fn graded_plan() -> &'static TransportPlan {
    static PLAN: OnceLock<TransportPlan> = OnceLock::new();
    PLAN.get_or_init(|| graded_scenario(&SearchConfig::default()).unwrap())
}

fn constants(plan: &TransportPlan) -> Vec<f64> {
    match &plan.kind {
        PlanKind::Graded { levels, .. } => levels.iter().map(|l| l.c).collect(),
        PlanKind::RankOne { tau, .. } => vec![*tau],
    }
}

#[test]
fn motzkin_transports_into_sos() {
    let plan = motzkin_plan();
    let PlanKind::RankOne { tau, half_degree, next_grid_passes, .. } = &plan.kind else {
        panic!("rank-one plan expected")
    };
    assert!(*tau > MOTZKIN_T0 && *tau <= 1.0);
    assert_eq!(*half_degree, 3);
    assert!(*next_grid_passes);
    assert_eq!(plan.certificates.len(), 1);
    let c = &plan.certificates[0];
    assert_eq!(c.generator, motzkin());
    assert!(validate_certificate(&c.transported, &c.certificate, 1e-8, 1e-8));
    // the smaller grid value failed
    let earlier: Vec<_> = plan.search_log.iter().filter(|s| s.stage == "tau" && s.value < *tau).collect();
    assert!(!earlier.is_empty() && earlier.iter().all(|s| !s.passed));
    assert!(verify_plan(plan, 1e-8, 1e-8).unwrap().passed());
}

#[test]
fn plan_json_roundtrip() {
    let plan = motzkin_plan();
    let s = serde_json::to_string(plan).unwrap();
    let back: TransportPlan = serde_json::from_str(&s).unwrap();
    assert_eq!(&back, plan);
    assert_eq!(serde_json::to_string(&back).unwrap(), s);
}

#[test]
fn tampered_plan_fails_verification() {
    let mut plan = motzkin_plan().clone();
    if let PlanKind::RankOne { tau, .. } = &mut plan.kind {
        *tau *= 0.5;
    }
    let check = verify_plan(&plan, 1e-8, 1e-8).unwrap();
    assert!(check.transport_mismatch > 1e-6);
    assert!(!check.passed());
}

#[test]
fn tau_search_exhausts_below_threshold() {
    let cfg = SearchConfig {
        start: MOTZKIN_T0,
        max: 2.0 * MOTZKIN_T0,
        ..Default::default()
    };
    let e = motzkin_scenario(&cfg);
    assert!(matches!(e, Err(TransportError::SearchExhausted { .. })), "{e:?}");
}

#[test]
fn zero_time_plan_is_identity() {
    let a = build_rank_one(LinearFunctional::gaussian_full(1), interior_point(1, 2)).unwrap();
    let cfg = SearchConfig {
        start: 0.0,
        ..Default::default()
    };
    let gens = [Polynomial::univariate(&[0.3, 0.0, -1.0, 0.0, 1.0])];
    let plan = find_tau(&a, &gens, 2, &cfg).unwrap();
    assert_eq!(plan.time(), 0.0);
    let l = LinearFunctional::gaussian_full(1);
    let prob = transport_problem(&l, &plan, &gens).unwrap();
    assert_eq!(prob.probes[0], gens[0]);
    for alpha in monomial_basis(1, prob.bound).monomials() {
        assert_eq!(prob.functional.monomial_value(alpha).unwrap(), l.monomial_value(alpha).unwrap());
    }
}

#[test]
fn graded_full_scenario() {
    let plan = graded_plan();
    let c = constants(plan);
    assert_eq!(c[0], 1.0);
    assert!(c.windows(2).all(|w| w[0] <= w[1]));
    assert!(c.iter().all(|&v| v >= 1.0));
    let check = verify_plan(plan, 1e-8, 1e-8).unwrap();
    assert!(check.passed(), "{check:?}");
    assert_eq!(plan.certificates.len(), 10);
    for cert in &plan.certificates {
        let g = cert.generator.degree().finite().unwrap();
        assert!(cert.transported.degree().finite().unwrap() <= g.div_ceil(2) * 2);
    }
}

#[test]
fn custom_ladder_reproduces_full() {
    let n = 1;
    let d_max = 3;
    let samples: Vec<Polynomial> = graded_plan().certificates.iter().map(|c| c.generator.clone()).collect();
    let ladder: Vec<(u32, LinearFunctional)> = (0..=d_max)
        .map(|d| (d, LinearFunctional::graded(n, d, Parity::Even, Domain::Full).unwrap()))
        .collect();
    let fs: Vec<Polynomial> = (0..=d_max).map(|d| interior_point(n, d)).collect();
    let custom = build_graded_custom(&ladder, &fs, &samples, &SearchConfig::default()).unwrap();
    let full = build_graded_full(n, d_max, &samples, None, &SearchConfig::default()).unwrap();
    assert_eq!(constants(&custom), constants(&full));
    let PlanKind::Graded { ladder, .. } = custom.kind else { panic!() };
    assert_eq!(ladder, Ladder::Custom);
    assert_eq!(custom.operator, full.operator);
}

#[test]
fn orthant_scenario() {
    let plan = orthant_x_scenario(&SearchConfig::default()).unwrap();
    let PlanKind::Graded { levels, ladder, .. } = &plan.kind else { panic!() };
    assert_eq!(*ladder, Ladder::Orthant);
    assert!(levels[0].tilde.is_none());
    assert!(levels[1..].iter().all(|l| l.tilde.as_ref().is_some_and(|t| t.c > 0.0)));
    assert!(verify_plan(&plan, 1e-8, 1e-8).unwrap().passed());
    // x itself is transported into an SOS on ℝ
    let x = plan.certificates.iter().find(|c| c.generator == Polynomial::var(1, 0)).unwrap();
    assert!(validate_certificate(&x.transported, &x.certificate, 1e-8, 1e-8));
}

#[test]
fn builders_reject_bad_input() {
    let cfg = SearchConfig::default();
    let neg = [Polynomial::univariate(&[-1.0, 0.0, 1.0])];
    assert!(matches!(
        build_graded_full(1, 1, &neg, None, &cfg),
        Err(TransportError::SampleNotNonneg { index: 0, .. })
    ));
    let high = [interior_point(1, 3)];
    assert!(matches!(build_graded_full(1, 2, &high, None, &cfg), Err(TransportError::DegreeOverflow { .. })));
    assert!(matches!(
        build_graded_full(1, 2, &[], Some(&[interior_point(1, 0)]), &cfg),
        Err(TransportError::InvalidLadder)
    ));
    let unordered = vec![
        (2, LinearFunctional::graded(1, 2, Parity::Even, Domain::Full).unwrap()),
        (1, LinearFunctional::graded(1, 1, Parity::Even, Domain::Full).unwrap()),
    ];
    let fs = [interior_point(1, 2), interior_point(1, 1)];
    assert_eq!(build_graded_custom(&unordered, &fs, &[], &cfg), Err(TransportError::InvalidLadder));
    let a = build_rank_one(LinearFunctional::gaussian_full(1), interior_point(1, 1)).unwrap();
    assert!(matches!(find_tau(&a, &[interior_point(1, 2)], 1, &cfg), Err(TransportError::DegreeOverflow { .. })));
    assert!(build_orthant(1, 1, &[Polynomial::univariate(&[0.0, -1.0])], &cfg).is_err());
}

#[test]
fn named_scenarios_resolve() {
    for name in SCENARIO_NAMES {
        assert!(scenario(name, &scenario_config(name)).is_some());
    }
    assert!(scenario("nope", &SearchConfig::default()).is_none());
}

#[test]
fn samples_are_nonnegative() {
    for seed in 0..5 {
        for p in sample_pos(Domain::Full, 1, 6, 8, seed) {
            assert!(grid_min(&p, 2001) >= -1e-12);
        }
        for p in sample_pos(Domain::Orthant, 1, 5, 8, seed) {
            let mut lo = f64::INFINITY;
            for i in 0..=2000 {
                lo = lo.min(p.evaluate(&[i as f64 * 0.01]).unwrap());
            }
            assert!(lo >= -1e-12);
        }
    }
    assert_eq!(sample_pos(Domain::Full, 2, 6, 3, 1)[0], motzkin());
    assert_eq!(sample_pos(Domain::Full, 2, 6, 3, 1), sample_pos(Domain::Full, 2, 6, 3, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // L̃(e^{τA}p) = L(p) on the transported block.
    #[test]
    fn transport_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = motzkin_plan();
        let l = LinearFunctional::riesz(random_table(&mut rng, 2, plan.block_bound()));
        let p = random_poly(&mut rng, 2, 6);
        let prob = transport_problem(&l, plan, std::slice::from_ref(&p)).unwrap();
        let lhs = prob.functional.apply(&prob.probes[0]).unwrap();
        let rhs = l.apply(&p).unwrap();
        let mag: f64 = p.terms().map(|(a, c)| (c * l.monomial_value(a).unwrap()).abs()).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * mag.max(1.0), "{lhs} vs {rhs}");
    }

    // Graded transport never raises a polynomial out of its block.
    #[test]
    fn graded_degree_non_inflation(seed in any::<u64>(), k in 0u32..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = graded_plan();
        let p = random_poly(&mut rng, 1, k);
        let e = plan.apply(&p).unwrap();
        prop_assert!(e.degree().at_most(k.div_ceil(2) * 2));
        let back = plan.exp(-1.0, &e).unwrap();
        prop_assert!(rel_diff(&back, &p) < 1e-9);
    }
}

#[test]
fn graded_constant_level_is_exact() {
    let plan = graded_plan();
    let e = plan.apply(&Polynomial::constant(1, 1.0)).unwrap();
    let want = std::f64::consts::PI.sqrt().exp();
    assert!((e.coeff(&MultiIndex::zeros(1)) - want).abs() < 1e-12 * want);
}
