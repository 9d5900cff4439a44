mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sos_transport::builtin::{operator, prime_shift, shift_even, shift_odd};
use sos_transport::glab::{
    check_invariance, combination_check, degree_growth_profile, eval_rank_one, g_check, invariant_subspace,
    GVerdict, Membership, SubspaceOutcome, DEFAULT_K_MAX,
};
use sos_transport::linops::{FiniteMap, KrylovStatus, MapDefault, DEFAULT_EXPM_TOL};
use sos_transport::{exp_apply, expm, monomial_basis, restrict_matrix, op_apply, Degree, MultiIndex, OperatorExpr, Polynomial};

fn x(k: u32) -> Polynomial {
    Polynomial::monomial(MultiIndex::univariate(k), 1.0)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

#[test]
fn shift_operators_are_members() {
    for a in [shift_odd(), shift_even()] {
        let v = g_check(&a, 1, 16, None, DEFAULT_K_MAX).unwrap();
        assert!(v.is_member());
        assert!(v.max_dim() <= 2);
    }
}

#[test]
fn shift_sum_is_not_a_member() {
    let v = g_check(&operator("shift-sum", None).unwrap(), 1, 4, None, DEFAULT_K_MAX).unwrap();
    assert!(!v.is_member());
    let w = v.witness().unwrap();
    match &w.outcome {
        SubspaceOutcome::BlowUp { cause, bound_hit, .. } => {
            assert_eq!(*cause, KrylovStatus::DegreeEscape);
            assert_eq!(*bound_hit, 16);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn prime_shift_is_member() {
    let v = g_check(&prime_shift(100), 1, 20, Some(100), DEFAULT_K_MAX).unwrap();
    assert!(v.is_member());
    assert!(v.max_dim() <= 2);
}

#[test]
fn step_cap_reports_no_stabilization() {
    // x^k ↦ x^{k+1} truncated far away: degrees climb one step at a time
    let mut map = FiniteMap::new(1, MapDefault::Zero);
    for k in 0..200 {
        map = map.with_image(MultiIndex::univariate(k), x(k + 1));
    }
    let a = OperatorExpr::FiniteMap(map);
    let r = invariant_subspace(&a, &MultiIndex::univariate(0), 1000, 10).unwrap();
    match r.outcome {
        SubspaceOutcome::BlowUp { cause, .. } => assert_eq!(cause, KrylovStatus::NoStabilization),
        other => panic!("{other:?}"),
    }
    let profile = degree_growth_profile(&a, &MultiIndex::univariate(0), 5).unwrap();
    assert_eq!(profile, (0..=5).map(Degree::Finite).collect::<Vec<_>>());
}

#[test]
fn verdict_json_is_stable() {
    let v = g_check(&shift_odd(), 1, 6, None, DEFAULT_K_MAX).unwrap();
    let s = serde_json::to_string(&v).unwrap();
    let back: GVerdict = serde_json::from_str(&s).unwrap();
    assert_eq!(back, v);
    assert!(s.contains(r#""verdict":"member_within_bounds""#));
    let again = serde_json::to_string(&g_check(&shift_odd(), 1, 6, None, DEFAULT_K_MAX).unwrap()).unwrap();
    assert_eq!(again, s);
}

#[test]
fn eval_rank_one_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n = rng.random_range(1..=3);
        let (y1, y2) = (random_point(&mut rng, n), random_point(&mut rng, n));
        let (p1, p2) = (random_poly(&mut rng, n, 3), random_poly(&mut rng, n, 3));
        let f = random_poly(&mut rng, n, 4);
        let a1 = eval_rank_one(y1.clone(), p1.clone()).unwrap();
        let a2 = eval_rank_one(y2.clone(), p2.clone()).unwrap();
        let f1 = f.evaluate(&y1).unwrap();
        let f2 = f.evaluate(&y2).unwrap();

        let sum = op_apply(&OperatorExpr::sum(vec![a1.clone(), a2.clone()]), &f).unwrap();
        let mut want = p1.scale(f1);
        want.axpy(f2, &p2);
        assert!(rel_diff(&sum, &want) < 1e-12);

        let comp = op_apply(&OperatorExpr::compose(a1.clone(), a2.clone()), &f).unwrap();
        let want = p1.scale(f2 * p2.evaluate(&y1).unwrap());
        assert!(rel_diff(&comp, &want) < 1e-12);

        let t = rng.random_range(-1.0..1.0);
        let e = exp_apply(&a1, t, &f, 4).unwrap();
        let m = restrict_matrix(&a1, &monomial_basis(n, 4)).unwrap();
        let want = expm(&m, t, DEFAULT_EXPM_TOL).unwrap().apply(&f).unwrap();
        assert!(rel_diff(&e, &want) < 1e-9);
    }
}

#[test]
fn rank_one_combinations_stay_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let gens: Vec<OperatorExpr> = (0..3)
        .map(|_| eval_rank_one(random_point(&mut rng, 2), random_poly(&mut rng, 2, 3)).unwrap())
        .collect();
    let r = combination_check(&gens, 2, 3, None, DEFAULT_K_MAX, 6, 3).unwrap();
    assert!(r.all_members());
    for c in &r.combinations {
        assert!((c.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let shifts = [shift_odd(), shift_even()];
    let r = combination_check(&shifts, 1, 3, None, DEFAULT_K_MAX, 4, 3).unwrap();
    assert!(!r.all_members());
}

fn degree_preserving(rng: &mut ChaCha8Rng, n: usize, d: u32) -> OperatorExpr {
    let mut map = FiniteMap::new(n, MapDefault::Zero);
    for a in monomial_basis(n, d).monomials() {
        map = map.with_image(a.clone(), random_poly(rng, n, a.degree()));
    }
    OperatorExpr::FiniteMap(map)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // A stabilized space is invariant, its dimension sequence is
    // nondecreasing and ends at the basis size.
    #[test]
    fn stabilization_is_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=2);
        let a = degree_preserving(&mut rng, n, 3);
        let alpha = monomial_basis(n, 3).monomials()[rng.random_range(0..monomial_basis(n, 3).len())].clone();
        let r = invariant_subspace(&a, &alpha, 3, DEFAULT_K_MAX).unwrap();
        prop_assert!(r.is_stabilized());
        prop_assert!(r.dims.windows(2).all(|w| w[0] <= w[1]));
        let SubspaceOutcome::Stabilized { basis, .. } = &r.outcome else { unreachable!() };
        prop_assert_eq!(*r.dims.last().unwrap(), basis.len());
        prop_assert!(r.invariance_residual < 1e-10);
        prop_assert!(check_invariance(&a, basis).unwrap());
    }

    // f ↦ f(y)·p has orbits of dimension at most 2.
    #[test]
    fn rank_one_orbits_are_small(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=2);
        let a = eval_rank_one(random_point(&mut rng, n), random_poly(&mut rng, n, 4)).unwrap();
        let v = g_check(&a, n, 3, None, DEFAULT_K_MAX).unwrap();
        prop_assert_eq!(&v.membership, &Membership::MemberWithinBounds);
        prop_assert!(v.max_dim() <= 2);
    }
}
