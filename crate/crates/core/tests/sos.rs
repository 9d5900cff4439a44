mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sos_transport::builtin::motzkin;
use sos_transport::sos::{
    check_certificate, find_negative, find_negative_orthant, orthant_interior_point, sdpa_string,
};
use sos_transport::{
    basis_size, build_gram_problem, certify_sos, export_sdpa, interior_point, validate_certificate,
    CertifyConfig, CertifyOutcome, Polynomial,
};

fn cfg() -> CertifyConfig {
    CertifyConfig::default()
}

#[test]
fn small_examples() {
    let sq = Polynomial::univariate(&[1.0, -2.0, 1.0]);
    let c = certify_sos(&sq, 1, &cfg());
    let cert = c.certificate().expect("(x-1)^2 certifies");
    assert!(validate_certificate(&sq, cert, 1e-8, 1e-8));

    let minus_one = Polynomial::constant(1, -1.0);
    match certify_sos(&minus_one, 0, &cfg()) {
        CertifyOutcome::RefutedByPoint { value, .. } => assert_eq!(value, -1.0),
        other => panic!("{other:?}"),
    }

    let x = Polynomial::var(1, 0);
    match certify_sos(&x, 1, &cfg()) {
        CertifyOutcome::RefutedByPoint { witness, value } => {
            assert!(witness[0] < 0.0);
            assert_eq!(value, witness[0]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn motzkin_is_not_certified() {
    let c = certify_sos(&motzkin(), 3, &cfg());
    match c {
        CertifyOutcome::Undecided { min_eig, .. } => assert!(min_eig < -1e-4),
        other => panic!("{other:?}"),
    }
    assert!(find_negative(&motzkin(), &cfg()).is_none());
}

#[test]
fn interior_points_certify() {
    for n in 1..=3 {
        for d in 0..=2 {
            for p in [interior_point(n, d), orthant_interior_point(n, d)] {
                let c = certify_sos(&p, d, &cfg());
                let cert = c.certificate().expect("interior point certifies");
                assert!(cert.min_eig > 1e-3, "n={n} d={d}");
            }
        }
    }
}

#[test]
fn orthant_search_folds_points() {
    assert!(find_negative_orthant(&Polynomial::var(1, 0), &cfg()).is_none());
    let p = Polynomial::univariate(&[0.0, -1.0, 0.0]);
    let (w, v) = find_negative_orthant(&p, &cfg()).unwrap();
    assert!(w[0] > 0.0 && v < 0.0);
}

#[test]
fn tampered_certificates_fail_the_check() {
    let p = interior_point(2, 1);
    let c = certify_sos(&p, 1, &cfg());
    let cert = c.certificate().unwrap().clone();
    assert!(check_certificate(&p, &cert, 1e-8, 1e-8).passed());

    let mut bad = cert.clone();
    bad.gram[0][0] += 1e-3;
    assert!(!validate_certificate(&p, &bad, 1e-8, 1e-8));

    let mut bad = cert.clone();
    bad.gram[0][1] += 0.5;
    assert!(!check_certificate(&p, &bad, 1e-8, 1e-8).symmetric);

    let mut bad = cert.clone();
    bad.basis.swap(0, 1);
    assert!(!check_certificate(&p, &bad, 1e-8, 1e-8).basis_ok);

    let mut bad = cert;
    bad.squares[0].weight = -1.0;
    assert!(!check_certificate(&p, &bad, 1e-8, 1e-8).passed());

    let other = Polynomial::univariate(&[1.0, 0.0, 1.0]);
    let c = certify_sos(&other, 1, &cfg());
    assert!(!validate_certificate(&p, c.certificate().unwrap(), 1e-8, 1e-8));
}

#[test]
fn gram_problem_counts() {
    for n in 1..=3usize {
        for d in 0..=3u32 {
            let p = interior_point(n, d);
            let prob = build_gram_problem(&p, d).unwrap();
            assert_eq!(prob.size(), basis_size(n, d));
            assert_eq!(prob.num_constraints(), basis_size(n, 2 * d));
            let cells: usize = prob.groups.values().map(Vec::len).sum();
            assert_eq!(cells, prob.size() * prob.size());
        }
    }
    assert!(build_gram_problem(&motzkin(), 2).is_err());
}

#[test]
fn sdpa_file_counts() {
    let prob = build_gram_problem(&motzkin(), 3).unwrap();
    let s = sdpa_string(&prob);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[1].parse::<usize>().unwrap(), 28);
    assert_eq!(lines[2], "1");
    assert_eq!(lines[3].parse::<usize>().unwrap(), 10);
    assert_eq!(lines[4].split_whitespace().count(), 28);
    // one entry per upper-triangle cell
    assert_eq!(lines.len() - 5, 10 * 11 / 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("motzkin.dat-s");
    export_sdpa(&prob, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), s);
}

#[test]
fn certificate_json_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_sos(&mut rng, 2, 2, 3);
    let out = certify_sos(&p, 2, &cfg());
    let s = serde_json::to_string(&out).unwrap();
    let back: CertifyOutcome = serde_json::from_str(&s).unwrap();
    assert_eq!(back, out);
    assert!(validate_certificate(&p, back.certificate().unwrap(), 1e-8, 1e-8));
}

#[test]
fn deterministic_for_fixed_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = random_sos(&mut rng, 2, 2, 2);
    let a = serde_json::to_string(&certify_sos(&p, 2, &cfg())).unwrap();
    let b = serde_json::to_string(&certify_sos(&p, 2, &cfg())).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // Certified outcomes always re-validate; random SOS inputs never refute.
    #[test]
    fn random_sos_certifies_soundly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=2);
        let d = rng.random_range(1..=2);
        let r = rng.random_range(1..=3);
        let p = random_sos(&mut rng, n, d, r);
        let out = certify_sos(&p, d, &cfg());
        match &out {
            CertifyOutcome::Certified(c) => prop_assert!(validate_certificate(&p, c, 1e-8, 1e-8)),
            CertifyOutcome::RefutedByPoint { .. } => prop_assert!(false, "SOS input refuted"),
            CertifyOutcome::Undecided { .. } => {}
        }
        prop_assert!(out.is_certified());
    }

    // A refutation witness is a genuine negative point.
    #[test]
    fn refutations_are_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_poly(&mut rng, 1, 4);
        let out = certify_sos(&p, 2, &cfg());
        match out {
            CertifyOutcome::RefutedByPoint { witness, value } => {
                let v = p.evaluate(&witness).unwrap();
                prop_assert!(v < 0.0);
                prop_assert!((v - value).abs() <= 1e-9 * v.abs().max(1.0));
            }
            CertifyOutcome::Certified(c) => {
                prop_assert!(validate_certificate(&p, &c, 1e-8, 1e-8));
                prop_assert!(grid_min(&p, 4001) >= -1e-8 * p.max_abs_coeff().max(1.0));
            }
            CertifyOutcome::Undecided { .. } => {}
        }
    }
}
