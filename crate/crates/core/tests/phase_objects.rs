mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use ptycho_wdd::forward::{
    add_background, make_ambiguous_pair, make_window, modulation_object, scale_to_noise_level, simulate,
    two_step_object, type2_object, AmbiguityKind, Background, ObjectKind, ObjectSpec,
};
use ptycho_wdd::metrics::{aligned_error, measurement_error};
use ptycho_wdd::phase::{
    algorithm3, build_system, classify_rank, rank_pair, select_candidate, solve_rank1_pair, PhaseOutcome, RankClass,
};
use ptycho_wdd::wdd::{band_offsets, DiagonalSpectrum};
use ptycho_wdd::{fourier, ComplexSignal, Offset};

fn lost_zero(x: &ComplexSignal) -> DiagonalSpectrum {
    let mut s = DiagonalSpectrum::from_object(x.shape(), x.as_slice(), &band_offsets(3));
    for i in 0..3 {
        s.invalidate_zero(i);
    }
    s
}

fn noisy(
    x: &ComplexSignal,
    delta: usize,
    level: f64,
    seed: u64,
) -> (ptycho_wdd::forward::Window, ptycho_wdd::forward::MeasurementGrid) {
    let w = make_window(x.len(), delta, seed).unwrap();
    let y = simulate(x, &w).unwrap();
    let b = scale_to_noise_level(&y, &Background::random(y.shape(), 1.0, seed + 7), level).unwrap();
    (w, add_background(&y, &b).unwrap())
}

#[test]
fn random_phase_objects_recovered_through_background() {
    for (seed, delta) in [(1u64, 8usize), (2, 16), (3, 8)] {
        let x = ObjectSpec::new(ObjectKind::RandomPhase, seed).generate(64).unwrap();
        let (w, y) = noisy(&x, delta, 3.5, seed);
        let res = algorithm3(&y, &w).unwrap();
        assert_eq!(res.ranks.0, RankClass::Rank2);
        let est = res.unique().unwrap();
        assert!(aligned_error(x.as_slice(), est.as_slice()).unwrap() <= 1e-10);
        assert!(measurement_error(est, &w, &simulate(&x, &w).unwrap()).unwrap() <= 1e-10);
    }
}

#[test]
fn two_valued_first_diagonal_needs_second_lag() {
    let mut solved = 0;
    for d in [7usize, 8, 11, 12] {
        for seed in 0..4u64 {
            let x = two_step_object(d, seed).unwrap();
            let (r1, r2) = rank_pair(&lost_zero(&x)).unwrap();
            assert_eq!(r1, RankClass::Rank1, "d={d} seed={seed}");
            if r2 != RankClass::Rank2 {
                continue;
            }
            let (w, y) = noisy(&x, 3, 2.0, seed);
            let res = algorithm3(&y, &w).unwrap();
            assert_eq!(res.gamma, 3);
            assert!(aligned_error(x.as_slice(), res.unique().unwrap().as_slice()).unwrap() <= 1e-9);
            solved += 1;
        }
    }
    assert!(solved >= 4, "{solved}");
}

#[test]
fn rank_one_candidates_are_two_valued() {
    for seed in 0..6u64 {
        let x = two_step_object(10, seed).unwrap();
        let spec = lost_zero(&x);
        let sys = build_system(&spec, Offset::lag(1)).unwrap();
        let (p, q) = solve_rank1_pair(&sys).unwrap();
        for phi in [p, q] {
            let mut row = spec.row(1).to_vec();
            row[0] = sys.coefficient(phi);
            let g = fourier::idft(spec.shape(), &row);
            assert!(g.iter().all(|v| (v.norm() - 1.0).abs() < 1e-9));
            let mut values: Vec<C> = Vec::new();
            for v in &g {
                if !values.iter().any(|u| (u - v).norm() < 1e-7) {
                    values.push(*v);
                }
            }
            assert!(values.len() <= 2, "seed {seed}: {} values", values.len());
        }
    }
}

#[test]
fn selection_prefers_true_completion() {
    let x = two_step_object(9, 5).unwrap();
    let full = DiagonalSpectrum::from_object(x.shape(), x.as_slice(), &band_offsets(3));
    let truth = full.row(1).to_vec();
    let mut wrong = truth.clone();
    wrong[0] = -truth[0];
    let pick = select_candidate(x.shape(), [&wrong, &truth], full.row(2)).unwrap();
    assert_eq!(pick.index, 1);
    assert!(pick.residuals[1] < 1e-10);
    assert!(select_candidate(x.shape(), [&truth, &truth], full.row(2)).is_err());
}

#[test]
fn modulation_pair_is_type1() {
    let w = make_window(8, 3, 11).unwrap();
    let pair = make_ambiguous_pair(AmbiguityKind::TypeI { m: 3 }, &w).unwrap();
    let (a, b) = pair.measurements(&w).unwrap();
    assert!(a.max_abs_diff(&b) <= 1e-10 * a.max_abs());
    for y in [&a, &b] {
        assert!(matches!(
            algorithm3(y, &w).unwrap().outcome,
            PhaseOutcome::AmbiguousTypeI { d: 8 }
        ));
    }
}

#[test]
fn alternating_pair_is_type2_with_both_members() {
    let w = make_window(8, 3, 12).unwrap();
    let pair = make_ambiguous_pair(AmbiguityKind::TypeII { m: 1, rho: 0.7 }, &w).unwrap();
    let (a, b) = pair.measurements(&w).unwrap();
    assert!(a.max_abs_diff(&b) <= 1e-10 * a.max_abs());
    let res = algorithm3(&a, &w).unwrap();
    assert_eq!(res.ranks, (RankClass::Rank1, Some(RankClass::Rank0)));
    let PhaseOutcome::AmbiguousTypeII { first, second } = res.outcome else {
        panic!("expected the alternating-phase outcome");
    };
    let (x1, x2) = (&pair.first.0, &pair.second.0);
    let hit = |c: &ComplexSignal, x: &ComplexSignal| aligned_error(x.as_slice(), c.as_slice()).unwrap() < 1e-9;
    assert!((hit(&first, x1) && hit(&second, x2)) || (hit(&first, x2) && hit(&second, x1)));
}

#[test]
fn rank_law_over_random_families() {
    let mut seen = BTreeSet::new();
    let mut seed = 0u64;
    for d in 6..=20usize {
        for _ in 0..6 {
            seed += 1;
            let mut objects = vec![ObjectSpec::new(ObjectKind::RandomPhase, seed).generate(d).unwrap()];
            if d % 2 == 0 {
                objects.push(type2_object(d, seed as i64, 0.3, 1 + (seed % 2) as u8).unwrap());
            }
            for x in objects {
                let (r1, r2) = rank_pair(&lost_zero(&x)).unwrap();
                let pair = if r1 == RankClass::Rank1 {
                    (1, r2.value())
                } else {
                    (r1.value(), 9)
                };
                assert_ne!(pair, (1, 1), "d={d} seed={seed}");
                if d % 2 == 1 {
                    assert_ne!(pair, (1, 0), "d={d} seed={seed}");
                }
                seen.insert(pair);
            }
            let m = modulation_object(d, seed as i64);
            assert_eq!(
                classify_rank(&build_system(&lost_zero(&m), Offset::lag(1)).unwrap()),
                RankClass::Rank0
            );
            let (r1, _) = rank_pair(&lost_zero(&two_step_object(d, seed).unwrap())).unwrap();
            assert_eq!(r1, RankClass::Rank1);
        }
    }
    assert!(seen.contains(&(2, 9)) && seen.contains(&(1, 0)), "{seen:?}");
}

/// A single deviating phase increment keeps every diagonal two-valued, so
/// both lag systems have rank one.
#[test]
fn isolated_step_gives_rank_one_pair() {
    let d = 7usize;
    let beta = 0.4;
    let first = -((d - 1) as f64) * beta;
    let mut theta = 0.0;
    let x: Vec<C> = (0..d)
        .map(|k| {
            let v = cis(theta);
            theta += if k == 0 { first } else { beta };
            v
        })
        .collect();
    let x = ComplexSignal::new(x).unwrap();
    assert_eq!(rank_pair(&lost_zero(&x)).unwrap(), (RankClass::Rank1, RankClass::Rank1));
    let (w, y) = noisy(&x, 3, 1.0, 3);
    assert!(matches!(
        algorithm3(&y, &w),
        Err(ptycho_wdd::WddError::ImpossibleRankPair { first: 1, second: 1 })
    ));
}

#[test]
fn singular_values_match_dense_svd() {
    for seed in 0..5u64 {
        let x = ObjectSpec::new(ObjectKind::RandomPhase, seed).generate(13).unwrap();
        let sys = build_system(&lost_zero(&x), Offset::lag(1)).unwrap();
        let (s1, s2) = sys.singular_values();
        let (o1, o2) = dense_singular_values(&sys.matrix());
        assert!((s1 - o1).abs() <= 1e-10 * o1 && (s2 - o2).abs() <= 1e-10 * o1);
    }
}

#[test]
fn absorbing_object_rejected() {
    let x = ObjectSpec::new(ObjectKind::RandomComplex, 4).generate(16).unwrap();
    let w = make_window(16, 4, 4).unwrap();
    let err = algorithm3(&simulate(&x, &w).unwrap(), &w).unwrap_err();
    assert!(matches!(err, ptycho_wdd::WddError::NotPhaseObject { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phase_recovery_ignores_background_scale(seed in 0u64..5000, level in 0.0f64..20.0) {
        let x = ObjectSpec::new(ObjectKind::RandomPhase, seed).generate(24).unwrap();
        let (w, y) = noisy(&x, 4, level, seed);
        let res = algorithm3(&y, &w).unwrap();
        let est = res.unique().unwrap();
        prop_assert!(aligned_error(x.as_slice(), est.as_slice()).unwrap() <= 1e-9);
        prop_assert!(est.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }
}

#[test]
fn rank_zero_equivalences() {
    for d in [6usize, 9, 16] {
        for (x, expect) in [
            (modulation_object(d, 2), true),
            (
                ObjectSpec::new(ObjectKind::RandomPhase, d as u64).generate(d).unwrap(),
                false,
            ),
        ] {
            let spec = lost_zero(&x);
            let sys = build_system(&spec, Offset::lag(1)).unwrap();
            let rank0 = classify_rank(&sys) == RankClass::Rank0;
            let full_mag = (sys.zero_mag - d as f64).abs() <= 1e-8 * d as f64;
            let diag = x.diagonal(1);
            let constant = diag.iter().all(|v| (v - diag[0]).norm() < 1e-8);
            assert_eq!((rank0, full_mag, constant), (expect, expect, expect), "d={d}");
        }
    }
}

#[test]
fn propagation_from_coprime_diagonals() {
    for d in [7usize, 9, 10] {
        let x = ObjectSpec::new(ObjectKind::RandomPhase, 40 + d as u64)
            .generate(d)
            .unwrap();
        let mut lags = vec![1];
        if d % 2 == 1 {
            lags.push(2);
        }
        for j in lags {
            let back = ptycho_wdd::phase::propagate(x.diagonal(j as i64).as_slice(), j).unwrap();
            assert!(aligned_error(x.as_slice(), back.as_slice()).unwrap() < 1e-12);
        }
    }
}

#[test]
fn generic_phase_objects_unique_across_parities() {
    let mut count = 0;
    for d in 8..=64usize {
        for rep in 0..4u64 {
            if count == 200 {
                break;
            }
            count += 1;
            let seed = 1000 * d as u64 + rep;
            let x = ObjectSpec::new(ObjectKind::RandomPhase, seed).generate(d).unwrap();
            let delta = (d / 4).max(3);
            let (w, y) = noisy(&x, delta, 1.5, seed);
            let res = algorithm3(&y, &w).unwrap();
            let est = res.unique().unwrap();
            assert!(
                aligned_error(x.as_slice(), est.as_slice()).unwrap() <= 1e-8,
                "d={d} seed={seed}"
            );
        }
    }
    assert_eq!(count, 200);
}

#[test]
fn type2_candidates_differ_only_by_background() {
    let w = make_window(8, 3, 2).unwrap();
    let pair = make_ambiguous_pair(AmbiguityKind::TypeII { m: 1, rho: 0.7 }, &w).unwrap();
    let (a, _) = pair.measurements(&w).unwrap();
    let PhaseOutcome::AmbiguousTypeII { first, second } = algorithm3(&a, &w).unwrap().outcome else {
        panic!("expected the alternating-phase outcome");
    };
    for c in [&first, &second] {
        assert!(c.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }
    let (y1, y2) = (simulate(&first, &w).unwrap(), simulate(&second, &w).unwrap());
    let diff = y1.difference(&y2).unwrap();
    for l in 0..8 {
        for r in 1..8 {
            assert!((diff.get(l, r) - diff.get(l, 0)).abs() <= 1e-10 * a.max_abs());
        }
    }
}

#[test]
fn recovered_diagonals_are_unimodular() {
    let x = ObjectSpec::new(ObjectKind::RandomPhase, 9).generate(20).unwrap();
    let (w, y) = noisy(&x, 5, 3.0, 9);
    let est = algorithm3(&y, &w).unwrap().unique().unwrap().clone();
    for j in 0..3 {
        assert!(est.diagonal(j).iter().all(|v| (v.norm() - 1.0).abs() < 1e-8));
    }
}
