use std::sync::Arc;

use hrlab::counterexample::build_counterexample;
use hrlab::distributions::DistModel;
use hrlab::sequences::*;
use hrlab::series_lab::*;
use proptest::prelude::*;

fn rad() -> DistModel {
    DistModel::rademacher()
}

fn one() -> WeightSequence {
    WeightSequence::constant_one()
}

fn lin() -> NormingSequence {
    NormingSequence::power(1.0).unwrap()
}

#[test]
fn condition_ii_examples() {
    let v = eval_condition_ii(&rad(), &one(), &lin(), 0.5, 10_000).unwrap();
    assert_eq!(v.verdict, Verdict::Converges);
    assert_eq!(v.tail_bound, Some(0.0));
    // Terms n·1·P(|X| ≥ n/2): n = 1, 2 contribute 1 + 2.
    assert_eq!(v.partial_sum, 3.0);

    let p = DistModel::pareto(1.5, 1.0).unwrap();
    let v = eval_condition_ii(&p, &one(), &lin(), 1.0, 10_000).unwrap();
    assert_eq!(v.verdict, Verdict::Diverges);
    match v.lower_bound.unwrap() {
        LowerBound::Terms {
            exponent, constant, ..
        } => {
            assert!((exponent - 0.5).abs() < 1e-12);
            assert!((constant - 1.0).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }

    let p3 = DistModel::pareto(3.0, 1.0).unwrap();
    let v = eval_condition_ii(&p3, &one(), &lin(), 1.0, 10_000).unwrap();
    assert_eq!(v.verdict, Verdict::Converges);
    // Σ n^{-2} from 1: partial plus tail brackets π²/6.
    let z2 = std::f64::consts::PI.powi(2) / 6.0;
    assert!(v.partial_sum < z2 && v.upper_bound().unwrap() >= z2);
    assert!(eval_condition_ii(&rad(), &one(), &lin(), 0.0, 10_000).is_err());
}

#[test]
fn condition_iii_examples() {
    let (tau, a) = sp_sequences();
    let v = eval_condition_iii(&rad(), &tau, &a, 1.0, 100_000).unwrap();
    assert_eq!(v.verdict, Verdict::Converges);
    // Terms are n^{-2} from n = 2 on.
    let direct: f64 = (2..=100_000u64).map(|n| (n as f64).powi(-2)).sum();
    assert!((v.partial_sum - direct).abs() < 1e-10);
    let z2m1 = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
    assert!(v.upper_bound().unwrap() >= z2m1);
    // Tail bound ∫_H^∞ x^{-2} up to the refinement.
    assert!(v.tail_bound.unwrap() <= 1.0 / 100_000.0 * 1.02);

    // Every truncation level in the window sits below the support: T = 0
    // and zero terms, with the tail beyond carried by the E X² bound.
    let far = DistModel::atomic(vec![(1e3, 0.5)], 0.0).unwrap();
    let v = eval_condition_iii(&far, &tau, &a, 1.0, 10_000).unwrap();
    assert_eq!(v.partial_sum, 0.0);
    assert_eq!(v.verdict, Verdict::Converges);
    assert!(v.tail_bound.unwrap().is_finite());

    let ce = DistModel::counterexample(Arc::new(build_counterexample(4).unwrap()));
    let v = eval_condition_iii(&ce, &tau, &a, 1.0, 10_000).unwrap();
    assert_eq!(v.verdict, Verdict::Diverges);
    assert!(matches!(v.lower_bound, Some(LowerBound::Blocks { count: 4, .. })));
}

#[test]
fn closed_form_partial_sums_match_p_series() {
    let (tau, a) = sp_sequences();
    for eps in [0.5, 1.0, 2.0] {
        let v = eval_condition_iii(&rad(), &tau, &a, eps, 20_000).unwrap();
        // ε a_n > 1 from the first n where this holds; earlier terms are 0.
        let n0 = (2..).find(|&n| eps * a.eval(n) > 1.0).unwrap();
        let direct: f64 = (n0..=20_000u64).map(|n| (n as f64).powf(-1.0 - eps * eps)).sum();
        assert!((v.partial_sum - direct).abs() < 1e-10, "eps {eps}");
    }
}

#[test]
fn cor_sp_examples() {
    let grid = DEFAULT_EPS_GRID;
    let r = eval_cor_sp(&rad(), &grid, 20_000).unwrap();
    assert_eq!(r.mean.status, CheckVerdict::Holds);
    assert_eq!(r.moment.status, CheckVerdict::Holds);
    assert_eq!(r.series.status, CheckVerdict::Holds);
    assert!(r.term_identity_max_error < 1e-12);

    let g = eval_cor_sp(&DistModel::gaussian(1.0).unwrap(), &grid, 20_000).unwrap();
    assert_eq!(g.mean.status, CheckVerdict::Holds);
    assert_eq!(g.moment.status, CheckVerdict::Holds);
    assert_eq!(g.series.status, CheckVerdict::Holds);

    let ce = DistModel::counterexample(Arc::new(build_counterexample(4).unwrap()));
    let c = eval_cor_sp(&ce, &[1.0], 10_000).unwrap();
    assert_eq!(c.mean.status, CheckVerdict::Holds);
    assert_eq!(c.moment.status, CheckVerdict::Holds);
    assert_eq!(c.series.status, CheckVerdict::Fails);
    assert_eq!(c.series.per_eps[0].verdict.verdict, Verdict::Diverges);
}

#[test]
fn sp_weak_examples() {
    let r = eval_sp_weak_bound(&rad(), 1.0, 100_000).unwrap();
    assert_eq!(r.verdict.verdict, Verdict::Converges, "{:?}", r.verdict);
    assert!(r.chain_start.is_some());
    let g = eval_sp_weak_bound(&DistModel::gaussian(1.0).unwrap(), 0.5, 100_000).unwrap();
    assert_eq!(g.verdict.verdict, Verdict::Converges, "{:?}", g.verdict);
    assert!(eval_sp_weak_bound(&DistModel::pareto(2.0, 1.0).unwrap(), 0.5, 10_000).is_err());
}

fn rho_sp() -> WeightSequence {
    // n τ_n / a_n³ = (n ln n)^{-3/2}.
    WeightSequence::power_law(-1.5, SlowlyVaryingSpec::plain_log(-1.5), 2).unwrap()
}

#[test]
fn elementary_lemma_examples() {
    let (_, a) = sp_sequences();
    let tau = WeightSequence::harmonic();
    for x in [rad(), DistModel::gaussian(1.0).unwrap()] {
        match lemma_elementary_check(&rho_sp(), &tau, &a, &x, 3.0, 100_000).unwrap() {
            ElementaryOutcome::InequalityHolds { margin, .. } => assert!(margin >= 0.0),
            other => panic!("{other:?}"),
        }
    }
    // All mass above every b_n in the window: the left side is 0.
    let far = DistModel::atomic(vec![(1e9, 0.5)], 0.0).unwrap();
    match lemma_elementary_check(&rho_sp(), &tau, &a, &far, 3.0, 10_000).unwrap() {
        ElementaryOutcome::InequalityHolds { lhs, .. } => assert_eq!(lhs, 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn klesov_lemma_examples() {
    let (_, a) = sp_sequences();
    let tau = WeightSequence::harmonic();
    match lemma_klesov_check(&tau, &a, &rad(), 3.0, 1.0, 100_000).unwrap() {
        KlesovOutcome::FiniteCertified { bound, .. } => assert!(bound.is_finite()),
        other => panic!("{other:?}"),
    }
    // ν = 2 with these sequences: the growth hypothesis has a divergent tail
    // and the series itself is Σ 1/(n ln n).
    assert!(matches!(
        lemma_klesov_check(&tau, &a, &rad(), 2.0, 1.0, 100_000).unwrap(),
        KlesovOutcome::Inconclusive { .. }
    ));
    let p = DistModel::pareto(1.5, 1.0).unwrap();
    match lemma_klesov_check(&one(), &lin(), &p, 2.0, 1.0, 10_000).unwrap() {
        KlesovOutcome::Inconclusive { reason } => assert!(reason.contains("Diverges"), "{reason}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn comparison_lemma_examples() {
    let tau = one().starting_at(2);
    let inv = |n: u64| 1.0 / n as f64;
    match lemma_comp_check(inv, inv, &tau, 3, 10_000).unwrap() {
        CompOutcome::ImplicationHolds {
            c_r,
            bound,
            difference_series,
            ..
        } => {
            let bsum: f64 = (2..=10_000u64).map(inv).sum();
            assert!((bound - c_r * bsum).abs() < 1e-9);
            assert_eq!(difference_series.partial_sum, 0.0);
        }
        other => panic!("{other:?}"),
    }
    match lemma_comp_check(inv, |n| 1.0 / n as f64 + 1.0 / (n * n) as f64, &tau, 1, 10_000).unwrap() {
        CompOutcome::ImplicationHolds { c_r, .. } => assert_eq!(c_r, 1.0),
        other => panic!("{other:?}"),
    }
    match lemma_comp_check(inv, |n| 1.0 / n as f64 + 1.0 / (n * n) as f64, &tau, 2, 10_000).unwrap() {
        CompOutcome::ImplicationHolds {
            bound,
            difference_series,
            beta_series,
            ..
        } => {
            assert!(bound.is_finite());
            assert_eq!(difference_series.verdict, Verdict::Converges);
            assert_eq!(beta_series.verdict, Verdict::Diverges);
        }
        other => panic!("{other:?}"),
    }
    assert!(lemma_comp_check(|_| 1.5, inv, &tau, 2, 10_000).is_err());
}

#[test]
fn classify_examples() {
    let v = classify_series(|n| (n as f64).powi(-2), 1, 10_000).unwrap();
    assert_eq!(v.verdict, Verdict::Converges);
    assert!((v.tail_bound.unwrap() - 1e-4).abs() < 1e-12);
    assert_eq!(
        classify_series(|n| 1.0 / n as f64, 1, 10_000).unwrap().verdict,
        Verdict::Diverges
    );
    let v = classify_series(|n| 1.0 / (n as f64 * (n as f64).ln()), 2, 100_000).unwrap();
    assert_eq!(v.verdict, Verdict::Inconclusive);
}

#[test]
fn aux_implication_on_a_small_battery() {
    for alpha in [0.6, 0.75, 1.0] {
        let a = NormingSequence::power(alpha).unwrap();
        let tau = one();
        let g = verify_growth_condition(&tau, &a, 1.0, GrowthVariant::Quadratic, 2, 100_000).unwrap();
        let ii = eval_condition_ii(&rad(), &tau, &a, 1.0, 100_000).unwrap();
        if g.verdict == CheckVerdict::Holds && ii.verdict == Verdict::Converges {
            let iii = eval_condition_iii(&rad(), &tau, &a, 1.0, 100_000).unwrap();
            assert_eq!(iii.verdict, Verdict::Converges, "alpha {alpha}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verdicts_carry_certificates(q in 0.5f64..4.0, alpha in 0.3f64..1.5, eps in 0.2f64..3.0) {
        let p = DistModel::pareto(q, 1.0).unwrap();
        let a = NormingSequence::power(alpha).unwrap();
        let v = eval_condition_ii(&p, &one(), &a, eps, 2_000).unwrap();
        match v.verdict {
            Verdict::Converges => prop_assert!(v.tail_bound.is_some_and(|t| t.is_finite() && t >= 0.0)),
            Verdict::Diverges => prop_assert!(v.lower_bound.as_ref().is_some_and(|l| l.is_positive())),
            Verdict::Inconclusive => {}
        }
    }

    #[test]
    fn sp_term_identity(eps in 0.1f64..3.0, sigma in 0.2f64..3.0) {
        let g = DistModel::gaussian(sigma).unwrap();
        let r = eval_cor_sp(&g, &[eps], 1_000).unwrap();
        prop_assert!(r.term_identity_max_error < 1e-12);
    }

    #[test]
    fn comparison_identity(r in 1u32..7, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let lhs = (x - y).powi(r as i32);
        let rhs = x.powi(r as i32) - y * comparison_polynomial(r, x, y);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn condition_ii_log_divergent_pareto_gets_block_certificate() {
    // q = 2 with the √(n log n) pair: terms are exactly 1/(n ln n).
    let (tau, a) = sp_sequences();
    let p = DistModel::pareto(2.0, 1.0).unwrap();
    let v = eval_condition_ii(&p, &tau, &a, 1.0, 100_000).unwrap();
    assert_eq!(v.verdict, Verdict::Diverges);
    match v.lower_bound.unwrap() {
        LowerBound::Blocks { count, min_block, .. } => {
            assert!(count >= 3);
            // Each block integrates 1/(x ln x) over one unit of ln ln x.
            assert!(min_block > 0.5 && min_block <= 1.0, "{min_block}");
        }
        other => panic!("{other:?}"),
    }
}
