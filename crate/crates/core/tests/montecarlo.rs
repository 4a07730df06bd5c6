use hrlab::distributions::DistModel;
use hrlab::montecarlo::*;
use hrlab::numerics::{log_spaced, ls_slope, two_sided_normal_tail};
use hrlab::sequences::{CheckVerdict, NormingSequence, WeightSequence};
use hrlab::series_lab::sp_sequences;
use hrlab::verdict::Verdict;
use proptest::prelude::*;

fn rad() -> DistModel {
    DistModel::rademacher()
}

fn cfg(seed: u64, reps: u64) -> SimConfig {
    SimConfig::new(seed, reps)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

/// Exact `P(|S_n| ≥ x)` for Rademacher summands, by binomial sums in logs.
fn binomial_two_sided(n: u64, x: f64) -> f64 {
    let ln2 = 2f64.ln();
    let mut ln_c = 0.0f64;
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if ((2 * k) as f64 - n as f64).abs() >= x {
            total += (ln_c - n as f64 * ln2).exp();
        }
    }
    total
}

#[test]
fn tail_examples() {
    let c = cfg(11, 20_000);
    let t = estimate_tail(&rad(), 4, 4.0, &c).unwrap();
    assert!((t.p_hat - 0.125).abs() <= 4.0 * t.std_err, "{t:?}");
    assert_eq!(estimate_tail(&rad(), 4, 5.0, &c).unwrap().p_hat, 0.0);
    for d in [
        rad(),
        DistModel::gaussian(2.0).unwrap(),
        DistModel::pareto(1.5, 1.0).unwrap(),
    ] {
        assert_eq!(estimate_tail(&d, 7, 0.0, &c).unwrap().p_hat, 1.0);
    }
    assert!(estimate_tail(&rad(), 4, 1.0, &cfg(1, 999)).is_err());
    assert!(estimate_tail(&rad(), 0, 1.0, &c).is_err());
    assert!(estimate_tail(&rad(), 4, -1.0, &c).is_err());
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let c = cfg(2024, 50_000);
    let p = DistModel::pareto(1.5, 1.0).unwrap();
    let one = in_pool(1, || {
        (
            estimate_tail(&p, 50, 30.0, &c).unwrap(),
            estimate_median(&p, 50, &c).unwrap(),
        )
    });
    let many = in_pool(7, || {
        (
            estimate_tail(&p, 50, 30.0, &c).unwrap(),
            estimate_median(&p, 50, &c).unwrap(),
        )
    });
    assert_eq!(one.0.p_hat.to_bits(), many.0.p_hat.to_bits());
    assert_eq!(one.1, many.1);
}

#[test]
fn median_examples() {
    let c = cfg(3, 10_001);
    for d in [
        rad(),
        DistModel::gaussian(1.0).unwrap(),
        DistModel::pareto(1.0, 1.0).unwrap(),
    ] {
        let m = estimate_median(&d, 25, &c).unwrap();
        assert!(m.contains(0.0), "{m:?}");
        assert_eq!(m.covers_zero, Some(true));
    }
    let m = estimate_median(&rad(), 2, &c).unwrap();
    assert_eq!(m.mu_hat, 0.0);
    let shifted = DistModel::shifted(rad(), 1.0).unwrap();
    let m = estimate_median(&shifted, 10, &c).unwrap();
    assert!(m.contains(10.0), "{m:?}");
    assert_eq!(m.covers_zero, None);
    assert!([m.ci_low, m.ci_high, m.mu_hat].iter().all(|v| v.fract() == 0.0));
    assert!(estimate_median(&rad(), 4, &cfg(3, 500)).is_err());
}

#[test]
fn condition_i_examples() {
    let tau = WeightSequence::constant_one();
    let root = NormingSequence::power(0.5).unwrap();
    let grid = log_spaced(1, 10_000, 12);
    let c = cfg(5, 2_000).with_n_grid(grid.clone());

    let sym = estimate_condition_i(&rad(), &tau, &root, &[0.5, 1.0], &c).unwrap();
    assert_eq!(sym.report.status, CheckVerdict::Holds);
    assert!(sym
        .flags
        .iter()
        .all(|f| f.flagged.is_empty() && f.flagged_weight == 0.0));

    let one = DistModel::point_mass(1.0).unwrap();
    let det = estimate_condition_i(&one, &tau, &root, &[1.0], &c).unwrap();
    let want: Vec<u64> = grid.iter().copied().filter(|&n| n >= 2).collect();
    assert_eq!(det.flags[0].flagged, want);
    assert_eq!(det.flags[0].flagged_weight, want.len() as f64);
    assert_eq!(det.report.status, CheckVerdict::Inconclusive);

    let drift = DistModel::shifted(rad(), 0.1).unwrap();
    let d = estimate_condition_i(&drift, &tau, &root, &[1.0], &c).unwrap();
    let f = &d.flags[0].flagged;
    assert!(f.contains(&10_000), "{f:?}");
    assert!(f.iter().all(|&n| n > 100), "{f:?}");
}

#[test]
fn weighted_series_bounded_support() {
    let c = cfg(9, 5_000).with_n_grid(log_spaced(1, 1000, 15));
    let a = NormingSequence::power(1.0).unwrap();
    let s = estimate_weighted_series(&rad(), &WeightSequence::constant_one(), &a, 1.5, &c).unwrap();
    assert!(s.points.iter().all(|p| p.p_hat == 0.0 && p.partial_sum == 0.0));
    assert!(s.interpolation.is_some());
}

#[test]
fn weighted_series_sp_rademacher_decays() {
    let (tau, a) = sp_sequences();
    let c = cfg(17, 100_000).with_n_grid(log_spaced(2, 2000, 16));
    let s = estimate_weighted_series(&rad(), &tau, &a, 1.0, &c).unwrap();
    let late: Vec<&SeriesPoint> = s.points.iter().filter(|p| p.n > 50).collect();
    for w in late.windows(2) {
        let slack = 3.0 * (w[0].term_std_err.powi(2) + w[1].term_std_err.powi(2)).sqrt();
        assert!(w[1].term <= w[0].term + slack, "{:?} -> {:?}", w[0], w[1]);
    }
    // Oracle terms are ≤ 2/n · n^{-1/2}-ish; the whole series is well below 2.
    let last = s.points.last().unwrap();
    assert!(last.partial_sum < 2.0 && last.partial_lower <= last.partial_sum);
    assert!(s.points.windows(2).all(|w| w[1].partial_sum >= w[0].partial_sum));
}

#[test]
fn weighted_series_pareto_terms_decay_like_root() {
    let c = cfg(23, 20_000).with_n_grid(log_spaced(100, 3000, 6));
    let a = NormingSequence::power(1.0).unwrap();
    let p = DistModel::pareto(1.5, 1.0).unwrap();
    let s = estimate_weighted_series(&p, &WeightSequence::constant_one(), &a, 1.0, &c).unwrap();
    let xs: Vec<f64> = s.points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = s.points.iter().map(|p| p.term.ln()).collect();
    let slope = ls_slope(&xs, &ys).unwrap();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
    let sums: Vec<f64> = s.points.iter().map(|p| p.partial_sum).collect();
    assert!(sums.last().unwrap() > &(2.0 * sums[0]));
}

#[test]
fn truncated_simulation_drops_large_summands() {
    // Rademacher truncated below 1 is identically 0.
    let c = cfg(1, 1_000).with_n_grid(vec![4, 8]).with_truncation(true);
    let a = NormingSequence::power(0.0001).unwrap();
    let s = estimate_weighted_series(&rad(), &WeightSequence::constant_one(), &a, 0.5, &c).unwrap();
    assert!(s.truncated && s.points.iter().all(|p| p.p_hat == 0.0));
}

#[test]
fn nagaev_example_at_one_hundred() {
    let root = NormingSequence::power(0.5).unwrap();
    let c = cfg(1, 1_000);
    let chk = nagaev_gap_check(&rad(), &root, 100, 1.0, 1.0, &c).unwrap();
    assert!(chk.exact);
    assert!((chk.p_hat - binomial_two_sided(100, 10.0)).abs() < 1e-12);
    assert!((chk.p_hat - 0.368_201_617_326_696_3).abs() < 1e-13);
    assert!((chk.gaussian_term - 0.317_310_507_862_914_1).abs() < 1e-15);
    assert!((chk.gap - 0.050_891_109_463_782).abs() < 1e-12);
    let unit = nagaev_gap_at(&rad(), 100, 10.0, 10.0, 1.0, None).unwrap();
    assert!((unit.bound - 0.1).abs() < 1e-15 && unit.pass);
    assert!(chk.pass);
}

#[test]
fn nagaev_gap_shrinks_like_inverse_root() {
    let root = NormingSequence::power(0.5).unwrap();
    let sweep = nagaev_sweep(
        &rad(),
        &root,
        &[25, 100, 400, 1600, 10_000],
        1.0,
        1.0,
        &cfg(1, 1_000),
    )
    .unwrap();
    assert!(sweep.all_pass);
    let slope = sweep.slope.unwrap();
    assert!((-0.7..=-0.3).contains(&slope), "slope {slope}");
    let g: Vec<f64> = sweep.checks.iter().map(|c| c.gap).collect();
    assert!((g[4] - 0.004_863_691_932_397_8).abs() < 1e-10);
}

#[test]
fn nagaev_zero_variance_regime() {
    let chk = nagaev_gap_at(&rad(), 50, 0.5, 0.5, NAGAEV_C, None).unwrap();
    assert_eq!(
        (chk.truncated_variance, chk.gaussian_term, chk.p_hat, chk.gap),
        (0.0, 0.0, 0.0, 0.0)
    );
    assert!(chk.pass);
    assert!(nagaev_gap_at(&DistModel::shifted(rad(), 1.0).unwrap(), 5, 2.0, 1.0, 1.0, None).is_err());
}

#[test]
fn nagaev_constant_is_reproducible_and_covers_battery() {
    let c = calibrate_nagaev_constant().unwrap();
    assert!((c - NAGAEV_C).abs() < 1e-12, "{c} vs {NAGAEV_C}");
    for (law, n, z) in nagaev_calibration_battery() {
        let x = z * (n as f64 * law.second_moment().unwrap()).sqrt();
        let chk = nagaev_gap_at(&law, n, 10.0, x, NAGAEV_C, None).unwrap();
        assert!(chk.pass, "{chk:?}");
    }
}

#[test]
fn nagaev_simulated_path_for_continuous_laws() {
    let a = NormingSequence::power(0.5).unwrap();
    let chk = nagaev_gap_check(
        &DistModel::gaussian(1.0).unwrap(),
        &a,
        50,
        2.0,
        1.0,
        &cfg(4, 50_000),
    )
    .unwrap();
    assert!(!chk.exact && chk.std_err > 0.0);
    assert!(chk.pass, "{chk:?}");
}

fn hj_grid(n: u64) -> Vec<f64> {
    hj_lambda_grid(&rad(), n)
}

#[test]
fn hj_trivial_small_lambda() {
    // λ/(2r) ≤ 1 puts every unit of Rademacher mass in the tail term.
    let (rows, exact) = hj_rows(&rad(), 10, 2, &[0.5, 1.0, 2.0, 4.0], &cfg(1, 1_000), Oracle::Auto).unwrap();
    assert!(exact);
    assert!(rows.iter().all(|r| r.tail_term == 10.0 && r.lhs <= 1.0));
    assert!(hj_rows(&rad(), 10, 1, &[1.0], &cfg(1, 1_000), Oracle::Auto).is_err());
}

#[test]
fn hj_fit_rademacher_exact_and_stable() {
    let fit = hj_fit(&rad(), 10, 2, &hj_grid(10), &cfg(1, 1_000)).unwrap();
    assert!(fit.exact && fit.c_r.is_finite() && fit.d_r.is_finite() && fit.d_r > 0.0);
    // Every frontier pair satisfies every row.
    for &(c, d) in &fit.frontier {
        for r in &fit.rows {
            assert!(r.lhs <= c * r.tail_term + d * r.power_term + 1e-12);
        }
    }
    let mc = |seed| {
        hj_fit_with(
            &rad(),
            10,
            2,
            &hj_grid(10),
            &cfg(seed, 200_000),
            Oracle::MonteCarlo,
        )
        .unwrap()
    };
    let (a, b) = (mc(1), mc(2));
    let ratio = a.d_r.max(b.d_r) / a.d_r.min(b.d_r);
    assert!(ratio < 1.1, "{} vs {}", a.d_r, b.d_r);
    let t = hj_transfer_check(
        &fit,
        &rad(),
        100,
        &hj_grid(100),
        &cfg(7, 200_000),
        Oracle::MonteCarlo,
        1.5,
    )
    .unwrap();
    assert!(t.pass, "worst ratio {}", t.worst_ratio);
}

#[test]
fn lemma_sp_rademacher_and_gaussian() {
    let grid = [10u64, 100, 1000, 10_000, 1_000_000];
    let c = cfg(8, 2_000);
    let r = lemma_sp_check(&rad(), &grid[..4], 1.0, &c).unwrap();
    assert_eq!(r.show1.status, CheckVerdict::Holds);
    assert!(r.log_plus_moment.finite().is_some());
    for row in &r.show2 {
        assert!((row.value - 1.0 / (row.n as f64).ln()).abs() < 1e-14);
    }
    assert_eq!(r.show2_status, CheckVerdict::Holds);
    assert!(r.show3.iter().all(|row| row.value == 0.0));
    assert_eq!(r.show3_status, CheckVerdict::Holds);
    assert_eq!(r.empirical.len(), 4);

    let g = lemma_sp_check(&DistModel::gaussian(1.0).unwrap(), &grid, 1.0, &c).unwrap();
    assert_eq!(g.show2_status, CheckVerdict::Holds);
    let last = g.show2.last().unwrap();
    assert!((last.value * (1e6f64).ln() - 1.0).abs() < 1e-12);
}

#[test]
fn lemma_sp_reports_divergent_moment_and_still_simulates() {
    let p = DistModel::pareto(2.0, 1.0).unwrap();
    let r = lemma_sp_check(&p, &[10, 100], 1.0, &cfg(2, 1_000)).unwrap();
    assert!(r.log_plus_moment.finite().is_none());
    assert!(r.note.unwrap().contains("diverges"));
    assert_eq!(r.empirical.len(), 2);
    assert_eq!(r.show1.status, CheckVerdict::Fails);
    assert_eq!(r.show1.per_eps[0].verdict.verdict, Verdict::Diverges);
}

#[test]
fn lemma_sp_empirical_tail_at_ten_thousand() {
    let n = 10_000u64;
    let r = lemma_sp_check(&rad(), &[n], 1.0, &cfg(31, 200_000)).unwrap();
    let e = r.empirical[0];
    let oracle = two_sided_normal_tail(((n as f64).ln()).sqrt());
    assert!(
        (e.p_hat - oracle).abs() <= 3.0 * e.std_err,
        "{} vs {oracle}",
        e.p_hat
    );
    assert!((binomial_two_sided(n, e.threshold) - 0.002_443_864_753_210_379).abs() < 1e-12);
}

#[test]
fn coverage_against_exact_binomial() {
    let cells: Vec<(u64, f64)> = vec![(4, 2.0), (4, 4.0), (10, 4.0), (10, 6.0), (25, 5.0), (25, 9.0)];
    let (mut inside, mut total) = (0, 0);
    for seed in 0..100u64 {
        let c = cfg(seed, 1_000);
        for &(n, x) in &cells {
            let p = binomial_two_sided(n, x);
            let se = (p * (1.0 - p) / 1_000.0).sqrt();
            let hat = estimate_tail(&rad(), n, x, &c).unwrap().p_hat;
            total += 1;
            if (hat - p).abs() <= 4.0 * se {
                inside += 1;
            }
        }
    }
    assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
}

#[test]
fn config_validation() {
    assert!(cfg(1, 1_000).with_n_grid(vec![3, 3]).validate().is_err());
    assert!(cfg(1, 1_000).with_n_grid(vec![0, 3]).validate().is_err());
    assert!(cfg(1, 1_000).with_eps_grid(vec![-1.0]).validate().is_err());
    let c = cfg(1, 1_000).with_n_grid(vec![1, 5]).with_eps_grid(vec![0.5]);
    let back: SimConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tail_estimates_are_consistent(seed in any::<u64>(), n in 1u64..60, x in 0.0f64..20.0, dx in 0.0f64..5.0) {
        let c = cfg(seed, 1_000);
        let lo = estimate_tail(&rad(), n, x, &c).unwrap();
        let hi = estimate_tail(&rad(), n, x + dx, &c).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo.p_hat));
        prop_assert!((lo.std_err - (lo.p_hat * (1.0 - lo.p_hat) / 1_000.0).sqrt()).abs() < 1e-15);
        // Common random numbers make the estimate monotone in the threshold.
        prop_assert!(hi.p_hat <= lo.p_hat);
        let again = estimate_tail(&rad(), n, x, &c).unwrap();
        prop_assert_eq!(again.p_hat.to_bits(), lo.p_hat.to_bits());
    }

    #[test]
    fn median_interval_is_realised(seed in any::<u64>(), n in 1u64..40) {
        let m = estimate_median(&DistModel::gaussian(1.0).unwrap(), n, &cfg(seed, 1_000)).unwrap();
        prop_assert!(m.ci_low <= m.mu_hat && m.mu_hat <= m.ci_high);
    }
}
