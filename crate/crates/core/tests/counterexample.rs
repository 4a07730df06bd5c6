use std::time::Instant;

use hrlab::counterexample::*;
use proptest::prelude::*;

#[test]
fn four_levels_build_fast_and_replay() {
    let t = Instant::now();
    let ce = build_counterexample(4).unwrap();
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert_eq!(ce.level_count(), 4);
    assert!(ce.replay().iter().all(|&ok| ok));
    let lams: Vec<f64> = ce.levels().iter().map(|l| l.log_k).collect();
    assert!(lams.windows(2).all(|w| w[1] > w[0]));
    // Independent recheck of 2^{-m-1} λ exp(-2^m (1 + e^{-λ})) ≥ 1.
    for l in ce.levels() {
        let m = l.m as f64;
        let lhs = -(m + 1.0) * 2f64.ln() + l.log_k.ln() - 2f64.powf(m) * (1.0 + (-l.log_k).exp());
        assert!(lhs >= 0.0, "level {} margin {lhs}", l.m);
    }
}

#[test]
fn one_level_atom_law() {
    let ce = build_counterexample(1).unwrap();
    let l = &ce.levels()[0];
    assert!((l.prob.ln() - (-2.0 * 2f64.ln() - l.log_k)).abs() < 1e-12);
    let ln_psi = 0.5 * (l.log_k + l.log_k.ln());
    assert!((l.atom.ln() - ln_psi).abs() < 1e-12);
    // Atom mass plus the mass at 0 is one.
    let total = ce.ln_atom_mass().exp() + ce.mass_at_zero();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn total_mass_is_one_for_every_size() {
    for m in 1..=MAX_LEVELS {
        let ce = build_counterexample(m).unwrap();
        assert!((ce.ln_atom_mass().exp() + ce.mass_at_zero() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn out_of_range_sizes_are_rejected() {
    assert!(build_counterexample(0).is_err());
    assert!(build_counterexample(MAX_LEVELS + 1).is_err());
}

#[test]
fn phi_moment_values() {
    assert_eq!(build_counterexample(1).unwrap().phi_moment_truncated(), 0.5);
    assert_eq!(build_counterexample(3).unwrap().phi_moment_truncated(), 7.0 / 8.0);
    assert_eq!(
        build_counterexample(4).unwrap().phi_moment_truncated(),
        15.0 / 16.0
    );
    for m in 1..=MAX_LEVELS {
        let v = build_counterexample(m).unwrap().phi_moment_truncated();
        assert_eq!(v + 0.5f64.powi(m as i32), 1.0);
    }
}

#[test]
fn t1n_values() {
    let ce = build_counterexample(3).unwrap();
    let lam: Vec<f64> = ce.levels().iter().map(|l| l.log_k).collect();
    let (e1, b1) = ce.t1n_lower_bound(1).unwrap();
    assert_eq!(e1, lam[0] / 2.0);
    assert_eq!(b1, lam[0] / 2.0);
    let (e2, b2) = ce.t1n_lower_bound(2).unwrap();
    assert!((e2 - (lam[0] / 2.0 + lam[1] / 4.0)).abs() < 1e-12 * e2);
    assert!((b2 - lam[1] / 4.0).abs() < 1e-12 * b2);
    for m in 1..=3 {
        let (e, b) = ce.t1n_lower_bound(m).unwrap();
        assert!(e >= b);
    }
    assert!(ce.t1n_lower_bound(0).is_err());
    assert!(ce.t1n_lower_bound(4).is_err());
}

#[test]
fn certificate_blocks_and_cumulative() {
    assert!(build_counterexample(1).unwrap().divergence_certificate().is_err());
    let mut prev = 0.0;
    for m in 2..=MAX_LEVELS {
        let cert = build_counterexample(m).unwrap().divergence_certificate().unwrap();
        assert_eq!(cert.levels.len(), m as usize);
        assert!(cert.levels.iter().all(|b| b.block_lower_bound >= 0.5));
        assert!(cert.cumulative >= m as f64 / 2.0);
        assert!(cert.cumulative >= prev);
        prev = cert.cumulative;
    }
    let c4 = build_counterexample(4).unwrap().divergence_certificate().unwrap();
    assert!(c4.cumulative >= 2.0);
    assert_eq!(c4.phi_moment_truncated, 15.0 / 16.0);
}

#[test]
fn log_l_at_unit_exponent() {
    // s = 1 means λ = 2^m; the bound is λ + ln 2 plus rounding slack.
    for m in 1..6 {
        let lam = 2f64.powi(m);
        let v = log_l_bound(lam, m as u32).unwrap();
        let floor = lam + 2f64.ln();
        // Slack: ln(1 + 1/K) for K + 1 and ln(1 + 1/L) for rounding.
        let slack = (-lam).exp() + (-floor).exp();
        assert!(v > floor && v <= floor + slack, "m {m}: {v} vs {floor}");
    }
    assert!(log_l_bound(0.5, 0).is_err());
}

/// `Σ_{n>K} n^{-1-s}`: direct sum to 10^7, then Euler-Maclaurin for the rest.
fn tail_sum(k: u64, s: f64) -> f64 {
    let cut = 10_000_000u64;
    let head: f64 = ((k + 1)..=cut).map(|n| (n as f64).powf(-1.0 - s)).sum();
    let c = cut as f64;
    head + c.powf(-s) / s - 0.5 * c.powf(-1.0 - s)
}

#[test]
fn log_l_brute_force_small_k() {
    let k = 10u64;
    let lam = (k as f64).ln();
    let s = 1.0 / lam;
    let ln_l = log_l_bound(lam, 0).unwrap();
    let l = ln_l.exp().ceil() as u64;
    let part: f64 = ((k + 1)..=l).map(|n| (n as f64).powf(-1.0 - s)).sum();
    assert!(
        part >= 0.5 * tail_sum(k, s),
        "L = {l}: {part} vs {}",
        tail_sum(k, s)
    );
}

proptest! {
    #[test]
    fn log_l_excess_decreases_in_s(lam in 1.0f64..50.0, m1 in 0u32..6, dm in 1u32..4) {
        let a = log_l_bound(lam, m1).unwrap() - lam;
        let b = log_l_bound(lam, m1 + dm).unwrap() - lam;
        prop_assert!(b < a);
    }

    #[test]
    fn psi_is_inverted_by_phi(t in 0.0f64..1e9) {
        prop_assert!((phi(psi(t)) - t).abs() <= 1e-9 * t.max(1.0));
    }
}
