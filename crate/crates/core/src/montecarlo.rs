//! Seeded Monte Carlo over partial sums: tail probabilities, medians, the
//! weighted tail series, and empirical checks of the normal-approximation
//! gap, the Hoffmann-Jørgensen inequality and the √(n log n) weak law.
//!
//! Replicate `r` at size `n` always draws from the stream
//! `(key(seed, n, truncation), r)`, so results depend on the seed only and
//! never on how rayon splits the work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{replicate_rng, DistKind, DistModel, Inclusion, MomentValue};
use crate::error::{input, Error, Result};
use crate::numerics::{ls_slope, two_sided_normal_tail, NeumaierSum};
use crate::sequences::{CheckVerdict, NormingSequence, WeightSequence};
use crate::series_lab::{eval_condition_ii, sp_sequences, ConditionId, ConditionReport, EpsVerdict};
use crate::verdict::{SeriesVerdict, Verdict};

/// Fewest replicates accepted for any estimate carrying an error bar.
pub const MIN_REPLICATES: u64 = 1_000;
pub const MAX_REPLICATES: u64 = 100_000_000;
/// Replicates per parallel work unit.
const CHUNK: u64 = 8_192;
/// Two-sided 99% standard normal quantile.
const Z99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub replicates: u64,
    #[serde(default)]
    pub n_grid: Vec<u64>,
    #[serde(default)]
    pub eps_grid: Vec<f64>,
    /// Simulate `S_n(ε)`, the sum of `X·1{|X| < ε a_n}`, instead of `S_n`.
    #[serde(default)]
    pub truncate: bool,
}

impl SimConfig {
    pub fn new(seed: u64, replicates: u64) -> Self {
        Self {
            seed,
            replicates,
            n_grid: Vec::new(),
            eps_grid: Vec::new(),
            truncate: false,
        }
    }

    pub fn with_n_grid(mut self, grid: Vec<u64>) -> Self {
        self.n_grid = grid;
        self
    }

    pub fn with_eps_grid(mut self, grid: Vec<f64>) -> Self {
        self.eps_grid = grid;
        self
    }

    pub fn with_truncation(mut self, on: bool) -> Self {
        self.truncate = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_REPLICATES..=MAX_REPLICATES).contains(&self.replicates) {
            return input(format!(
                "replicates = {} must lie in [{MIN_REPLICATES}, {MAX_REPLICATES}]",
                self.replicates
            ));
        }
        if self.n_grid.first() == Some(&0) {
            return input("nGrid entries must be >= 1");
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return input("nGrid must be strictly increasing");
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return input(format!("epsGrid entries must be positive, got {e}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EmpiricalTail {
    pub n: u64,
    pub threshold: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub replicates: u64,
}

impl EmpiricalTail {
    fn from_count(n: u64, threshold: f64, hits: u64, replicates: u64) -> Self {
        let p = hits as f64 / replicates as f64;
        Self {
            n,
            threshold,
            p_hat: p,
            std_err: (p * (1.0 - p) / replicates as f64).sqrt(),
            replicates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MedianEstimate {
    pub n: u64,
    /// Lower sample median.
    pub mu_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub replicates: u64,
    /// For symmetric laws, whether the interval covers the true median 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covers_zero: Option<bool>,
}

impl MedianEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    /// Smallest |μ| compatible with the interval.
    pub fn min_abs(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.ci_low.abs().min(self.ci_high.abs())
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, n: u64, truncation: Option<f64>) -> u64 {
    let k = splitmix(seed ^ 0x6a09_e667_f3bc_c909);
    let k = splitmix(k ^ n);
    splitmix(k ^ truncation.map_or(0, f64::to_bits))
}

/// `replicates` draws of `S_n`, or of the sum truncated at `b`, in replicate
/// order.
fn simulate(
    dist: &DistModel,
    n: u64,
    truncation: Option<f64>,
    seed: u64,
    replicates: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("S_n needs n >= 1".into()));
    }
    let sampler = dist.sum_sampler(truncation.map(|b| (b, Inclusion::Strict)))?;
    let key = stream_key(seed, n, truncation);
    let parts: Vec<Vec<f64>> = (0..replicates.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(replicates);
            (lo..hi)
                .map(|r| sampler.sample(n, &mut replicate_rng(key, r)))
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Relative slack on `|S| ≥ x`. Thresholds such as `ε a_n` come out of
/// `exp`/`ln` and can land a rounding error above a lattice point they
/// should equal.
const THRESHOLD_RTOL: f64 = 1e-12;

fn reaches(v: f64, x: f64) -> bool {
    v.abs() >= x * (1.0 - THRESHOLD_RTOL)
}

fn count_at_least(samples: &[f64], center: f64, threshold: f64) -> u64 {
    samples
        .iter()
        .filter(|&&s| reaches(s - center, threshold))
        .count() as u64
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return input(format!("threshold must be a finite non-negative number, got {t}"));
    }
    Ok(())
}

/// `P(|S_n| ≥ threshold)` from `cfg.replicates` independent sums.
pub fn estimate_tail(dist: &DistModel, n: u64, threshold: f64, cfg: &SimConfig) -> Result<EmpiricalTail> {
    estimate_tail_with(dist, n, threshold, None, cfg)
}

/// As [`estimate_tail`], with summands optionally truncated to `|X| < b`.
pub fn estimate_tail_with(
    dist: &DistModel,
    n: u64,
    threshold: f64,
    truncation: Option<f64>,
    cfg: &SimConfig,
) -> Result<EmpiricalTail> {
    cfg.validate()?;
    check_threshold(threshold)?;
    let s = simulate(dist, n, truncation, cfg.seed, cfg.replicates)?;
    Ok(EmpiricalTail::from_count(
        n,
        threshold,
        count_at_least(&s, 0.0, threshold),
        cfg.replicates,
    ))
}

/// 1-based ranks of the distribution-free order-statistic interval for
/// the median, normal approximation to Binomial(R, 1/2).
fn median_ci_ranks(r: u64) -> (usize, usize) {
    let rf = r as f64;
    let half = Z99 * rf.sqrt() / 2.0;
    let lo = (rf / 2.0 - half).floor().max(1.0) as usize;
    let hi = ((rf / 2.0 + half).ceil() + 1.0).min(rf) as usize;
    (lo, hi)
}

fn median_from(n: u64, mut s: Vec<f64>, symmetric: bool) -> MedianEstimate {
    s.sort_by(f64::total_cmp);
    let r = s.len() as u64;
    let (lo, hi) = median_ci_ranks(r);
    let mut m = MedianEstimate {
        n,
        mu_hat: s[(s.len() - 1) / 2],
        ci_low: s[lo - 1],
        ci_high: s[hi - 1],
        confidence: 0.99,
        replicates: r,
        covers_zero: None,
    };
    if symmetric {
        m.covers_zero = Some(m.contains(0.0));
    }
    m
}

/// Sample median of `S_n` with a 99% order-statistic interval.
pub fn estimate_median(dist: &DistModel, n: u64, cfg: &SimConfig) -> Result<MedianEstimate> {
    cfg.validate()?;
    let s = simulate(dist, n, None, cfg.seed, cfg.replicates)?;
    Ok(median_from(n, s, dist.is_symmetric()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MedianFlags {
    pub epsilon: f64,
    /// Grid points where the whole interval lies outside `[-ε a_n, ε a_n]`.
    pub flagged: Vec<u64>,
    pub flagged_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionIEstimate {
    pub report: ConditionReport,
    pub medians: Vec<MedianEstimate>,
    pub flags: Vec<MedianFlags>,
}

fn series_start(tau: &WeightSequence, a: &NormingSequence) -> u64 {
    tau.start().max(a.start())
}

fn check_grid(cfg: &SimConfig, start: u64) -> Result<()> {
    match cfg.n_grid.first() {
        None => input("nGrid is empty"),
        Some(&n) if n < start => input(format!("nGrid starts at {n}, below the sequence start {start}")),
        _ => Ok(()),
    }
}

fn check_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return input("epsilon grid is empty");
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return input(format!("epsilon must be positive, got {e}"));
    }
    Ok(())
}

/// Median-flag sums `Σ_{n ∈ grid, |μ_n| > ε a_n} τ_n`. Symmetric laws have
/// median 0, which settles the condition without simulation; the simulated
/// flags are still reported.
pub fn estimate_condition_i(
    dist: &DistModel,
    tau: &WeightSequence,
    a: &NormingSequence,
    eps_grid: &[f64],
    cfg: &SimConfig,
) -> Result<ConditionIEstimate> {
    cfg.validate()?;
    check_eps_grid(eps_grid)?;
    check_grid(cfg, series_start(tau, a))?;
    let medians = cfg
        .n_grid
        .iter()
        .map(|&n| estimate_median(dist, n, cfg))
        .collect::<Result<Vec<_>>>()?;
    let horizon = *cfg.n_grid.last().unwrap();
    let mut flags = Vec::new();
    let mut per_eps = Vec::new();
    for &eps in eps_grid {
        let flagged: Vec<u64> = medians
            .iter()
            .filter(|m| m.min_abs() > eps * a.eval(m.n))
            .map(|m| m.n)
            .collect();
        let w: NeumaierSum = flagged.iter().map(|&n| tau.eval(n)).collect();
        let weight = w.value();
        let verdict = if dist.is_symmetric() {
            SeriesVerdict::converges(0.0, 0.0, horizon).with_note("mu_n = 0 is a median of S_n by symmetry")
        } else {
            let last = flagged.last() == Some(&horizon);
            SeriesVerdict::inconclusive(
                weight,
                horizon,
                format!(
                    "{} of {} grid points flagged{}; a finite grid cannot settle the sum",
                    flagged.len(),
                    medians.len(),
                    if last { ", including the last" } else { "" }
                ),
            )
        };
        flags.push(MedianFlags {
            epsilon: eps,
            flagged,
            flagged_weight: weight,
        });
        per_eps.push(EpsVerdict {
            epsilon: eps,
            verdict,
        });
    }
    Ok(ConditionIEstimate {
        report: ConditionReport::from_series(
            ConditionId::I,
            per_eps,
            Some("empirical over the epsilon grid only".into()),
        ),
        medians,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesPoint {
    pub n: u64,
    pub threshold: f64,
    pub p_hat: f64,
    pub std_err: f64,
    /// `τ_n · pHat_n`.
    pub term: f64,
    pub term_std_err: f64,
    /// Upper bracket of `Σ_{k≤n} τ_k P(|S_k| ≥ ε a_k)`.
    pub partial_sum: f64,
    pub partial_std_err: f64,
    /// Lower bracket under the same monotonicity assumption.
    pub partial_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightedSeriesEstimate {
    pub epsilon: f64,
    pub truncated: bool,
    pub points: Vec<SeriesPoint>,
    /// Set when the grid skips indices and partial sums are interpolated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<String>,
}

/// `Σ τ_n` over `lo..=hi`.
fn tau_sum(tau: &WeightSequence, lo: u64, hi: u64) -> f64 {
    let s: NeumaierSum = (lo..=hi).map(|n| tau.eval(n)).collect();
    s.value()
}

/// Partial sums of `τ_n P(|S_n| ≥ ε a_n)` over the grid.
///
/// Between grid points the probability is assumed non-increasing in n: the
/// upper bracket holds each estimate until the next grid point (and uses 1
/// before the first), the lower bracket pulls each estimate back to the
/// previous one.
pub fn estimate_weighted_series(
    dist: &DistModel,
    tau: &WeightSequence,
    a: &NormingSequence,
    eps: f64,
    cfg: &SimConfig,
) -> Result<WeightedSeriesEstimate> {
    cfg.validate()?;
    check_eps_grid(&[eps])?;
    let start = series_start(tau, a);
    check_grid(cfg, start)?;
    let grid = &cfg.n_grid;
    let tails = grid
        .iter()
        .map(|&n| {
            let thr = eps * a.eval(n);
            estimate_tail_with(dist, n, thr, cfg.truncate.then_some(thr), cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let before_first = if grid[0] > start {
        tau_sum(tau, start, grid[0] - 1)
    } else {
        0.0
    };
    let mut upper = NeumaierSum::new();
    upper.add(before_first);
    let mut upper_var = 0.0;
    let mut lower = NeumaierSum::new();
    let mut lower_prev = start;
    let mut points = Vec::with_capacity(grid.len());
    for (i, (&n, t)) in grid.iter().zip(&tails).enumerate() {
        let tn = tau.eval(n);
        lower.add(t.p_hat * tau_sum(tau, lower_prev, n));
        lower_prev = n + 1;
        let here = t.p_hat * tn;
        points.push(SeriesPoint {
            n,
            threshold: t.threshold,
            p_hat: t.p_hat,
            std_err: t.std_err,
            term: here,
            term_std_err: tn * t.std_err,
            partial_sum: upper.value() + here,
            partial_std_err: (upper_var + (tn * t.std_err).powi(2)).sqrt(),
            partial_lower: lower.value(),
        });
        if let Some(&next) = grid.get(i + 1) {
            let w = tau_sum(tau, n, next - 1);
            upper.add(t.p_hat * w);
            upper_var += (w * t.std_err).powi(2);
        }
    }
    let gaps = grid[0] > start || grid.windows(2).any(|w| w[1] > w[0] + 1);
    Ok(WeightedSeriesEstimate {
        epsilon: eps,
        truncated: cfg.truncate,
        points,
        interpolation: gaps.then(|| {
            "heuristic: between grid points P(|S_n| >= eps a_n) is assumed non-increasing in n; \
             partialSum is the upper step bracket, partialLower the lower one"
                .into()
        }),
    })
}

/// Calibrated constant in `gap ≤ c·min(1, n E|X^{(n)}|³/x³)`: 1.2 times the
/// largest ratio seen on [`nagaev_calibration_battery`] (reproduced by
/// [`calibrate_nagaev_constant`]).
pub const NAGAEV_C: f64 = 1.093_216_295_483_748;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NagaevCheck {
    pub n: u64,
    /// Summands are kept when `|X| < truncation`.
    pub truncation: f64,
    pub threshold: f64,
    pub truncated_variance: f64,
    pub truncated_third_moment: f64,
    pub p_hat: f64,
    /// Zero when `p_hat` is exact.
    pub std_err: f64,
    pub exact: bool,
    pub gaussian_term: f64,
    pub gap: f64,
    pub min_term: f64,
    pub constant: f64,
    pub bound: f64,
    pub pass: bool,
}

/// The law of `X·1{|X| < b}` as an integer lattice law, when X is one.
fn truncated_lattice(dist: &DistModel, b: f64) -> Option<DistModel> {
    let (atoms, p0) = match dist.kind() {
        DistKind::Rademacher => (vec![(1.0, 0.5)], 0.0),
        DistKind::AtomicSymmetric { atoms, p0 } => (atoms.clone(), *p0),
        _ => return None,
    };
    if atoms.iter().any(|a| a.0.fract() != 0.0) {
        return None;
    }
    let dropped: f64 = atoms.iter().filter(|a| a.0 >= b).map(|a| a.1).sum();
    let kept: Vec<(f64, f64)> = atoms.into_iter().filter(|a| a.0 < b).collect();
    if kept.is_empty() {
        return DistModel::point_mass(0.0).ok();
    }
    DistModel::atomic(kept, p0 + 2.0 * dropped).ok()
}

/// Exact `P(|S| ≥ x)` from a lattice pmf.
fn lattice_tail(law: &DistModel, n: u64, x: f64) -> Option<f64> {
    let (lo, pmf) = law.lattice_sum_pmf(n)?;
    let s: NeumaierSum = pmf
        .iter()
        .enumerate()
        .filter(|(i, _)| reaches((lo + *i as i64) as f64, x))
        .map(|(_, p)| *p)
        .collect();
    Some(s.value().min(1.0))
}

/// Normal-approximation gap for the sum of `n` summands truncated at `b`,
/// at threshold `x`. Exact for integer lattice laws; otherwise simulated
/// with `cfg`.
pub fn nagaev_gap_at(
    dist: &DistModel,
    n: u64,
    b: f64,
    x: f64,
    constant: f64,
    cfg: Option<&SimConfig>,
) -> Result<NagaevCheck> {
    if !dist.is_symmetric() {
        return input("the normal-approximation gap check needs a symmetric law");
    }
    if n == 0 {
        return Err(Error::Domain("S_n needs n >= 1".into()));
    }
    if !(b > 0.0) || !(x > 0.0 && x.is_finite()) {
        return input(format!("truncation {b} and threshold {x} must be positive"));
    }
    let t = dist.truncated_moment(2.0, b)?;
    let third = dist.truncated_moment(3.0, b)?;
    let nf = n as f64;
    let gaussian_term = if t > 0.0 {
        two_sided_normal_tail(x / (nf * t).sqrt())
    } else {
        0.0
    };
    let exact = truncated_lattice(dist, b).and_then(|law| lattice_tail(&law, n, x));
    let (p_hat, std_err) = match (exact, cfg) {
        (Some(p), _) => (p, 0.0),
        (None, Some(cfg)) => {
            let e = estimate_tail_with(dist, n, x, Some(b), cfg)?;
            (e.p_hat, e.std_err)
        }
        (None, None) => return input("no exact oracle for this law; a simulation config is required"),
    };
    let min_term = (nf * third / x.powi(3)).min(1.0);
    let gap = (p_hat - gaussian_term).abs();
    let bound = constant * min_term;
    Ok(NagaevCheck {
        n,
        truncation: b,
        threshold: x,
        truncated_variance: t,
        truncated_third_moment: third,
        p_hat,
        std_err,
        exact: exact.is_some(),
        gaussian_term,
        gap,
        min_term,
        constant,
        bound,
        pass: gap <= bound + 4.0 * std_err,
    })
}

/// The gap at `b = ε a_n`, `x = γ ε a_n`, against [`NAGAEV_C`].
pub fn nagaev_gap_check(
    dist: &DistModel,
    a: &NormingSequence,
    n: u64,
    eps: f64,
    gamma: f64,
    cfg: &SimConfig,
) -> Result<NagaevCheck> {
    check_eps_grid(&[eps])?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return input(format!("gamma must lie in (0, 1], got {gamma}"));
    }
    if n < a.start() {
        return Err(Error::Domain(format!(
            "n = {n} is below the norming start {}",
            a.start()
        )));
    }
    cfg.validate()?;
    let b = eps * a.eval(n);
    nagaev_gap_at(dist, n, b, gamma * b, NAGAEV_C, Some(cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NagaevSweep {
    pub checks: Vec<NagaevCheck>,
    /// Least-squares slope of ln gap against ln n.
    pub slope: Option<f64>,
    pub all_pass: bool,
}

pub fn nagaev_sweep(
    dist: &DistModel,
    a: &NormingSequence,
    ns: &[u64],
    eps: f64,
    gamma: f64,
    cfg: &SimConfig,
) -> Result<NagaevSweep> {
    let checks = ns
        .iter()
        .map(|&n| nagaev_gap_check(dist, a, n, eps, gamma, cfg))
        .collect::<Result<Vec<_>>>()?;
    let pos: Vec<&NagaevCheck> = checks.iter().filter(|c| c.gap > 0.0).collect();
    let xs: Vec<f64> = pos.iter().map(|c| (c.n as f64).ln()).collect();
    let ys: Vec<f64> = pos.iter().map(|c| c.gap.ln()).collect();
    Ok(NagaevSweep {
        slope: ls_slope(&xs, &ys),
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

/// Exact-oracle cases `(law, n, z)` with threshold `z (n E X²)^{1/2}` and no
/// effective truncation.
pub fn nagaev_calibration_battery() -> Vec<(DistModel, u64, f64)> {
    let laws = [
        DistModel::rademacher(),
        DistModel::atomic(vec![(1.0, 0.25), (2.0, 0.25)], 0.0).unwrap(),
        DistModel::atomic(vec![(1.0, 1.0 / 6.0), (2.0, 1.0 / 6.0), (3.0, 1.0 / 6.0)], 0.0).unwrap(),
    ];
    let mut out = Vec::new();
    for law in &laws {
        for n in [10u64, 25, 100, 400, 1600] {
            for z in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
                out.push((law.clone(), n, z));
            }
        }
    }
    out
}

/// `1.2 · max gap/min-term` over the calibration battery.
pub fn calibrate_nagaev_constant() -> Result<f64> {
    let mut worst = 0.0f64;
    for (law, n, z) in nagaev_calibration_battery() {
        let b = law.ln_support_max().map_or(f64::INFINITY, f64::exp) + 1.0;
        let x = z * (n as f64 * law.second_moment().unwrap()).sqrt();
        let c = nagaev_gap_at(&law, n, b, x, 1.0, None)?;
        if c.min_term > 0.0 {
            worst = worst.max(c.gap / c.min_term);
        }
    }
    Ok(1.2 * worst)
}

/// Where `P(|S_n| ≥ ·)` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Oracle {
    /// Exact lattice probabilities when available, else simulation.
    Auto,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HjRow {
    pub lambda: f64,
    /// `P(|S_n| ≥ λ)`.
    pub lhs: f64,
    pub lhs_std_err: f64,
    /// `n P(|X| ≥ λ/(2r))`.
    pub tail_term: f64,
    /// `P(|S_n| ≥ λ/(2r))^r`.
    pub power_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HjFit {
    pub n: u64,
    pub r: u32,
    pub c_r: f64,
    pub d_r: f64,
    /// `(C, smallest feasible D)` for each C on the search grid.
    pub frontier: Vec<(f64, f64)>,
    pub exact: bool,
    pub rows: Vec<HjRow>,
}

/// λ grid for the Hoffmann-Jørgensen tables, in units of the standard
/// deviation σ of X (1 if it has none): 0.5σ to 4σ in half steps, plus
/// z·σ·√n for z from 0.25 to 4.
pub fn hj_lambda_grid(dist: &DistModel, n: u64) -> Vec<f64> {
    let unit = dist
        .second_moment()
        .filter(|m| *m > 0.0 && m.is_finite())
        .map_or(1.0, f64::sqrt);
    let root_n = (n as f64).sqrt();
    let mut g: Vec<f64> = (1..=8).map(|k| 0.5 * k as f64 * unit).collect();
    g.extend(
        [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
            .iter()
            .map(|z| z * unit * root_n),
    );
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Candidate values of C: 0 and a quarter-octave ladder from 1e-3 to 1e3.
fn hj_c_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..=80).map(|k| 1e-3 * 2f64.powf(k as f64 / 4.0)))
        .collect()
}

/// Both sides of the inequality on a λ grid.
pub fn hj_rows(
    dist: &DistModel,
    n: u64,
    r: u32,
    lambda_grid: &[f64],
    cfg: &SimConfig,
    oracle: Oracle,
) -> Result<(Vec<HjRow>, bool)> {
    if !dist.is_symmetric() {
        return input("the Hoffmann-Jorgensen check needs a symmetric law");
    }
    if r < 2 {
        return input(format!("r must be >= 2, got {r}"));
    }
    if lambda_grid.is_empty() {
        return input("lambda grid is empty");
    }
    for &l in lambda_grid {
        check_threshold(l)?;
    }
    cfg.validate()?;
    let div = 2.0 * r as f64;
    let pmf = match oracle {
        Oracle::Auto => dist.lattice_sum_pmf(n),
        Oracle::MonteCarlo => None,
    };
    let samples = if pmf.is_none() {
        Some(simulate(dist, n, None, cfg.seed, cfg.replicates)?)
    } else {
        None
    };
    let reps = cfg.replicates as f64;
    let prob = |x: f64| -> (f64, f64) {
        if let Some((lo, p)) = &pmf {
            let s: NeumaierSum = p
                .iter()
                .enumerate()
                .filter(|(i, _)| reaches((lo + *i as i64) as f64, x))
                .map(|(_, v)| *v)
                .collect();
            (s.value().min(1.0), 0.0)
        } else {
            let s = samples.as_ref().unwrap();
            let p = count_at_least(s, 0.0, x) as f64 / reps;
            (p, (p * (1.0 - p) / reps).sqrt())
        }
    };
    let rows = lambda_grid
        .iter()
        .map(|&lam| {
            let (lhs, se) = prob(lam);
            Ok(HjRow {
                lambda: lam,
                lhs,
                lhs_std_err: se,
                tail_term: n as f64 * dist.tail(lam / div)?,
                power_term: prob(lam / div).0.powi(r as i32),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, pmf.is_some()))
}

/// Smallest D with `lhs ≤ C·tail + D·power` on every row, if any.
fn hj_min_d(rows: &[HjRow], c: f64) -> Option<f64> {
    let mut d = 0.0f64;
    for row in rows {
        let need = row.lhs - c * row.tail_term;
        if need <= 0.0 {
            continue;
        }
        if row.power_term <= 0.0 {
            return None;
        }
        d = d.max(need / row.power_term);
    }
    Some(d)
}

/// Fitted `(C_r, D_r)`: the lexicographically smallest pair on the C
/// ladder, i.e. the smallest feasible C and then the smallest D for it.
/// The whole frontier is kept for inspection.
pub fn hj_fit(dist: &DistModel, n: u64, r: u32, lambda_grid: &[f64], cfg: &SimConfig) -> Result<HjFit> {
    hj_fit_with(dist, n, r, lambda_grid, cfg, Oracle::Auto)
}

pub fn hj_fit_with(
    dist: &DistModel,
    n: u64,
    r: u32,
    lambda_grid: &[f64],
    cfg: &SimConfig,
    oracle: Oracle,
) -> Result<HjFit> {
    let (rows, exact) = hj_rows(dist, n, r, lambda_grid, cfg, oracle)?;
    let frontier: Vec<(f64, f64)> = hj_c_grid()
        .into_iter()
        .filter_map(|c| hj_min_d(&rows, c).map(|d| (c, d)))
        .collect();
    let Some(&(c_r, d_r)) = frontier.first() else {
        return Err(Error::Numeric {
            what: "no (C, D) on the search ladder satisfies every row".into(),
            residual: f64::INFINITY,
        });
    };
    Ok(HjFit {
        n,
        r,
        c_r,
        d_r,
        frontier,
        exact,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HjTransfer {
    pub n: u64,
    pub c_r: f64,
    pub d_r: f64,
    /// `max_λ lhs / (C·tail + D·power)`; 1 or less means the constants hold.
    pub worst_ratio: f64,
    pub slack: f64,
    pub pass: bool,
    pub rows: Vec<HjRow>,
}

/// Do fitted constants hold at another n, up to a multiplicative slack?
pub fn hj_transfer_check(
    fit: &HjFit,
    dist: &DistModel,
    n: u64,
    lambda_grid: &[f64],
    cfg: &SimConfig,
    oracle: Oracle,
    slack: f64,
) -> Result<HjTransfer> {
    let (rows, _) = hj_rows(dist, n, fit.r, lambda_grid, cfg, oracle)?;
    let worst_ratio = rows
        .iter()
        .map(|row| {
            let rhs = fit.c_r * row.tail_term + fit.d_r * row.power_term;
            match (row.lhs > 0.0, rhs > 0.0) {
                (false, _) => 0.0,
                (true, false) => f64::INFINITY,
                (true, true) => row.lhs / rhs,
            }
        })
        .fold(0.0f64, f64::max);
    Ok(HjTransfer {
        n,
        c_r: fit.c_r,
        d_r: fit.d_r,
        worst_ratio,
        slack,
        pass: worst_ratio <= slack,
        rows,
    })
}

/// Horizon of the show-1 tail series.
pub const SHOW1_HORIZON: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LimitRow {
    pub n: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpLemmaReport {
    pub delta: f64,
    pub log_plus_moment: MomentValue,
    /// `Σ_{n≥2} P(|X| > a_n)`.
    pub show1: ConditionReport,
    /// `n E[Y_n²]/a_n²` with `Y_n = X·1{|X| ≤ a_n}`.
    pub show2: Vec<LimitRow>,
    pub show2_status: CheckVerdict,
    /// `n E[Y_n]/a_n`.
    pub show3: Vec<LimitRow>,
    pub show3_status: CheckVerdict,
    /// `P(|S_n − E S_n| ≥ δ a_n)` on the grid.
    pub empirical: Vec<EmpiricalTail>,
    /// Slope of ln pHat against ln n over the positive estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Non-increasing over the second half of the table and below its start.
fn limit_status(rows: &[LimitRow]) -> CheckVerdict {
    let Some(first) = rows.first() else {
        return CheckVerdict::Inconclusive;
    };
    let last = rows.last().unwrap();
    if rows.iter().all(|r| r.value == 0.0) {
        return CheckVerdict::Holds;
    }
    let tail = &rows[rows.len() / 2..];
    let falling = tail.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + 1e-12));
    let rising = tail.windows(2).all(|w| w[1].value > w[0].value);
    if falling && last.value < first.value {
        CheckVerdict::Holds
    } else if rising && tail.len() > 1 {
        CheckVerdict::Fails
    } else {
        CheckVerdict::Inconclusive
    }
}

/// The analytic criteria behind the weak law `S_n/(n log n)^{1/2} → 0` in
/// probability, and the empirical decay of `P(|S_n − E S_n| ≥ δ a_n)`.
/// Everything is computed for the centred law.
pub fn lemma_sp_check(
    dist: &DistModel,
    n_grid: &[u64],
    delta: f64,
    cfg: &SimConfig,
) -> Result<SpLemmaReport> {
    check_eps_grid(&[delta])?;
    if n_grid.is_empty() || n_grid[0] < 2 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return input("lemma grid must be strictly increasing and start at n >= 2");
    }
    cfg.validate()?;
    let centred = match dist.kind() {
        DistKind::Shifted { base, .. } => base.as_ref(),
        _ => dist,
    };
    let (tau, a) = sp_sequences();
    let log_plus_moment = centred.log_plus_moment()?;
    let mut notes = Vec::new();
    if log_plus_moment.finite().is_none() {
        notes.push("E[X^2 / log(2+|X|)] diverges, so the lemma's hypothesis fails".to_string());
    }
    // Σ n τ_n P(|X| ≥ a_n) with n τ_n = 1 dominates Σ P(|X| > a_n).
    let mut s1 = eval_condition_ii(centred, &tau, &a, 1.0, SHOW1_HORIZON)?;
    if s1.verdict == Verdict::Diverges && centred.ln_support_max().is_some() {
        s1 = SeriesVerdict::inconclusive(
            s1.partial_sum,
            s1.horizon,
            "strict and closed tails differ on atoms",
        );
    }
    let show1 = ConditionReport::from_series(
        ConditionId::ShowS1,
        vec![EpsVerdict {
            epsilon: 1.0,
            verdict: s1,
        }],
        Some("series of P(|X| >= a_n), an upper bound for P(|X| > a_n)".into()),
    );
    let show2 = n_grid
        .iter()
        .map(|&n| {
            let t = centred.truncated_moment_with(2.0, a.eval(n), Inclusion::Closed)?;
            Ok(LimitRow {
                n,
                value: t / (n as f64).ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // The centred law is symmetric, so every truncated first moment vanishes.
    let show3: Vec<LimitRow> = n_grid.iter().map(|&n| LimitRow { n, value: 0.0 }).collect();
    let empirical = match centred.sum_sampler(None) {
        Ok(_) => n_grid
            .iter()
            .map(|&n| estimate_tail(centred, n, delta * a.eval(n), cfg))
            .collect::<Result<Vec<_>>>()?,
        Err(e) => {
            notes.push(format!("empirical part skipped: {e}"));
            Vec::new()
        }
    };
    let pos: Vec<&EmpiricalTail> = empirical.iter().filter(|e| e.p_hat > 0.0).collect();
    let decay_slope = ls_slope(
        &pos.iter().map(|e| (e.n as f64).ln()).collect::<Vec<_>>(),
        &pos.iter().map(|e| e.p_hat.ln()).collect::<Vec<_>>(),
    );
    Ok(SpLemmaReport {
        delta,
        log_plus_moment,
        show1,
        show2_status: limit_status(&show2),
        show2,
        show3_status: limit_status(&show3),
        show3,
        empirical,
        decay_slope,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    })
}
