//! Series-form conditions evaluated with certificates: the tail series
//! `Σ n τ_n P(|X| ≥ ε a_n)`, the Gaussian-term series
//! `Σ τ_n exp(-ε² a_n²/(n T_{ε,n}))`, the √(n log n) corollary with its
//! log-log strengthening, and numeric checks of three auxiliary lemmas.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistKind, DistModel, MomentValue};
use crate::error::{input, Result};
use crate::numerics::{integrate, log_add_exp, log_spaced, NeumaierSum};
use crate::sequences::{
    decade_slope, verify_growth_exponent, verify_liminf_exponent, weight_prefix, CheckVerdict,
    NormingSequence, PowerLogForm, WeightSequence, FLAT_SLOPE,
};
pub use crate::verdict::{classify_series, classify_series_ln, LowerBound, SeriesVerdict, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    I,
    II,
    III,
    SpA,
    SpB,
    SpC,
    SpWeakB,
    ShowS1,
    ShowS2,
    ShowS3,
}

pub const DEFAULT_EPS_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

/// Largest horizon the evaluators accept.
pub const MAX_HORIZON: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EpsVerdict {
    pub epsilon: f64,
    pub verdict: SeriesVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub status: CheckVerdict,
    pub eps_grid: Vec<f64>,
    pub per_eps: Vec<EpsVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionReport {
    /// Holds iff every grid point converges; fails if any diverges.
    pub fn from_series(condition: ConditionId, per_eps: Vec<EpsVerdict>, note: Option<String>) -> Self {
        let status = if per_eps.iter().all(|e| e.verdict.verdict == Verdict::Converges) {
            CheckVerdict::Holds
        } else if per_eps.iter().any(|e| e.verdict.verdict == Verdict::Diverges) {
            CheckVerdict::Fails
        } else {
            CheckVerdict::Inconclusive
        };
        Self {
            condition,
            status,
            eps_grid: per_eps.iter().map(|e| e.epsilon).collect(),
            per_eps,
            value: None,
            note,
        }
    }

    pub fn scalar(
        condition: ConditionId,
        status: CheckVerdict,
        value: Option<f64>,
        note: impl Into<String>,
    ) -> Self {
        Self {
            condition,
            status,
            eps_grid: Vec::new(),
            per_eps: Vec::new(),
            value,
            note: Some(note.into()),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return input(format!("epsilon must be positive, got {eps}"));
    }
    Ok(())
}

fn check_horizon(start: u64, horizon: u64) -> Result<()> {
    if horizon < 100 || horizon < 10 * start {
        return input(format!(
            "horizon {horizon} must be >= 100 and >= 10 x start {start}"
        ));
    }
    if horizon > MAX_HORIZON {
        return input(format!(
            "horizon {horizon} is above the desk-scale cap {MAX_HORIZON}"
        ));
    }
    Ok(())
}

fn ln_sum(ln_terms: &[f64]) -> f64 {
    let s: NeumaierSum = ln_terms.iter().map(|l| l.exp()).collect();
    s.value()
}

fn const_form(ln_c: f64) -> PowerLogForm {
    let mut f = PowerLogForm::power(0.0);
    f.ln_const = ln_c;
    f
}

fn has_logs(f: &PowerLogForm) -> bool {
    f.shifted_log != 0.0 || f.plain_log != 0.0 || f.loglog != 0.0
}

/// Upper bound on `Σ_{n>h} f(n)` when the sum of f converges.
fn form_tail(f: &PowerLogForm, h: u64) -> Option<f64> {
    if f.sum_diverges() {
        return None;
    }
    f.ln_tail_bound(h).map(f64::exp).filter(|t| t.is_finite())
}

/// Divergence certificate from terms `>= f(n)` for all `n >= from`.
fn rate_lower_bound(f: &PowerLogForm, from: u64, horizon: u64) -> Option<LowerBound> {
    if !f.sum_diverges() {
        return None;
    }
    if !has_logs(f) {
        let c = f.ln_const.exp();
        return Some(LowerBound::Terms {
            exponent: -f.power,
            constant: c,
            from,
            to: horizon,
            description: format!("terms >= {c:.6e} n^{:.4} for all n >= {from}", f.power),
        });
    }
    if f.power > -1.0 {
        // Give up a little of the exponent to absorb the log factors.
        let p = (1.0 - f.power) / 2.0;
        let g = f.mul(&PowerLogForm::power(p));
        let at = if g.elasticity_lower(from as f64) >= 0.0 {
            from
        } else if g.elasticity_lower(horizon as f64) >= 0.0 {
            horizon
        } else {
            return None;
        };
        let c = g.ln_eval(at as f64).exp();
        return Some(LowerBound::Terms {
            exponent: p,
            constant: c,
            from: at,
            to: horizon,
            description: format!("terms >= {c:.6e} n^-{p:.4} for all n >= {at}"),
        });
    }
    let logs = f.shifted_log + f.plain_log;
    if f.power == -1.0 && (logs > -1.0 || (logs == -1.0 && f.loglog >= 0.0)) {
        return log_block_bound(f, from);
    }
    None
}

/// Blocks `[x_j, x_{j+1})` with `ln ln x_{j+1} = ln ln x_j + 1`. Once f is
/// decreasing, a block sums to at least `∫ f - f(x_j)`; in the variable
/// `v = ln ln x` the integrand is `f(x) x ln x`, which for these exponents
/// never decreases, so later blocks are no smaller than the certified ones.
fn log_block_bound(f: &PowerLogForm, from: u64) -> Option<LowerBound> {
    let mut at = from.max(3) as f64;
    while f.elasticity_upper(at) > 0.0 {
        at *= 2.0;
        if at > 1e15 {
            return None;
        }
    }
    let g = |v: f64| {
        let lx = v.exp();
        (f.ln_eval(lx.exp()) + lx + v).exp()
    };
    let mut blocks = Vec::new();
    let mut v = at.ln().ln();
    // Stop while x = exp(exp(v)) still fits in an f64.
    while (v + 1.0).exp() < 700.0 {
        let q = integrate(g, v, v + 1.0, 1e-10).ok()?;
        blocks.push(q.value - q.abs_error - f.ln_eval(v.exp().exp()).exp());
        v += 1.0;
    }
    let min_block = blocks.iter().copied().fold(f64::INFINITY, f64::min);
    if blocks.is_empty() || !(min_block > 0.0) {
        return None;
    }
    Some(LowerBound::Blocks {
        count: blocks.len(),
        min_block,
        cumulative: blocks.iter().sum(),
        description: format!(
            "blocks with ln ln n spaced by 1 from n = {at:.0} each sum to >= {min_block:.6e}; \
             the integrand in ln ln n is non-decreasing, so every later block does too"
        ),
    })
}

fn first_index(from: u64, to: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    (from..=to).find(|&n| pred(n))
}

/// `Σ_n n τ_n P(|X| ≥ ε a_n)`.
pub fn eval_condition_ii(
    dist: &DistModel,
    tau: &WeightSequence,
    a: &NormingSequence,
    eps: f64,
    horizon: u64,
) -> Result<SeriesVerdict> {
    check_eps(eps)?;
    let start = tau.start().max(a.start());
    check_horizon(start, horizon)?;
    let ln_term = |n: u64| {
        let p = dist.tail(eps * a.eval(n)).unwrap_or(f64::NAN);
        (n as f64).ln() + tau.ln_eval(n) + p.ln()
    };
    let terms: Vec<f64> = (start..=horizon).map(ln_term).collect();
    let partial = ln_sum(&terms);

    if let Some(lv) = dist.ln_support_max() {
        if let Some(n0) = first_index(start, horizon, |n| eps.ln() + a.ln_eval(n) > lv) {
            return Ok(SeriesVerdict::converges(partial, 0.0, horizon).with_note(format!(
                "eps a_n exceeds the support from n = {n0}; later terms are 0"
            )));
        }
    }

    if let (Some(tf), Some(af)) = (tau.as_regular(), a.as_regular()) {
        let base = PowerLogForm::power(1.0).mul(tf);
        if let DistKind::SymmetricPareto { q, scale } = *dist.kind() {
            // Exact once eps a_n >= s.
            let f = base
                .mul(&af.powf(-q))
                .mul(&const_form(q * (scale.ln() - eps.ln())));
            if let Some(n1) = first_index(start, horizon / 10, |n| eps * a.eval(n) >= scale) {
                if f.sum_diverges() {
                    if let Some(lb) = rate_lower_bound(&f, n1, horizon) {
                        return Ok(SeriesVerdict::diverges(partial, lb, horizon)
                            .with_note("closed-form Pareto terms"));
                    }
                } else if let Some(t) = form_tail(&f, horizon) {
                    return Ok(
                        SeriesVerdict::converges(partial, t, horizon).with_note("closed-form Pareto terms")
                    );
                }
            }
        } else if af.power > 0.0 {
            // Markov: P(|X| ≥ t) ≤ E|X|^q t^{-q}, with q making the bound summable.
            let q = ((2.5 + tf.power) / af.power).max(1.0);
            if let Some(lnc) = dist.ln_power_tail_constant(q) {
                let f = base.mul(&af.powf(-q)).mul(&const_form(lnc - q * eps.ln()));
                if let Some(t) = form_tail(&f, horizon) {
                    return Ok(SeriesVerdict::converges(partial, t, horizon)
                        .with_note(format!("tail bounded with the order-{q:.3} moment")));
                }
            }
        }
    }
    let v = classify_series_ln(|n| terms[(n - start) as usize], start, horizon)?;
    Ok(v.with_note("classified from the fitted decay of the final decade"))
}

/// `ln` of `τ_n exp(-ε² a_n²/(n T_{ε,n}))`, `-inf` when T = 0.
fn ln_term_iii(dist: &DistModel, tau: &WeightSequence, a: &NormingSequence, eps: f64, n: u64) -> Result<f64> {
    let t = dist.truncated_moment(2.0, eps * a.eval(n))?;
    if t == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let expo = (2.0 * eps.ln() + 2.0 * a.ln_eval(n) - (n as f64).ln() - t.ln()).exp();
    Ok(tau.ln_eval(n) - expo)
}

/// True for τ_n = 1/n with a_n = (n ln n)^{1/2}.
pub fn is_sp_pair(tau: &WeightSequence, a: &NormingSequence) -> bool {
    let (Some(t), Some(f)) = (tau.as_regular(), a.as_regular()) else {
        return false;
    };
    t.power == -1.0
        && !has_logs(t)
        && t.ln_const == 0.0
        && f.power == 0.5
        && f.plain_log == 0.5
        && f.shifted_log == 0.0
        && f.loglog == 0.0
        && f.ln_const == 0.0
}

/// The weight and norming pair of the √(n log n) corollary.
pub fn sp_sequences() -> (WeightSequence, NormingSequence) {
    (
        WeightSequence::harmonic().starting_at(2),
        NormingSequence::sqrt_n_log_n(),
    )
}

/// `Σ_n τ_n exp(-ε² a_n²/(n T_{ε,n}))` with `T_{ε,n} = E[X² 1{|X| < ε a_n}]`
/// and `exp(-t/0) = 0`.
pub fn eval_condition_iii(
    dist: &DistModel,
    tau: &WeightSequence,
    a: &NormingSequence,
    eps: f64,
    horizon: u64,
) -> Result<SeriesVerdict> {
    check_eps(eps)?;
    let start = tau.start().max(a.start());
    check_horizon(start, horizon)?;
    let terms: Vec<f64> = (start..=horizon)
        .map(|n| ln_term_iii(dist, tau, a, eps, n))
        .collect::<Result<_>>()?;
    let partial = ln_sum(&terms);

    if let DistKind::Counterexample(ce) = dist.kind() {
        if !is_sp_pair(tau, a) || eps != 1.0 {
            return Ok(SeriesVerdict::inconclusive(
                partial,
                horizon,
                "the block certificate covers eps = 1 with tau_n = 1/n and a_n = (n log n)^(1/2) only",
            ));
        }
        return Ok(match ce.divergence_certificate() {
            Ok(cert) => {
                let min_block = cert
                    .levels
                    .iter()
                    .map(|b| b.block_lower_bound)
                    .fold(f64::INFINITY, f64::min);
                let lb = LowerBound::Blocks {
                    count: cert.levels.len(),
                    min_block,
                    cumulative: cert.cumulative,
                    description: "each block K_m < n <= K_{m+1} sums to at least min_block".into(),
                };
                SeriesVerdict::diverges(partial, lb, horizon).with_note(cert.note)
            }
            Err(e) => SeriesVerdict::inconclusive(partial, horizon, e.to_string()),
        });
    }

    if let (Some(s2), Some(tf), Some(af)) = (dist.second_moment(), tau.as_regular(), a.as_regular()) {
        // T_{ε,n} ≤ E X², so terms ≤ τ_n exp(-ε² g_n / E X²) with g_n = a_n²/n.
        let g = af.powf(2.0).mul(&PowerLogForm::power(-1.0));
        let pure_log = g.power == 0.0 && g.plain_log == 1.0 && g.shifted_log == 0.0 && g.loglog == 0.0;
        if s2 > 0.0 && pure_log {
            let scale = eps * eps * g.ln_const.exp();
            let upper = tf.mul(&PowerLogForm::power(-scale / s2));
            if let Some(t) = form_tail(&upper, horizon) {
                return Ok(SeriesVerdict::converges(partial, t, horizon)
                    .with_note("terms bounded by the full second moment"));
            }
            // T is non-decreasing in n, so T_{n0} bounds it from below on n ≥ n0.
            let n0 = (horizon / 10).max(start);
            let t0 = dist.truncated_moment(2.0, eps * a.eval(n0))?;
            if t0 > 0.0 {
                let lower = tf.mul(&PowerLogForm::power(-scale / t0));
                if let Some(lb) = rate_lower_bound(&lower, n0, horizon) {
                    return Ok(SeriesVerdict::diverges(partial, lb, horizon)
                        .with_note(format!("T_(eps,n) >= {t0:.6e} for n >= {n0}")));
                }
            }
        } else if s2 > 0.0 && g.power > 0.0 {
            // e^{-y} ≤ (k/e)^k y^{-k} turns the bound into a power form.
            let k = ((2.0 + tf.power) / g.power).max(1.0);
            let ln_c = k * (k.ln() - 1.0) - k * (2.0 * eps.ln() - s2.ln());
            let upper = tf.mul(&g.powf(-k)).mul(&const_form(ln_c));
            if let Some(t) = form_tail(&upper, horizon) {
                return Ok(SeriesVerdict::converges(partial, t, horizon)
                    .with_note("terms bounded by the full second moment"));
            }
        }
    }
    let v = classify_series_ln(|n| terms[(n - start) as usize], start, horizon)?;
    Ok(v.with_note("classified from the fitted decay of the final decade"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpReport {
    pub mean: ConditionReport,
    pub moment: ConditionReport,
    pub series: ConditionReport,
    /// Largest relative gap between the two ways of writing each term.
    pub term_identity_max_error: f64,
}

/// The three conditions of the √(n log n) corollary on an ε grid.
pub fn eval_cor_sp(dist: &DistModel, eps_grid: &[f64], horizon: u64) -> Result<SpReport> {
    if eps_grid.is_empty() {
        return input("epsilon grid is empty");
    }
    for &e in eps_grid {
        check_eps(e)?;
    }
    let (tau, a) = sp_sequences();
    let mean = dist.mean();
    let mean_report = ConditionReport::scalar(
        ConditionId::SpA,
        if mean == 0.0 {
            CheckVerdict::Holds
        } else {
            CheckVerdict::Fails
        },
        Some(mean),
        if dist.is_symmetric() {
            "symmetric law, so the mean and every median are 0"
        } else {
            "analytic mean"
        },
    );
    let moment_report = match dist.log_plus_moment()? {
        MomentValue::Finite { value, abs_error } => ConditionReport::scalar(
            ConditionId::SpB,
            CheckVerdict::Holds,
            Some(value),
            format!("E[X^2/log(2+|X|)] finite, abs error {abs_error:.2e}"),
        ),
        MomentValue::Divergent { certificate } => ConditionReport::scalar(
            ConditionId::SpB,
            CheckVerdict::Fails,
            None,
            format!("truncated values grow without bound: {certificate:?}"),
        ),
    };

    let mut per_eps = Vec::new();
    let mut identity: f64 = 0.0;
    for &eps in eps_grid {
        per_eps.push(EpsVerdict {
            epsilon: eps,
            verdict: eval_condition_iii(dist, &tau, &a, eps, horizon)?,
        });
        for n in log_spaced(2, horizon, 200) {
            let t = dist.truncated_moment(2.0, eps * a.eval(n))?;
            let lhs = ln_term_iii(dist, &tau, &a, eps, n)?;
            let rhs = if t == 0.0 {
                f64::NEG_INFINITY
            } else {
                -(1.0 + eps * eps / t) * (n as f64).ln()
            };
            if lhs.is_finite() || rhs.is_finite() {
                identity = identity.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            }
        }
    }
    let series = ConditionReport::from_series(
        ConditionId::SpC,
        per_eps,
        Some("sum over n >= 2 of n^(-1-eps^2/T_(eps,n)); covers the listed eps only".into()),
    );
    Ok(SpReport {
        mean: mean_report,
        moment: moment_report,
        series,
        term_identity_max_error: identity,
    })
}

/// Largest δ for which `x ↦ (ln(2+ln(2+x)))^{1+δ}/ln(2+x)` is
/// non-increasing on `[0, ∞)`; larger δ are evaluated at this value.
pub const SP_WEAK_DELTA_CAP: f64 = 1.5;

/// Grid end, in units of ln n, for the beyond-horizon check of the chain.
const CHAIN_CHECK_LN_N: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpWeakReport {
    pub delta: f64,
    pub delta_used: f64,
    /// `E[X² (log⁺log⁺|X|)^{1+δ}/log⁺|X|]`.
    pub moment: f64,
    /// First n from which `n^{-1-1/T_{1,n}} ≤ 1/(n ln² n)` is certified.
    pub chain_start: Option<u64>,
    pub verdict: SeriesVerdict,
}

/// Reproduces the bound chain `T_{1,n} ≤ C log⁺a_n/(log⁺log⁺a_n)^{1+δ}` and
/// the comparison with `Σ 1/(n ln² n)`.
pub fn eval_sp_weak_bound(dist: &DistModel, delta: f64, horizon: u64) -> Result<SpWeakReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return input(format!("delta must be positive, got {delta}"));
    }
    check_horizon(2, horizon)?;
    let delta_used = delta.min(SP_WEAK_DELTA_CAP);
    let moment = match dist.loglog_moment(delta_used)? {
        MomentValue::Finite { value, abs_error } => value + abs_error,
        MomentValue::Divergent { .. } => {
            return input(format!(
                "E[X^2 (log+ log+ |X|)^(1+{delta_used})/log+ |X|] diverges"
            ))
        }
    };
    let (_, a) = sp_sequences();
    // ln(2 + a_n) from v = ln n without forming a_n.
    let ln_plus_a = |v: f64| {
        let ln_a = 0.5 * (v + v.ln());
        ln_a + (2.0 * (-ln_a).exp()).ln_1p()
    };
    // Margin ln n / B_n - 2 ln ln n, with B_n the moment bound on T_{1,n}.
    let margin = |v: f64| {
        let l = ln_plus_a(v);
        let h = (2.0 + l).ln().powf(1.0 + delta_used) / l;
        v * h / moment - 2.0 * v.ln()
    };

    let mut last_bad = None;
    for n in 3..=horizon {
        if margin((n as f64).ln()) < 0.0 {
            last_bad = Some(n);
        }
    }
    let chain_start = last_bad.map_or(3, |n| n + 1);
    let mut v = (horizon as f64).ln();
    let mut beyond_ok = true;
    while v < CHAIN_CHECK_LN_N {
        if margin(v) < 0.0 {
            beyond_ok = false;
            break;
        }
        v *= 1.001;
    }

    let terms: Vec<f64> = (2..=horizon)
        .map(|n| {
            let t = dist.truncated_moment(2.0, a.eval(n))?;
            Ok(if t == 0.0 {
                f64::NEG_INFINITY
            } else {
                -(1.0 + 1.0 / t) * (n as f64).ln()
            })
        })
        .collect::<Result<_>>()?;
    let partial = ln_sum(&terms);
    let verdict = if !beyond_ok {
        SeriesVerdict::inconclusive(
            partial,
            horizon,
            format!("chain margin turns negative near ln n = {v:.3e}"),
        )
    } else if chain_start > horizon {
        SeriesVerdict::inconclusive(
            partial,
            horizon,
            format!("chain only starts at n = {chain_start}"),
        )
    } else {
        // Σ_{n>H} 1/(n ln² n) ≤ ∫_H^∞ dx/(x ln² x) = 1/ln H.
        SeriesVerdict::converges(partial, 1.0 / (horizon as f64).ln(), horizon).with_note(format!(
            "terms <= 1/(n ln^2 n) from n = {chain_start} (checked to ln n = {CHAIN_CHECK_LN_N:.0e}, \
             and the margin grows like (ln ln n)^(1+delta) beyond), C = {moment:.6}"
        ))
    };
    Ok(SpWeakReport {
        delta,
        delta_used,
        moment,
        chain_start: (beyond_ok && chain_start <= horizon).then_some(chain_start),
        verdict,
    })
}

/// Outcome of the Fubini-type inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "camelCase")]
pub enum ElementaryOutcome {
    #[serde(rename_all = "camelCase")]
    InequalityHolds {
        constant: f64,
        lhs: f64,
        rhs: f64,
        margin: f64,
    },
    #[serde(rename_all = "camelCase")]
    Violated { n: u64, lhs: f64, rhs: f64 },
    #[serde(rename_all = "camelCase")]
    HypothesisNotMet { reason: String, max_ratio: f64 },
}

/// `Σ_{n≥2} ρ_n E[|X|^t 1{|X| < b_n}] ≤ C Σ_n n τ_n P(|X| ≥ b_n)`, where C is
/// the smallest constant with `b_n^t Σ_{k≥n} ρ_k ≤ C Σ_{k<n} k τ_k` on the
/// window. Both sides are truncated at the horizon, which keeps the
/// inequality exact; b is taken as 0 at n = 1 and below its start index.
pub fn lemma_elementary_check(
    rho: &WeightSequence,
    tau: &WeightSequence,
    b: &NormingSequence,
    x: &DistModel,
    t: f64,
    horizon: u64,
) -> Result<ElementaryOutcome> {
    if !(t >= 0.0 && t.is_finite()) {
        return input(format!("moment order t must be >= 0, got {t}"));
    }
    let first = 2u64.max(rho.start()).max(b.start()).max(tau.start() + 1);
    check_horizon(first, horizon)?;
    let not_met = |reason: &str, max_ratio: f64| {
        Ok(ElementaryOutcome::HypothesisNotMet {
            reason: reason.into(),
            max_ratio,
        })
    };
    let Some(rf) = rho.as_regular() else {
        return not_met("rho has no analytic tail beyond the horizon", f64::NAN);
    };
    if rf.sum_diverges() {
        return not_met("sum of rho diverges", f64::INFINITY);
    }
    let Some(tail_ln) = rf.ln_tail_bound(horizon) else {
        return not_met("no tail bound for rho at this horizon", f64::NAN);
    };

    let len = (horizon - first + 1) as usize;
    let mut suffix = vec![0.0; len];
    let mut acc = tail_ln;
    for k in (first..=horizon).rev() {
        acc = log_add_exp(acc, rho.ln_eval(k));
        suffix[(k - first) as usize] = acc;
    }
    let prefix = weight_prefix(tau, horizon);
    let ln_ratio =
        |n: u64| t * b.ln_eval(n) + suffix[(n - first) as usize] - prefix[(n - tau.start()) as usize].ln();
    let max_ln = (first..=horizon).map(ln_ratio).fold(f64::NEG_INFINITY, f64::max);
    let c = max_ln.exp();
    if !c.is_finite() {
        return not_met("ratio is unbounded on the window", c);
    }
    if decade_slope(first, horizon, ln_ratio).is_none_or(|s| s > FLAT_SLOPE) {
        return not_met("ratio still grows across the final decade", c);
    }

    // b_n = 0 before the start index contributes P(|X| ≥ 0) = 1.
    let b_at = |n: u64| if n < b.start() || n == 1 { 0.0 } else { b.eval(n) };
    let mut rhs = NeumaierSum::new();
    for n in tau.start()..first {
        rhs.add(n as f64 * tau.eval(n) * x.tail(b_at(n))?);
    }
    let mut lhs = NeumaierSum::new();
    for n in first..=horizon {
        rhs.add(n as f64 * tau.eval(n) * x.tail(b_at(n))?);
        lhs.add(rho.eval(n) * x.truncated_moment(t, b_at(n))?);
        let (l, r) = (lhs.value(), c * rhs.value());
        if l > r * (1.0 + 1e-12) {
            return Ok(ElementaryOutcome::Violated { n, lhs: l, rhs: r });
        }
    }
    let (l, r) = (lhs.value(), c * rhs.value());
    Ok(ElementaryOutcome::InequalityHolds {
        constant: c,
        lhs: l,
        rhs: r,
        margin: r - l,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "camelCase")]
pub enum KlesovOutcome {
    #[serde(rename_all = "camelCase")]
    FiniteCertified {
        bound: f64,
        partial_sum: f64,
        tail_bound: f64,
        constant: f64,
    },
    #[serde(rename_all = "camelCase")]
    Inconclusive { reason: String },
}

/// `Σ_n τ_n (n E[|X|^ν 1{|X| < b_n}]/b_n^ν)^θ` is finite once its three
/// hypotheses are certified; the tail uses `E|X|^ν` as a monotone bound.
pub fn lemma_klesov_check(
    tau: &WeightSequence,
    b: &NormingSequence,
    x: &DistModel,
    nu: f64,
    theta: f64,
    horizon: u64,
) -> Result<KlesovOutcome> {
    if !(nu > 0.0 && nu.is_finite()) {
        return input(format!("nu must be positive, got {nu}"));
    }
    let inconclusive = |r: String| Ok(KlesovOutcome::Inconclusive { reason: r });
    let crit = eval_condition_ii(x, tau, b, 1.0, horizon)?;
    if crit.verdict != Verdict::Converges {
        return inconclusive(format!("sum of n tau_n P(|X| >= b_n) is {:?}", crit.verdict));
    }
    let g1 = verify_growth_exponent(tau, b, theta, nu, 2, horizon)?;
    if g1.verdict != CheckVerdict::Holds {
        return inconclusive(format!(
            "growth hypothesis with exponent nu*theta is {:?}",
            g1.verdict
        ));
    }
    let g2 = verify_liminf_exponent(tau, b, nu, 2, horizon)?;
    if g2.verdict != CheckVerdict::Holds {
        return inconclusive(format!("k b_n^nu / b_k^nu <= C T_(n-1) is {:?}", g2.verdict));
    }
    let constant = g1
        .witness_c
        .unwrap_or(f64::NAN)
        .max(g2.witness_c.unwrap_or(f64::NAN));

    let start = tau.start().max(b.start());
    let mut partial = NeumaierSum::new();
    for n in start..=horizon {
        let m = x.truncated_moment(nu, b.eval(n))?;
        if m > 0.0 {
            let ln = tau.ln_eval(n) + theta * ((n as f64).ln() + m.ln() - nu * b.ln_eval(n));
            partial.add(ln.exp());
        }
    }
    let (Some(mu), Some(tf), Some(bf)) = (x.abs_moment(nu), tau.as_regular(), b.as_regular()) else {
        return inconclusive("no monotone tail bound: E|X|^nu infinite or sequences not regular".into());
    };
    let dom = tf.mul(
        &PowerLogForm::power(1.0)
            .mul(&bf.powf(-nu))
            .mul(&const_form(mu.ln()))
            .powf(theta),
    );
    let Some(tail) = form_tail(&dom, horizon) else {
        return inconclusive("the E|X|^nu bound on the terms is not summable".into());
    };
    let p = partial.value();
    Ok(KlesovOutcome::FiniteCertified {
        bound: p + tail,
        partial_sum: p,
        tail_bound: tail,
        constant,
    })
}

fn binomial(r: u32, j: u32) -> f64 {
    (1..=j).fold(1.0, |acc, i| acc * (r - j + i) as f64 / i as f64)
}

/// `p_r(x, y)` with `(x - y)^r = x^r - y p_r(x, y)`.
pub fn comparison_polynomial(r: u32, x: f64, y: f64) -> f64 {
    (1..=r)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * binomial(r, j) * y.powi(j as i32 - 1) * x.powi((r - j) as i32)
        })
        .sum()
}

/// Grid points per axis for the maximum of `p_r` on the unit square.
const COMP_GRID: usize = 1000;

/// `c_r = max_{[0,1]²} p_r`, from the corners and a dense grid.
pub fn comparison_constant(r: u32) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=COMP_GRID {
        let x = i as f64 / COMP_GRID as f64;
        for j in 0..=COMP_GRID {
            let y = j as f64 / COMP_GRID as f64;
            best = best.max(comparison_polynomial(r, x, y));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "camelCase")]
#[allow(clippy::large_enum_variant)]
pub enum CompOutcome {
    /// `Σ τ α^r ≤ Σ τ |α-β|^r + c_r Σ τ β` at every truncation; the two
    /// hypothesis series are classified alongside.
    #[serde(rename_all = "camelCase")]
    ImplicationHolds {
        c_r: f64,
        alpha_power_sum: f64,
        bound: f64,
        difference_series: SeriesVerdict,
        beta_series: SeriesVerdict,
    },
    #[serde(rename_all = "camelCase")]
    Witness {
        n: u64,
        alpha_power_sum: f64,
        bound: f64,
    },
}

pub fn lemma_comp_check(
    alpha: impl Fn(u64) -> f64,
    beta: impl Fn(u64) -> f64,
    tau: &WeightSequence,
    r: u32,
    horizon: u64,
) -> Result<CompOutcome> {
    if r == 0 {
        return input("r must be a positive integer");
    }
    let start = tau.start();
    check_horizon(start, horizon)?;
    for n in start..=horizon {
        let (a, b) = (alpha(n), beta(n));
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return input(format!("alpha_{n} = {a} and beta_{n} = {b} must lie in [0, 1]"));
        }
    }
    let c_r = comparison_constant(r);
    let (mut lhs, mut diff, mut bsum) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for n in start..=horizon {
        let (a, b, t) = (alpha(n), beta(n), tau.eval(n));
        lhs.add(t * a.powi(r as i32));
        diff.add(t * (a - b).abs().powi(r as i32));
        bsum.add(t * b);
        let bound = diff.value() + c_r * bsum.value();
        if lhs.value() > bound * (1.0 + 1e-12) + 1e-300 {
            return Ok(CompOutcome::Witness {
                n,
                alpha_power_sum: lhs.value(),
                bound,
            });
        }
    }
    let difference_series = classify_series(
        |n| tau.eval(n) * (alpha(n) - beta(n)).abs().powi(r as i32),
        start,
        horizon,
    )?;
    let beta_series = classify_series(|n| tau.eval(n) * beta(n), start, horizon)?;
    Ok(CompOutcome::ImplicationHolds {
        c_r,
        alpha_power_sum: lhs.value(),
        bound: diff.value() + c_r * bsum.value(),
        difference_series,
        beta_series,
    })
}
