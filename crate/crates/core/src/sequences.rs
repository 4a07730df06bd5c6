//! Weight sequences τ_n, norming sequences a_n, and the checks on them:
//! the dyadic sufficient criterion for Condition A, a falsification search
//! over power families, the growth conditions and their liminf companions,
//! and a θ search for regularly varying pairs.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Result};
use crate::numerics::{log_add_exp, log_spaced, ls_slope, NeumaierSum};
use crate::verdict::{classify_series_ln, Verdict};

/// Which logarithm carries the `logPower` exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LogKind {
    /// `ln(e + n)`, positive for every n ≥ 1.
    #[default]
    Shifted,
    /// `ln n`; only defined from n = 2 on.
    Plain,
}

/// `constant · L(n)^logPower · (ln ln(2e + n))^logLogPower` with `L` chosen
/// by `logKind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SlowlyVaryingSpec {
    pub log_power: f64,
    pub log_log_power: f64,
    pub constant: f64,
    pub log_kind: LogKind,
}

impl Default for SlowlyVaryingSpec {
    fn default() -> Self {
        Self {
            log_power: 0.0,
            log_log_power: 0.0,
            constant: 1.0,
            log_kind: LogKind::Shifted,
        }
    }
}

impl SlowlyVaryingSpec {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn plain_log(power: f64) -> Self {
        Self {
            log_power: power,
            log_kind: LogKind::Plain,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.constant > 0.0 && self.constant.is_finite()) {
            return input(format!(
                "slowly varying constant must be positive, got {}",
                self.constant
            ));
        }
        if !self.log_power.is_finite() || !self.log_log_power.is_finite() {
            return input("slowly varying exponents must be finite");
        }
        Ok(())
    }

    fn form(&self, power: f64) -> PowerLogForm {
        let (shifted_log, plain_log) = match self.log_kind {
            LogKind::Shifted => (self.log_power, 0.0),
            LogKind::Plain => (0.0, self.log_power),
        };
        PowerLogForm {
            ln_const: self.constant.ln(),
            power,
            shifted_log,
            plain_log,
            loglog: self.log_log_power,
        }
    }
}

/// `e^{lnConst} n^power ln(e+n)^shiftedLog (ln n)^plainLog lnln(2e+n)^loglog`.
///
/// Closed under products and real powers, and summable tails admit a
/// rigorous closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PowerLogForm {
    pub ln_const: f64,
    pub power: f64,
    pub shifted_log: f64,
    pub plain_log: f64,
    pub loglog: f64,
}

const TWO_E: f64 = 2.0 * std::f64::consts::E;

impl PowerLogForm {
    pub fn power(p: f64) -> Self {
        Self {
            ln_const: 0.0,
            power: p,
            shifted_log: 0.0,
            plain_log: 0.0,
            loglog: 0.0,
        }
    }

    /// Smallest n at which the form is defined and positive.
    pub fn min_index(&self) -> u64 {
        if self.plain_log != 0.0 {
            2
        } else {
            1
        }
    }

    pub fn ln_eval(&self, n: f64) -> f64 {
        let mut v = self.ln_const + self.power * n.ln();
        if self.shifted_log != 0.0 {
            v += self.shifted_log * (std::f64::consts::E + n).ln().ln();
        }
        if self.plain_log != 0.0 {
            v += self.plain_log * n.ln().ln();
        }
        if self.loglog != 0.0 {
            v += self.loglog * (TWO_E + n).ln().ln().ln();
        }
        v
    }

    pub fn mul(&self, o: &PowerLogForm) -> Self {
        Self {
            ln_const: self.ln_const + o.ln_const,
            power: self.power + o.power,
            shifted_log: self.shifted_log + o.shifted_log,
            plain_log: self.plain_log + o.plain_log,
            loglog: self.loglog + o.loglog,
        }
    }

    pub fn powf(&self, e: f64) -> Self {
        Self {
            ln_const: self.ln_const * e,
            power: self.power * e,
            shifted_log: self.shifted_log * e,
            plain_log: self.plain_log * e,
            loglog: self.loglog * e,
        }
    }

    /// Upper bound on the elasticity `x f'(x)/f(x)` valid for all `x >= h`.
    pub fn elasticity_upper(&self, h: f64) -> f64 {
        let lh = (std::f64::consts::E + h).ln();
        let l2 = (TWO_E + h).ln();
        self.power
            + self.shifted_log.max(0.0) / lh
            + self.plain_log.max(0.0) / h.ln()
            + self.loglog.max(0.0) / (l2 * l2.ln())
    }

    /// Lower bound on the elasticity valid for all `x >= h`.
    pub fn elasticity_lower(&self, h: f64) -> f64 {
        let lh = (std::f64::consts::E + h).ln();
        let l2 = (TWO_E + h).ln();
        self.power
            + self.shifted_log.min(0.0) / lh
            + self.plain_log.min(0.0) / h.ln()
            + self.loglog.min(0.0) / (l2 * l2.ln())
    }

    /// `ln` of a rigorous upper bound on `Σ_{k>h} f(k)`, or `None` when no
    /// bound is available at this `h`.
    ///
    /// When f is decreasing past `h` the range `(h, 10^8 h]` is covered by
    /// upper Riemann blocks of ratio 1.01, which keeps the bound within about
    /// one percent of the true tail even when log factors are negative.
    pub fn ln_tail_bound(&self, h: u64) -> Option<f64> {
        if h < 3 || self.elasticity_upper(h as f64) >= 0.0 {
            return self.ln_tail_bound_closed(h);
        }
        let far = (h as f64 * 1e8).min(1e15) as u64;
        let mut acc = self.ln_tail_bound_closed(far)?;
        let mut b = h;
        while b < far {
            let next = ((b as f64 * 1.01).ceil() as u64).max(b + 1).min(far);
            acc = log_add_exp(acc, ((next - b) as f64).ln() + self.ln_eval(b as f64));
            b = next;
        }
        Some(match self.ln_tail_bound_closed(h) {
            Some(c) => c.min(acc),
            None => acc,
        })
    }

    fn ln_tail_bound_closed(&self, h: u64) -> Option<f64> {
        let hf = h.max(3) as f64;
        if h < 3 {
            return None;
        }
        let e = self.elasticity_upper(hf);
        if e < -1.0 {
            // f(x) <= f(h)(x/h)^e on [h, inf), then integral comparison.
            return Some(self.ln_eval(hf) + hf.ln() - (-e - 1.0).ln());
        }
        // Borderline 1/(n log^b n) with b > 1.
        let logs = self.shifted_log + self.plain_log;
        if self.power == -1.0
            && self.shifted_log <= 0.0
            && self.plain_log <= 0.0
            && self.loglog <= 0.0
            && logs < -1.0
            && h >= 10
        {
            let b = -logs;
            return Some(self.ln_const + (1.0 - b) * hf.ln().ln() - (b - 1.0).ln());
        }
        None
    }

    /// True when `Σ f(n)` provably diverges.
    pub fn sum_diverges(&self) -> bool {
        let logs = self.shifted_log + self.plain_log;
        self.power > -1.0 || (self.power == -1.0 && (logs > -1.0 || (logs == -1.0 && self.loglog >= -1.0)))
    }
}

type Oracle = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WeightForm {
    /// Power law times a slowly varying factor.
    Regular(PowerLogForm),
    /// `τ_n = ratio^n` with `0 < ratio`.
    Geometric { ratio: f64 },
    /// Arbitrary non-negative term oracle.
    Custom(Oracle),
}

impl fmt::Debug for WeightForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightForm::Regular(p) => f.debug_tuple("Regular").field(p).finish(),
            WeightForm::Geometric { ratio } => f.debug_struct("Geometric").field("ratio", ratio).finish(),
            WeightForm::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// The weights τ_n, defined for n ≥ `start`.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    form: WeightForm,
    start: u64,
}

impl WeightSequence {
    /// `τ_n = n^β · L(n)`.
    pub fn power_law(beta: f64, sv: SlowlyVaryingSpec, start: u64) -> Result<Self> {
        sv.validate()?;
        if !beta.is_finite() {
            return input("beta must be finite");
        }
        let form = sv.form(beta);
        Self::regular(form, start)
    }

    pub fn regular(form: PowerLogForm, start: u64) -> Result<Self> {
        if start < form.min_index() {
            return domain(format!(
                "start index {start} below {} required by a ln n factor",
                form.min_index()
            ));
        }
        Ok(Self {
            form: WeightForm::Regular(form),
            start,
        })
    }

    pub fn geometric(ratio: f64, start: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return input(format!("geometric ratio must be positive, got {ratio}"));
        }
        Ok(Self {
            form: WeightForm::Geometric { ratio },
            start: start.max(1),
        })
    }

    pub fn custom(f: impl Fn(u64) -> f64 + Send + Sync + 'static, start: u64) -> Self {
        Self {
            form: WeightForm::Custom(Arc::new(f)),
            start: start.max(1),
        }
    }

    /// τ_n = 1/n from n = 1.
    pub fn harmonic() -> Self {
        Self::power_law(-1.0, SlowlyVaryingSpec::one(), 1).unwrap()
    }

    pub fn constant_one() -> Self {
        Self::power_law(0.0, SlowlyVaryingSpec::one(), 1).unwrap()
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn form(&self) -> &WeightForm {
        &self.form
    }

    pub fn as_regular(&self) -> Option<&PowerLogForm> {
        match &self.form {
            WeightForm::Regular(p) => Some(p),
            _ => None,
        }
    }

    /// Same weights with the start index moved up.
    pub fn starting_at(&self, start: u64) -> Self {
        Self {
            form: self.form.clone(),
            start: start.max(self.start),
        }
    }

    pub fn ln_eval(&self, n: u64) -> f64 {
        debug_assert!(n >= self.start);
        match &self.form {
            WeightForm::Regular(p) => p.ln_eval(n as f64),
            WeightForm::Geometric { ratio } => n as f64 * ratio.ln(),
            WeightForm::Custom(f) => f(n).ln(),
        }
    }

    pub fn eval(&self, n: u64) -> f64 {
        match &self.form {
            WeightForm::Custom(f) => f(n),
            _ => self.ln_eval(n).exp(),
        }
    }
}

#[derive(Clone)]
pub enum NormingForm {
    Regular(PowerLogForm),
    Custom(Oracle),
}

impl fmt::Debug for NormingForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormingForm::Regular(p) => f.debug_tuple("Regular").field(p).finish(),
            NormingForm::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Increasing, unbounded normalisers a_n for n ≥ `start`.
#[derive(Debug, Clone)]
pub struct NormingSequence {
    form: NormingForm,
    start: u64,
}

impl NormingSequence {
    /// `a_n = n^α · K(n)` with α > 0. The factor must not make the sequence
    /// decrease anywhere on its domain, which is checked on `[start, 10^6]`
    /// and by the elasticity bound beyond.
    pub fn power_law(alpha: f64, sv: SlowlyVaryingSpec, start: u64) -> Result<Self> {
        sv.validate()?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return input(format!(
                "alpha must be positive for a_n to tend to infinity, got {alpha}"
            ));
        }
        let form = sv.form(alpha);
        if start < form.min_index() {
            return domain(format!(
                "start index {start} below {} required by a ln n factor",
                form.min_index()
            ));
        }
        const PROBE: u64 = 1_000_000;
        if form.elasticity_lower(PROBE as f64) < 0.0 {
            return input("slowly varying factor makes a_n eventually decreasing");
        }
        let mut prev = form.ln_eval(start as f64);
        for n in start + 1..=PROBE.min(start + 100_000) {
            let v = form.ln_eval(n as f64);
            if v < prev {
                return input(format!("a_n decreases at n = {n}"));
            }
            prev = v;
        }
        Ok(Self {
            form: NormingForm::Regular(form),
            start,
        })
    }

    /// Arbitrary oracle; monotonicity and positivity are checked on
    /// `[start, probe]` and unboundedness by `f(probe) > bound`.
    pub fn custom(
        f: impl Fn(u64) -> f64 + Send + Sync + 'static,
        start: u64,
        probe: u64,
        bound: f64,
    ) -> Result<Self> {
        let start = start.max(1);
        if probe <= start {
            return input("probe index must exceed the start index");
        }
        let mut prev = f(start);
        if !(prev > 0.0) {
            return input(format!("a_{start} = {prev} is not strictly positive"));
        }
        for n in start + 1..=probe {
            let v = f(n);
            if !(v >= prev) {
                return input(format!("a_n is not increasing at n = {n}"));
            }
            prev = v;
        }
        if !(prev > bound) {
            return input(format!(
                "a_{probe} = {prev} does not exceed {bound}; a_n must tend to infinity"
            ));
        }
        Ok(Self {
            form: NormingForm::Custom(Arc::new(f)),
            start,
        })
    }

    /// `a_n = n^α` from n = 1.
    pub fn power(alpha: f64) -> Result<Self> {
        Self::power_law(alpha, SlowlyVaryingSpec::one(), 1)
    }

    /// `a_n = (n ln n)^{1/2}` from n = 2.
    pub fn sqrt_n_log_n() -> Self {
        Self::power_law(0.5, SlowlyVaryingSpec::plain_log(0.5), 2).unwrap()
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn form(&self) -> &NormingForm {
        &self.form
    }

    pub fn as_regular(&self) -> Option<&PowerLogForm> {
        match &self.form {
            NormingForm::Regular(p) => Some(p),
            NormingForm::Custom(_) => None,
        }
    }

    pub fn ln_eval(&self, n: u64) -> f64 {
        match &self.form {
            NormingForm::Regular(p) => p.ln_eval(n as f64),
            NormingForm::Custom(f) => f(n).ln(),
        }
    }

    pub fn eval(&self, n: u64) -> f64 {
        match &self.form {
            NormingForm::Regular(p) => p.ln_eval(n as f64).exp(),
            NormingForm::Custom(f) => f(n),
        }
    }
}

/// `T_k = Σ_{n=n₀}^{k} n τ_n` with compensated summation.
pub fn partial_weight_sum(tau: &WeightSequence, k: u64) -> Result<f64> {
    if k < tau.start() {
        return domain(format!("k = {k} is below the start index {}", tau.start()));
    }
    let s: NeumaierSum = (tau.start()..=k).map(|n| n as f64 * tau.eval(n)).collect();
    Ok(s.value())
}

/// `prefix[i] = T_{start+i-1}`, i.e. `prefix[0] = 0` and
/// `prefix[n - start + 1] = T_n`, for n up to `hi`.
pub(crate) fn weight_prefix(tau: &WeightSequence, hi: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity((hi - tau.start() + 2) as usize);
    out.push(0.0);
    let mut acc = NeumaierSum::new();
    for n in tau.start()..=hi {
        acc.add(n as f64 * tau.eval(n));
        out.push(acc.value());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckVerdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionABranch {
    /// `liminf τ_n > 0`.
    BoundedBelow,
    /// `liminf n τ_n > 0` plus bounded dyadic ratios.
    Dyadic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "camelCase")]
pub enum ConditionAResult {
    #[serde(rename_all = "camelCase")]
    Established {
        witness_c: f64,
        branch: ConditionABranch,
    },
    #[serde(rename_all = "camelCase")]
    NotEstablished { reason: String },
}

impl ConditionAResult {
    pub fn is_established(&self) -> bool {
        matches!(self, ConditionAResult::Established { .. })
    }
}

/// Empirical liminf reading: the minimum over the late half of the window
/// may not fall below 99% of the minimum over the early half.
fn min_is_stable(early_min_ln: f64, late_min_ln: f64) -> bool {
    late_min_ln.is_finite() && late_min_ln >= early_min_ln + 0.99f64.ln()
}

/// Dyadic sufficient criterion for Condition A, scanned over
/// `n ≤ 2^max_level`.
pub fn check_condition_a_sufficient(tau: &WeightSequence, max_level: u32) -> ConditionAResult {
    if max_level < 4 {
        return ConditionAResult::NotEstablished {
            reason: format!("max level {max_level} < 4 gives too few dyadic blocks"),
        };
    }
    if max_level > 40 {
        return ConditionAResult::NotEstablished {
            reason: "max level above 40 is out of scanning range".into(),
        };
    }
    let hi = 1u64 << max_level;
    let mid = 1u64 << (max_level - 1);
    let lo = tau.start();

    let (mut tau_early, mut tau_late) = (f64::INFINITY, f64::INFINITY);
    let (mut ntau_early, mut ntau_late) = (f64::INFINITY, f64::INFINITY);
    for n in lo..=hi {
        let lt = tau.ln_eval(n);
        let lnt = lt + (n as f64).ln();
        if n < mid {
            tau_early = tau_early.min(lt);
            ntau_early = ntau_early.min(lnt);
        } else {
            tau_late = tau_late.min(lt);
            ntau_late = ntau_late.min(lnt);
        }
    }

    // Per-level ln C: the smallest C making every τ_k in the closed block
    // [2^{l-1}, 2^l] comparable in both directions to both endpoints.
    let mut level_c = Vec::new();
    for level in 1..=max_level {
        let a = 1u64 << (level - 1);
        let b = 1u64 << level;
        if a < lo {
            continue;
        }
        let (la, lb) = (tau.ln_eval(a), tau.ln_eval(b));
        let mut c = 0.0f64;
        for k in a..=b {
            let lk = tau.ln_eval(k);
            c = c.max((lk - la).abs()).max((lk - lb).abs());
        }
        level_c.push(c);
    }
    let witness_ln = level_c.iter().copied().fold(0.0, f64::max);
    let witness_c = witness_ln.exp();

    if min_is_stable(tau_early, tau_late) {
        return ConditionAResult::Established {
            witness_c,
            branch: ConditionABranch::BoundedBelow,
        };
    }
    let half = level_c.len() / 2;
    let early_c = level_c[..half].iter().copied().fold(0.0, f64::max);
    let late_c = level_c[half..].iter().copied().fold(0.0, f64::max);
    let c_bounded = witness_ln.is_finite() && late_c <= early_c + 1.01f64.ln();
    let ntau_ok = min_is_stable(ntau_early, ntau_late);
    match (ntau_ok, c_bounded) {
        (true, true) => ConditionAResult::Established {
            witness_c,
            branch: ConditionABranch::Dyadic,
        },
        (false, _) => ConditionAResult::NotEstablished {
            reason: format!("neither tau_n nor n*tau_n keeps a positive floor on [{lo}, 2^{max_level}]"),
        },
        (true, false) => ConditionAResult::NotEstablished {
            reason: "dyadic block ratios keep growing across the window".into(),
        },
    }
}

/// Decreasing test sequences `c_n = s · n^{-p}` for a grid of `(s, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFamily {
    pub scales: Vec<f64>,
    pub powers: Vec<f64>,
}

impl Default for PowerFamily {
    fn default() -> Self {
        Self {
            scales: vec![0.01, 0.1, 1.0, 10.0],
            powers: vec![0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionAWitness {
    pub scale: f64,
    pub power: f64,
    pub truncated_partial_sum: f64,
    pub truncated_tail_bound: f64,
    pub full_lower_bound_constant: f64,
}

/// Searches the power family for a `c_n` with `Σ τ_n min(n c_n, 1)`
/// convergent and `Σ τ_n n c_n` divergent. `None` means no member of the
/// grid falsifies Condition A, which is not a proof that it holds.
pub fn falsify_condition_a(
    tau: &WeightSequence,
    family: &PowerFamily,
    horizon: u64,
) -> Result<Option<ConditionAWitness>> {
    if family.scales.is_empty() || family.powers.is_empty() {
        return input("empty test family");
    }
    for &s in &family.scales {
        if !(s > 0.0) {
            return input(format!("scale {s} does not give a positive sequence"));
        }
    }
    for &p in &family.powers {
        if !(p > 0.0) {
            return input(format!("power {p} does not give a decreasing sequence"));
        }
    }
    for &s in &family.scales {
        for &p in &family.powers {
            let ln_nc = |n: u64| s.ln() + (1.0 - p) * (n as f64).ln();
            let trunc = classify_series_ln(|n| tau.ln_eval(n) + ln_nc(n).min(0.0), tau.start(), horizon)?;
            if trunc.verdict != Verdict::Converges {
                continue;
            }
            let full = classify_series_ln(|n| tau.ln_eval(n) + ln_nc(n), tau.start(), horizon)?;
            if full.verdict == Verdict::Diverges {
                return Ok(Some(ConditionAWitness {
                    scale: s,
                    power: p,
                    truncated_partial_sum: trunc.partial_sum,
                    truncated_tail_bound: trunc.tail_bound.unwrap_or(f64::INFINITY),
                    full_lower_bound_constant: full.lower_bound.map(|l| l.constant()).unwrap_or(0.0),
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthVariant {
    /// Exponent 3 on a_k.
    Cubic,
    /// Exponent 2 on a_k.
    Quadratic,
}

impl GrowthVariant {
    pub fn exponent(self) -> f64 {
        match self {
            GrowthVariant::Cubic => 3.0,
            GrowthVariant::Quadratic => 2.0,
        }
    }

    /// Smallest admissible α for regularly varying a_n.
    pub fn alpha_threshold(self) -> (f64, &'static str) {
        match self {
            GrowthVariant::Cubic => (1.0 / 3.0, "1/3"),
            GrowthVariant::Quadratic => (0.5, "1/2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthCheckReport {
    pub variant: Option<GrowthVariant>,
    /// Power of a_k in the condition (3, 2, or ν).
    pub exponent: f64,
    pub theta: f64,
    pub witness_c: Option<f64>,
    pub scan_range: (u64, u64),
    pub max_ratio: f64,
    /// Least value seen, for liminf checks.
    pub floor: Option<f64>,
    /// Log-log slope of the ratio over the final decade.
    pub tail_slope: Option<f64>,
    pub verdict: CheckVerdict,
    pub notes: Vec<String>,
}

/// Ratio above which growth counts as divergence.
pub const DIVERGENCE_RATIO: f64 = 1e6;
/// Largest final-decade log-log slope still read as bounded.
pub const FLAT_SLOPE: f64 = 0.05;

fn validate_window(tau: &WeightSequence, a: &NormingSequence, n_min: u64, horizon: u64) -> Result<u64> {
    let first = n_min.max(2).max(tau.start() + 1).max(a.start());
    if horizon < 10 * first {
        return input(format!(
            "horizon {horizon} must be at least ten times N = {first}"
        ));
    }
    if horizon > 50_000_000 {
        return input("horizon above 5e7 is outside desk scale");
    }
    Ok(first)
}

pub(crate) fn decade_slope(first: u64, horizon: u64, ln_value: impl Fn(u64) -> f64) -> Option<f64> {
    let lo = (horizon / 10).max(first);
    let pts = log_spaced(lo, horizon, 50);
    let xs: Vec<f64> = pts.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&n| ln_value(n)).collect();
    ls_slope(&xs, &ys)
}

/// Growth condition with `a_k` raised to `exponent · θ`:
/// `a_n^{mθ} n^{1-θ} Σ_{k≥n} k^θ τ_k a_k^{-mθ} ≤ C Σ_{k<n} k τ_k`.
pub fn verify_growth_exponent(
    tau: &WeightSequence,
    a: &NormingSequence,
    theta: f64,
    exponent: f64,
    n_min: u64,
    horizon: u64,
) -> Result<GrowthCheckReport> {
    if !(theta >= 1.0 && theta.is_finite()) {
        return input(format!("theta must be >= 1, got {theta}"));
    }
    if !(exponent > 0.0) {
        return input("growth exponent must be positive");
    }
    let first = validate_window(tau, a, n_min, horizon)?;
    let m_theta = exponent * theta;
    let mut notes = Vec::new();

    let ln_u = |k: u64| theta * (k as f64).ln() + tau.ln_eval(k) - m_theta * a.ln_eval(k);

    let regular = match (tau.as_regular(), a.as_regular()) {
        (Some(t), Some(n)) => Some(PowerLogForm::power(theta).mul(t).mul(&n.powf(-m_theta))),
        _ => None,
    };
    let mut tail_ln = f64::NEG_INFINITY;
    let mut exact_tail = false;
    if let Some(u) = regular {
        if u.sum_diverges() {
            return Ok(GrowthCheckReport {
                variant: None,
                exponent,
                theta,
                witness_c: None,
                scan_range: (first, horizon),
                max_ratio: f64::INFINITY,
                floor: None,
                tail_slope: None,
                verdict: CheckVerdict::Fails,
                notes: vec!["the tail sum over k diverges, so the left side is infinite".into()],
            });
        }
        match u.ln_tail_bound(horizon) {
            Some(t) => {
                tail_ln = t;
                exact_tail = true;
            }
            None => notes.push("no analytic tail bound at this horizon".into()),
        }
    } else {
        notes.push("custom form: tail beyond the horizon is omitted, so the ratio is a lower bound".into());
    }

    // Suffix log-sums S(n) = ln Σ_{k=n}^{∞} u_k for n in [first, horizon].
    let len = (horizon - first + 1) as usize;
    let mut suffix = vec![0.0; len];
    let mut acc = tail_ln;
    for k in (first..=horizon).rev() {
        acc = log_add_exp(acc, ln_u(k));
        suffix[(k - first) as usize] = acc;
    }
    let prefix = weight_prefix(tau, horizon);
    let ln_ratio = |n: u64| {
        let t_prev = prefix[(n - tau.start()) as usize];
        m_theta * a.ln_eval(n) - (theta - 1.0) * (n as f64).ln() + suffix[(n - first) as usize] - t_prev.ln()
    };
    let mut max_ln = f64::NEG_INFINITY;
    for n in first..=horizon {
        max_ln = max_ln.max(ln_ratio(n));
    }
    let slope = decade_slope(first, horizon, ln_ratio);
    let max_ratio = max_ln.exp();

    let verdict = match slope {
        Some(s) if max_ratio > DIVERGENCE_RATIO && s > 0.0 => CheckVerdict::Fails,
        Some(s) if s <= FLAT_SLOPE && exact_tail && max_ratio.is_finite() => CheckVerdict::Holds,
        _ => CheckVerdict::Inconclusive,
    };
    Ok(GrowthCheckReport {
        variant: None,
        exponent,
        theta,
        witness_c: (verdict == CheckVerdict::Holds).then_some(max_ratio),
        scan_range: (first, horizon),
        max_ratio,
        floor: None,
        tail_slope: slope,
        verdict,
        notes,
    })
}

pub fn verify_growth_condition(
    tau: &WeightSequence,
    a: &NormingSequence,
    theta: f64,
    variant: GrowthVariant,
    n_min: u64,
    horizon: u64,
) -> Result<GrowthCheckReport> {
    let mut r = verify_growth_exponent(tau, a, theta, variant.exponent(), n_min, horizon)?;
    r.variant = Some(variant);
    Ok(r)
}

/// `inf_{k≥n} (a_k^m / (k a_n^m)) Σ_{j<n} j τ_j`, its running floor over
/// the window, and the constant `C = 1/floor`.
pub fn verify_liminf_exponent(
    tau: &WeightSequence,
    a: &NormingSequence,
    exponent: f64,
    n_min: u64,
    horizon: u64,
) -> Result<GrowthCheckReport> {
    let first = validate_window(tau, a, n_min, horizon)?;
    let mut notes = Vec::new();
    let g = |k: u64| exponent * a.ln_eval(k) - (k as f64).ln();

    let mut window_only = true;
    if let Some(af) = a.as_regular() {
        let h = PowerLogForm::power(-1.0).mul(&af.powf(exponent));
        if h.elasticity_lower(horizon as f64) >= 0.0 {
            window_only = false;
        } else if h.elasticity_upper(horizon as f64) < 0.0 && h.power < 0.0 {
            return Ok(GrowthCheckReport {
                variant: None,
                exponent,
                theta: 1.0,
                witness_c: None,
                scan_range: (first, horizon),
                max_ratio: f64::INFINITY,
                floor: Some(0.0),
                tail_slope: None,
                verdict: CheckVerdict::Fails,
                notes: vec!["a_k^m/k tends to 0, so the infimum over k >= n is 0".into()],
            });
        }
    }
    if window_only {
        notes.push("infimum over k is taken on the window only; values are upper bounds".into());
    }

    let len = (horizon - first + 1) as usize;
    let mut suffix_min = vec![0.0; len];
    let mut acc = f64::INFINITY;
    for k in (first..=horizon).rev() {
        acc = acc.min(g(k));
        suffix_min[(k - first) as usize] = acc;
    }
    let prefix = weight_prefix(tau, horizon);
    let ln_value = |n: u64| suffix_min[(n - first) as usize] - g(n) + prefix[(n - tau.start()) as usize].ln();

    let mid = first + (horizon - first) / 2;
    let (mut early, mut late) = (f64::INFINITY, f64::INFINITY);
    for n in first..=horizon {
        let v = ln_value(n);
        if n < mid {
            early = early.min(v);
        } else {
            late = late.min(v);
        }
    }
    let floor_ln = early.min(late);
    let slope = decade_slope(first, horizon, ln_value);
    let stable = min_is_stable(early, late);
    let verdict = if stable && floor_ln.is_finite() && !window_only {
        CheckVerdict::Holds
    } else if !stable && slope.is_some_and(|s| s < -FLAT_SLOPE) {
        CheckVerdict::Fails
    } else {
        CheckVerdict::Inconclusive
    };
    let witness = (-floor_ln).exp();
    Ok(GrowthCheckReport {
        variant: None,
        exponent,
        theta: 1.0,
        witness_c: (verdict == CheckVerdict::Holds).then_some(witness),
        scan_range: (first, horizon),
        max_ratio: witness,
        floor: Some(floor_ln.exp()),
        tail_slope: slope,
        verdict,
        notes,
    })
}

pub fn verify_liminf_condition(
    tau: &WeightSequence,
    a: &NormingSequence,
    variant: GrowthVariant,
    n_min: u64,
    horizon: u64,
) -> Result<GrowthCheckReport> {
    let mut r = verify_liminf_exponent(tau, a, variant.exponent(), n_min, horizon)?;
    r.variant = Some(variant);
    Ok(r)
}

pub const THETA_GRID: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaRecommendation {
    pub theta: Option<f64>,
    pub growth: Vec<GrowthCheckReport>,
    pub liminf: GrowthCheckReport,
    pub note: String,
}

/// Smallest θ on [`THETA_GRID`] for which both the growth and the liminf
/// checks hold. The grid is a cap, not a bound from theory.
pub fn recommend_theta(
    tau: &WeightSequence,
    a: &NormingSequence,
    variant: GrowthVariant,
    n_min: u64,
    horizon: u64,
) -> Result<ThetaRecommendation> {
    let (Some(tf), Some(af)) = (tau.as_regular(), a.as_regular()) else {
        return input("theta search needs regularly varying tau and a");
    };
    let (thr, name) = variant.alpha_threshold();
    if !(af.power > thr) {
        return input(format!("alpha = {} must exceed {name}", af.power));
    }
    let beta = tf.power;
    let logs_nonneg = tf.shifted_log >= 0.0 && tf.plain_log >= 0.0 && tf.loglog >= 0.0;
    if !(beta > -1.0 || (beta == -1.0 && logs_nonneg)) {
        return input(format!(
            "liminf n*tau_n > 0 fails for beta = {beta} with these log factors"
        ));
    }
    let liminf = verify_liminf_condition(tau, a, variant, n_min, horizon)?;
    let mut growth = Vec::new();
    let mut theta = None;
    for &t in &THETA_GRID {
        let r = verify_growth_condition(tau, a, t, variant, n_min, horizon)?;
        let ok = r.verdict == CheckVerdict::Holds;
        growth.push(r);
        if ok && liminf.verdict == CheckVerdict::Holds {
            theta = Some(t);
            break;
        }
    }
    Ok(ThetaRecommendation {
        theta,
        growth,
        liminf,
        note: "theta searched on {1, 2, 4, 8, 16} only".into(),
    })
}
