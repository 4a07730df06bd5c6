//! Scenario files and the runner behind `hrlab run`.
//!
//! A scenario is a TOML file naming one law, an optional weight/norming pair,
//! an ε grid, a horizon, simulation settings and the checks to run. The
//! runner executes the checks in dependency order (sequence checks, then
//! analytic series, then simulation) and produces a JSON report plus CSV
//! tables. Reports contain no timestamps, so the same scenario and seed give
//! the same bytes whatever the worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::counterexample::{build_counterexample, MAX_LEVELS};
use crate::distributions::DistModel;
use crate::error::{Error, Result};
use crate::montecarlo::{
    estimate_condition_i, estimate_weighted_series, hj_fit, hj_lambda_grid, hj_transfer_check,
    lemma_sp_check, nagaev_sweep, HjTransfer, Oracle, SimConfig,
};
use crate::sequences::{
    check_condition_a_sufficient, recommend_theta, CheckVerdict, GrowthVariant, LogKind, NormingSequence,
    SlowlyVaryingSpec, WeightSequence,
};
use crate::series_lab::{
    eval_condition_ii, eval_condition_iii, eval_cor_sp, eval_sp_weak_bound, ConditionId, ConditionReport,
    EpsVerdict, DEFAULT_EPS_GRID, MAX_HORIZON,
};
use crate::verdict::Verdict;

/// The only config version this build reads.
pub const CONFIG_VERSION: u32 = 1;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "HRLAB_OUT_DIR";

/// Output directory used when neither `--out` nor [`OUT_DIR_ENV`] is set.
pub const DEFAULT_OUT_DIR: &str = "hrlab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Check {
    ConditionA,
    Growth,
    ConditionII,
    ConditionIII,
    CorSp,
    SpWeak,
    Counterexample,
    ConditionI,
    WeightedSeries,
    Nagaev,
    Hj,
    LemmaSp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Stage {
    Sequences,
    Analytic,
    Simulation,
}

impl Check {
    /// Every check, in execution order.
    pub const ALL: [Check; 12] = [
        Check::ConditionA,
        Check::Growth,
        Check::ConditionII,
        Check::ConditionIII,
        Check::CorSp,
        Check::SpWeak,
        Check::Counterexample,
        Check::ConditionI,
        Check::WeightedSeries,
        Check::Nagaev,
        Check::Hj,
        Check::LemmaSp,
    ];

    /// Key used in scenario files.
    pub fn key(self) -> &'static str {
        match self {
            Check::ConditionA => "conditionA",
            Check::Growth => "growth",
            Check::ConditionII => "conditionII",
            Check::ConditionIII => "conditionIII",
            Check::CorSp => "corSp",
            Check::SpWeak => "spWeak",
            Check::Counterexample => "counterexample",
            Check::ConditionI => "conditionI",
            Check::WeightedSeries => "weightedSeries",
            Check::Nagaev => "nagaev",
            Check::Hj => "hj",
            Check::LemmaSp => "lemmaSp",
        }
    }

    /// The single condition a report section speaks to.
    pub fn condition(self) -> &'static str {
        match self {
            Check::ConditionA => "condition-a",
            Check::Growth => "growth",
            Check::ConditionII => "tail-series",
            Check::ConditionIII => "gaussian-series",
            Check::CorSp => "sqrt-n-log-n",
            Check::SpWeak => "sqrt-n-log-n-weak",
            Check::Counterexample => "divergent-construction",
            Check::ConditionI => "median-flags",
            Check::WeightedSeries => "weighted-series",
            Check::Nagaev => "normal-approximation-gap",
            Check::Hj => "hoffmann-jorgensen",
            Check::LemmaSp => "weak-law",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            Check::ConditionA | Check::Growth => Stage::Sequences,
            Check::ConditionII
            | Check::ConditionIII
            | Check::CorSp
            | Check::SpWeak
            | Check::Counterexample => Stage::Analytic,
            Check::ConditionI | Check::WeightedSeries | Check::Nagaev | Check::Hj | Check::LemmaSp => {
                Stage::Simulation
            }
        }
    }

    fn needs_weights(self) -> bool {
        matches!(
            self,
            Check::ConditionA
                | Check::Growth
                | Check::ConditionII
                | Check::ConditionIII
                | Check::ConditionI
                | Check::WeightedSeries
        )
    }

    fn needs_norming(self) -> bool {
        matches!(
            self,
            Check::Growth
                | Check::ConditionII
                | Check::ConditionIII
                | Check::ConditionI
                | Check::WeightedSeries
                | Check::Nagaev
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL.into_iter().find(|c| c.key() == s).ok_or_else(|| {
            let keys: Vec<&str> = Check::ALL.iter().map(|c| c.key()).collect();
            format!("unknown check `{s}`; expected one of {}", keys.join(", "))
        })
    }
}

impl TryFrom<String> for Check {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Check> for String {
    fn from(c: Check) -> String {
        c.key().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DistName {
    Rademacher,
    Gaussian,
    Pareto,
    Atomic,
    PointMass,
    Counterexample,
}

/// Flat description of a law; which fields apply depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DistSpec {
    pub kind: DistName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// `[value, probability]` pairs; each value carries its probability at
    /// both signs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

impl DistSpec {
    pub fn of_kind(kind: DistName) -> Self {
        Self {
            kind,
            sigma: None,
            q: None,
            scale: None,
            atoms: None,
            p0: None,
            value: None,
            levels: None,
            shift: None,
        }
    }

    /// Names the first field that does not belong to `kind`.
    fn stray_field(&self) -> Option<&'static str> {
        let allowed: &[&str] = match self.kind {
            DistName::Rademacher => &[],
            DistName::Gaussian => &["sigma"],
            DistName::Pareto => &["q", "scale"],
            DistName::Atomic => &["atoms", "p0"],
            DistName::PointMass => &["value"],
            DistName::Counterexample => &["levels"],
        };
        let present = [
            ("sigma", self.sigma.is_some()),
            ("q", self.q.is_some()),
            ("scale", self.scale.is_some()),
            ("atoms", self.atoms.is_some()),
            ("p0", self.p0.is_some()),
            ("value", self.value.is_some()),
            ("levels", self.levels.is_some()),
        ];
        present
            .into_iter()
            .find(|(k, on)| *on && !allowed.contains(k))
            .map(|(k, _)| k)
    }

    pub fn build(&self) -> std::result::Result<DistModel, FieldError> {
        let at = |field: &'static str| {
            move |e: Error| FieldError::new(format!("distribution.{field}"), e.to_string())
        };
        if let Some(f) = self.stray_field() {
            return Err(FieldError::new(
                format!("distribution.{f}"),
                "not used by this kind",
            ));
        }
        let need = |field: &'static str, v: Option<f64>| {
            v.ok_or_else(|| FieldError::new(format!("distribution.{field}"), "required for this kind"))
        };
        let base = match self.kind {
            DistName::Rademacher => DistModel::rademacher(),
            DistName::Gaussian => DistModel::gaussian(need("sigma", self.sigma)?).map_err(at("sigma"))?,
            DistName::Pareto => {
                DistModel::pareto(need("q", self.q)?, self.scale.unwrap_or(1.0)).map_err(at("q"))?
            }
            DistName::Atomic => {
                let atoms = self
                    .atoms
                    .clone()
                    .ok_or_else(|| FieldError::new("distribution.atoms", "required for this kind"))?;
                DistModel::atomic(atoms, self.p0.unwrap_or(0.0)).map_err(at("atoms"))?
            }
            DistName::PointMass => DistModel::point_mass(need("value", self.value)?).map_err(at("value"))?,
            DistName::Counterexample => {
                let m = self.levels.unwrap_or(4);
                let ce = build_counterexample(m).map_err(at("levels"))?;
                DistModel::counterexample(Arc::new(ce))
            }
        };
        match self.shift {
            None | Some(0.0) => Ok(base),
            Some(c) => DistModel::shifted(base, c).map_err(at("shift")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SeqForm {
    /// `constant · n^{power} · L(n)^{logPower} · (ln ln(2e+n))^{logLogPower}`.
    PowerLaw,
    /// `ratio^n`; weights only.
    Geometric,
}

/// A weight or norming sequence. `alpha` is the norming exponent and `beta`
/// the weight exponent; `power` is accepted for either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SeqSpec {
    pub form: SeqForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_log_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_kind: Option<LogKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl SeqSpec {
    pub fn power_law(power: f64) -> Self {
        Self {
            form: SeqForm::PowerLaw,
            alpha: None,
            beta: Some(power),
            log_power: None,
            log_log_power: None,
            constant: None,
            log_kind: None,
            start_index: None,
            ratio: None,
        }
    }

    fn slowly_varying(&self) -> SlowlyVaryingSpec {
        SlowlyVaryingSpec {
            log_power: self.log_power.unwrap_or(0.0),
            log_log_power: self.log_log_power.unwrap_or(0.0),
            constant: self.constant.unwrap_or(1.0),
            log_kind: self.log_kind.unwrap_or_default(),
        }
    }

    fn default_start(&self) -> u64 {
        let plain = self.log_kind == Some(LogKind::Plain) && self.log_power.unwrap_or(0.0) != 0.0;
        if plain {
            2
        } else {
            1
        }
    }

    fn exponent(&self, section: &str, preferred: &str) -> std::result::Result<f64, FieldError> {
        match (self.alpha, self.beta) {
            (Some(_), Some(_)) => Err(FieldError::new(
                format!("{section}.{preferred}"),
                "give alpha or beta, not both",
            )),
            (Some(x), None) | (None, Some(x)) => Ok(x),
            (None, None) => Err(FieldError::new(
                format!("{section}.{preferred}"),
                "required for powerLaw",
            )),
        }
    }

    pub fn build_weights(&self) -> std::result::Result<WeightSequence, FieldError> {
        let start = self.start_index.unwrap_or_else(|| self.default_start());
        let at =
            |field: &'static str| move |e: Error| FieldError::new(format!("weights.{field}"), e.to_string());
        match self.form {
            SeqForm::PowerLaw => {
                if self.ratio.is_some() {
                    return Err(FieldError::new(
                        "weights.ratio",
                        "only used by the geometric form",
                    ));
                }
                let beta = self.exponent("weights", "beta")?;
                WeightSequence::power_law(beta, self.slowly_varying(), start).map_err(at("beta"))
            }
            SeqForm::Geometric => {
                let ratio = self
                    .ratio
                    .ok_or_else(|| FieldError::new("weights.ratio", "required for geometric"))?;
                WeightSequence::geometric(ratio, start).map_err(at("ratio"))
            }
        }
    }

    pub fn build_norming(&self) -> std::result::Result<NormingSequence, FieldError> {
        let start = self.start_index.unwrap_or_else(|| self.default_start());
        match self.form {
            SeqForm::PowerLaw => {
                let alpha = self.exponent("norming", "alpha")?;
                NormingSequence::power_law(alpha, self.slowly_varying(), start)
                    .map_err(|e| FieldError::new("norming.alpha", e.to_string()))
            }
            SeqForm::Geometric => Err(FieldError::new(
                "norming.form",
                "norming sequences must be powerLaw",
            )),
        }
    }
}

/// Tuning for individual checks. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Params {
    /// Dyadic levels scanned by the Condition A check.
    pub condition_a_max_level: u32,
    pub growth_variant: GrowthVariant,
    pub growth_n_min: u64,
    pub sp_weak_delta: f64,
    pub nagaev_ns: Vec<u64>,
    pub nagaev_epsilon: f64,
    pub nagaev_gamma: f64,
    pub hj_n: u64,
    pub hj_r: u32,
    pub hj_transfer_ns: Vec<u64>,
    pub hj_slack: f64,
    pub lemma_delta: f64,
    pub lemma_n_grid: Vec<u64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            condition_a_max_level: 20,
            growth_variant: GrowthVariant::Quadratic,
            growth_n_min: 2,
            sp_weak_delta: 1.0,
            nagaev_ns: vec![25, 100, 400, 1600],
            nagaev_epsilon: 1.0,
            nagaev_gamma: 1.0,
            hj_n: 10,
            hj_r: 2,
            hj_transfer_ns: vec![100, 1000],
            hj_slack: 1.5,
            lemma_delta: 1.0,
            lemma_n_grid: vec![100, 1000, 10_000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// The corollary or example the scenario reproduces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub checks: Vec<Check>,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    pub distribution: DistSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<SeqSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norming: Option<SeqSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimConfig>,
    #[serde(default)]
    pub params: Params,
    /// Declared outcomes; a check listed here must reach this verdict.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<Check, CheckVerdict>,
}

fn default_eps_grid() -> Vec<f64> {
    DEFAULT_EPS_GRID.to_vec()
}

fn default_horizon() -> u64 {
    100_000
}

/// A validation failure tied to a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Adds the line of the field's key in `text` when it can be found.
    fn into_error(self, text: Option<&str>) -> Error {
        match text.and_then(|t| locate_field(t, &self.field)) {
            Some(line) => Error::Config(format!("{} (line {line}): {}", self.field, self.message)),
            None => Error::Config(format!("{}: {}", self.field, self.message)),
        }
    }
}

/// 1-based line of `section.key` (or a top-level `key`) in TOML text.
fn locate_field(text: &str, field: &str) -> Option<usize> {
    let (section, key) = match field.rsplit_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, field),
    };
    let mut current: Option<String> = None;
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = Some(h.trim_end_matches(']').trim().to_string());
            if section == current.as_deref() {
                section_line = Some(i + 1);
            }
            continue;
        }
        let Some((k, _)) = line.split_once('=') else {
            continue;
        };
        let k = k.trim();
        let hit = match section {
            None => current.is_none() && k == key,
            Some(s) => (current.as_deref() == Some(s) && k == key) || (current.is_none() && k == field),
        };
        if hit {
            return Some(i + 1);
        }
    }
    section_line
}

impl Scenario {
    /// A bare scenario with the given law and checks, for programmatic use.
    pub fn new(name: impl Into<String>, distribution: DistSpec, checks: Vec<Check>) -> Self {
        Self {
            version: CONFIG_VERSION,
            name: name.into(),
            family: None,
            anchor: None,
            description: None,
            checks,
            eps_grid: default_eps_grid(),
            horizon: default_horizon(),
            distribution,
            weights: None,
            norming: None,
            simulation: None,
            params: Params::default(),
            expect: BTreeMap::new(),
        }
    }

    /// Parses and validates TOML text; errors carry line numbers.
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        s.validate().map_err(|e| e.into_error(Some(text)))?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn checks_in_order(&self) -> Vec<Check> {
        let mut c = self.checks.clone();
        c.sort();
        c.dedup();
        c
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        if self.version != CONFIG_VERSION {
            return Err(FieldError::new(
                "version",
                format!(
                    "unsupported version {}; this build reads version {CONFIG_VERSION}",
                    self.version
                ),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(FieldError::new("name", "must not be empty"));
        }
        if self.checks.is_empty() {
            return Err(FieldError::new("checks", "list at least one check"));
        }
        if self.eps_grid.is_empty() {
            return Err(FieldError::new("epsGrid", "must not be empty"));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(FieldError::new(
                "epsGrid",
                format!("entries must be positive and finite, got {e}"),
            ));
        }
        if !(100..=MAX_HORIZON).contains(&self.horizon) {
            return Err(FieldError::new(
                "horizon",
                format!("must lie in [100, {MAX_HORIZON}]"),
            ));
        }
        self.distribution.build()?;
        let checks = self.checks_in_order();
        if let Some(w) = &self.weights {
            w.build_weights()?;
        } else if let Some(c) = checks.iter().find(|c| c.needs_weights()) {
            return Err(FieldError::new("weights", format!("required by check {c}")));
        }
        if let Some(a) = &self.norming {
            a.build_norming()?;
        } else if let Some(c) = checks.iter().find(|c| c.needs_norming()) {
            return Err(FieldError::new("norming", format!("required by check {c}")));
        }
        if let Some(sim) = &self.simulation {
            sim.validate()
                .map_err(|e| FieldError::new("simulation", e.to_string()))?;
            let series = checks
                .iter()
                .any(|c| matches!(c, Check::ConditionI | Check::WeightedSeries));
            if series && sim.n_grid.is_empty() {
                return Err(FieldError::new(
                    "simulation.nGrid",
                    "required by the simulated series",
                ));
            }
        } else if let Some(c) = checks.iter().find(|c| c.stage() == Stage::Simulation) {
            return Err(FieldError::new("simulation", format!("required by check {c}")));
        }
        if checks.contains(&Check::Counterexample) && self.distribution.kind != DistName::Counterexample {
            return Err(FieldError::new(
                "distribution.kind",
                "the counterexample check needs kind = \"counterexample\"",
            ));
        }
        let p = &self.params;
        if !(p.sp_weak_delta > 0.0 && p.sp_weak_delta.is_finite()) {
            return Err(FieldError::new("params.spWeakDelta", "must be positive"));
        }
        if !(p.lemma_delta > 0.0 && p.lemma_delta.is_finite()) {
            return Err(FieldError::new("params.lemmaDelta", "must be positive"));
        }
        if !(p.nagaev_epsilon > 0.0 && p.nagaev_epsilon.is_finite()) {
            return Err(FieldError::new("params.nagaevEpsilon", "must be positive"));
        }
        if !(p.nagaev_gamma > 0.0 && p.nagaev_gamma <= 1.0) {
            return Err(FieldError::new("params.nagaevGamma", "must lie in (0, 1]"));
        }
        if p.nagaev_ns.is_empty() || p.nagaev_ns.contains(&0) {
            return Err(FieldError::new(
                "params.nagaevNs",
                "must be a non-empty list of positive n",
            ));
        }
        if p.hj_r < 2 {
            return Err(FieldError::new("params.hjR", "must be at least 2"));
        }
        if p.hj_n == 0 || p.hj_transfer_ns.contains(&0) {
            return Err(FieldError::new("params.hjN", "sample sizes must be positive"));
        }
        if !(p.hj_slack >= 1.0) {
            return Err(FieldError::new("params.hjSlack", "must be at least 1"));
        }
        if let Some(c) = self.expect.keys().find(|c| !self.checks.contains(c)) {
            return Err(FieldError::new(
                format!("expect.{c}"),
                "expectation for a check that is not requested",
            ));
        }
        Ok(())
    }
}

/// Outcome of one report section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
    Error,
}

impl From<CheckVerdict> for Status {
    fn from(v: CheckVerdict) -> Self {
        match v {
            CheckVerdict::Holds => Status::Holds,
            CheckVerdict::Fails => Status::Fails,
            CheckVerdict::Inconclusive => Status::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Section {
    pub check: Check,
    pub condition: String,
    pub stage: Stage,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<CheckVerdict>,
    /// Definite, and equal to the expectation when one is declared.
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub timestamps: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryRow {
    pub check: Check,
    pub condition: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<CheckVerdict>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub scenario: Scenario,
    pub provenance: Provenance,
    pub sections: Vec<Section>,
    pub summary: Vec<SummaryRow>,
    pub success: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn section(&self, check: Check) -> Option<&Section> {
        self.sections.iter().find(|s| s.check == check)
    }
}

/// A CSV table for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: &str, header: &[&'static str]) -> Self {
        Self {
            file: file.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: impl IntoIterator<Item = String>) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Everything `run` writes: the report and its tables.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<Table>,
}

impl RunOutput {
    /// Writes `report.json` and one CSV per table into `dir`; returns the
    /// paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let report = dir.join("report.json");
        std::fs::write(&report, self.report.to_json())?;
        out.push(report);
        for t in &self.tables {
            let p = dir.join(&t.file);
            std::fs::write(&p, t.to_csv()?)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Shortest decimal that reads back to the same f64.
fn num(x: f64) -> String {
    x.to_string()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

/// Built objects shared by the checks.
struct Context<'a> {
    scenario: &'a Scenario,
    dist: DistModel,
    tau: Option<WeightSequence>,
    a: Option<NormingSequence>,
}

impl Context<'_> {
    fn tau(&self) -> Result<&WeightSequence> {
        self.tau
            .as_ref()
            .ok_or_else(|| Error::Config("weights are not set".into()))
    }

    fn a(&self) -> Result<&NormingSequence> {
        self.a
            .as_ref()
            .ok_or_else(|| Error::Config("norming is not set".into()))
    }

    fn sim(&self) -> Result<&SimConfig> {
        self.scenario
            .simulation
            .as_ref()
            .ok_or_else(|| Error::Config("simulation is not set".into()))
    }
}

struct Outcome {
    status: CheckVerdict,
    result: Value,
}

fn series_reports(
    ctx: &Context,
    id: ConditionId,
    eval: impl Fn(f64) -> Result<crate::verdict::SeriesVerdict>,
) -> Result<Outcome> {
    let per_eps = ctx
        .scenario
        .eps_grid
        .iter()
        .map(|&e| {
            Ok(EpsVerdict {
                epsilon: e,
                verdict: eval(e)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = ConditionReport::from_series(
        id,
        per_eps,
        Some("verdicts cover the listed epsilon values only".into()),
    );
    Ok(Outcome {
        status: report.status,
        result: to_value(&report),
    })
}

fn worst(statuses: &[CheckVerdict]) -> CheckVerdict {
    if statuses.contains(&CheckVerdict::Fails) {
        CheckVerdict::Fails
    } else if statuses.iter().all(|s| *s == CheckVerdict::Holds) {
        CheckVerdict::Holds
    } else {
        CheckVerdict::Inconclusive
    }
}

fn run_check(ctx: &Context, check: Check, tables: &mut Vec<Table>) -> Result<Outcome> {
    let s = ctx.scenario;
    let p = &s.params;
    match check {
        Check::ConditionA => {
            let r = check_condition_a_sufficient(ctx.tau()?, p.condition_a_max_level);
            let status = if r.is_established() {
                CheckVerdict::Holds
            } else {
                CheckVerdict::Inconclusive
            };
            Ok(Outcome {
                status,
                result: to_value(&r),
            })
        }
        Check::Growth => {
            let r = recommend_theta(ctx.tau()?, ctx.a()?, p.growth_variant, p.growth_n_min, s.horizon)?;
            let status = if r.theta.is_some() {
                CheckVerdict::Holds
            } else {
                CheckVerdict::Inconclusive
            };
            Ok(Outcome {
                status,
                result: to_value(&r),
            })
        }
        Check::ConditionII => {
            let (tau, a) = (ctx.tau()?, ctx.a()?);
            series_reports(ctx, ConditionId::II, |e| {
                eval_condition_ii(&ctx.dist, tau, a, e, s.horizon)
            })
        }
        Check::ConditionIII => {
            let (tau, a) = (ctx.tau()?, ctx.a()?);
            series_reports(ctx, ConditionId::III, |e| {
                eval_condition_iii(&ctx.dist, tau, a, e, s.horizon)
            })
        }
        Check::CorSp => {
            let r = eval_cor_sp(&ctx.dist, &s.eps_grid, s.horizon)?;
            Ok(Outcome {
                status: worst(&[r.mean.status, r.moment.status, r.series.status]),
                result: to_value(&r),
            })
        }
        Check::SpWeak => {
            let r = eval_sp_weak_bound(&ctx.dist, p.sp_weak_delta, s.horizon)?;
            let status = match r.verdict.verdict {
                Verdict::Converges => CheckVerdict::Holds,
                Verdict::Diverges => CheckVerdict::Fails,
                Verdict::Inconclusive => CheckVerdict::Inconclusive,
            };
            Ok(Outcome {
                status,
                result: to_value(&r),
            })
        }
        Check::Counterexample => {
            let ce = build_counterexample(s.distribution.levels.unwrap_or(4))?;
            let replay = ce.replay();
            let cert = ce.divergence_certificate()?;
            let mut t = Table::new("counterexample.csv", &["m", "logK", "blockLowerBound"]);
            for b in &cert.levels {
                t.push([b.m.to_string(), num(b.log_k), num(b.block_lower_bound)]);
            }
            tables.push(t);
            let all_replay = replay.iter().all(|&x| x);
            let blocks_ok = cert.levels.iter().all(|b| b.block_lower_bound >= 0.5);
            let status = if all_replay && blocks_ok {
                CheckVerdict::Holds
            } else {
                CheckVerdict::Fails
            };
            Ok(Outcome {
                status,
                result: json!({
                    "levels": ce.level_count(),
                    "massAtZero": ce.mass_at_zero(),
                    "replay": replay,
                    "certificate": cert,
                }),
            })
        }
        Check::ConditionI => {
            let r = estimate_condition_i(&ctx.dist, ctx.tau()?, ctx.a()?, &s.eps_grid, ctx.sim()?)?;
            Ok(Outcome {
                status: r.report.status,
                result: to_value(&r),
            })
        }
        Check::WeightedSeries => {
            let sim = ctx.sim()?;
            let eps = if sim.eps_grid.is_empty() {
                &s.eps_grid
            } else {
                &sim.eps_grid
            };
            let mut t = Table::new(
                "weighted_series.csv",
                &["n", "epsilon", "term", "partialSum", "stderr"],
            );
            let mut runs = Vec::new();
            for &e in eps {
                let r = estimate_weighted_series(&ctx.dist, ctx.tau()?, ctx.a()?, e, sim)?;
                for pt in &r.points {
                    t.push([
                        pt.n.to_string(),
                        num(e),
                        num(pt.term),
                        num(pt.partial_sum),
                        num(pt.partial_std_err),
                    ]);
                }
                runs.push(r);
            }
            tables.push(t);
            Ok(Outcome {
                status: CheckVerdict::Inconclusive,
                result: json!({
                    "series": runs,
                    "note": "a finite grid estimates partial sums only; convergence is not decided by simulation",
                }),
            })
        }
        Check::Nagaev => {
            let r = nagaev_sweep(
                &ctx.dist,
                ctx.a()?,
                &p.nagaev_ns,
                p.nagaev_epsilon,
                p.nagaev_gamma,
                ctx.sim()?,
            )?;
            let mut t = Table::new("nagaev.csv", &["n", "threshold", "gap", "bound", "stderr"]);
            for c in &r.checks {
                t.push([
                    c.n.to_string(),
                    num(c.threshold),
                    num(c.gap),
                    num(c.bound),
                    num(c.std_err),
                ]);
            }
            tables.push(t);
            Ok(Outcome {
                status: if r.all_pass {
                    CheckVerdict::Holds
                } else {
                    CheckVerdict::Fails
                },
                result: to_value(&r),
            })
        }
        Check::Hj => {
            let sim = ctx.sim()?;
            let fit = hj_fit(&ctx.dist, p.hj_n, p.hj_r, &hj_lambda_grid(&ctx.dist, p.hj_n), sim)?;
            let transfers = p
                .hj_transfer_ns
                .iter()
                .map(|&n| {
                    hj_transfer_check(
                        &fit,
                        &ctx.dist,
                        n,
                        &hj_lambda_grid(&ctx.dist, n),
                        sim,
                        Oracle::MonteCarlo,
                        p.hj_slack,
                    )
                })
                .collect::<Result<Vec<HjTransfer>>>()?;
            let mut t = Table::new(
                "hj.csv",
                &["n", "lambda", "lhs", "stderr", "tailTerm", "powerTerm"],
            );
            for (n, rows) in
                std::iter::once((fit.n, &fit.rows)).chain(transfers.iter().map(|x| (x.n, &x.rows)))
            {
                for r in rows {
                    t.push([
                        n.to_string(),
                        num(r.lambda),
                        num(r.lhs),
                        num(r.lhs_std_err),
                        num(r.tail_term),
                        num(r.power_term),
                    ]);
                }
            }
            tables.push(t);
            let pass = transfers.iter().all(|x| x.pass);
            Ok(Outcome {
                status: if pass {
                    CheckVerdict::Holds
                } else {
                    CheckVerdict::Fails
                },
                result: json!({ "fit": fit, "transfers": transfers }),
            })
        }
        Check::LemmaSp => {
            let r = lemma_sp_check(&ctx.dist, &p.lemma_n_grid, p.lemma_delta, ctx.sim()?)?;
            let mut t = Table::new("lemma_sp.csv", &["n", "threshold", "pHat", "stderr"]);
            for e in &r.empirical {
                t.push([e.n.to_string(), num(e.threshold), num(e.p_hat), num(e.std_err)]);
            }
            tables.push(t);
            Ok(Outcome {
                status: worst(&[r.show1.status, r.show2_status, r.show3_status]),
                result: to_value(&r),
            })
        }
    }
}

/// Runs the scenario's checks whose stage is in `stages` (all when empty).
/// A failing check is recorded in its section and the rest still run.
pub fn run_scenario(s: &Scenario, stages: &[Stage]) -> Result<RunOutput> {
    s.validate().map_err(|e| e.into_error(None))?;
    let dist = s.distribution.build().map_err(|e| e.into_error(None))?;
    let tau = s
        .weights
        .as_ref()
        .map(SeqSpec::build_weights)
        .transpose()
        .map_err(|e| e.into_error(None))?;
    let a = s
        .norming
        .as_ref()
        .map(SeqSpec::build_norming)
        .transpose()
        .map_err(|e| e.into_error(None))?;
    let ctx = Context {
        scenario: s,
        dist,
        tau,
        a,
    };
    let mut tables = Vec::new();
    let mut sections = Vec::new();
    for check in s.checks_in_order() {
        if !stages.is_empty() && !stages.contains(&check.stage()) {
            continue;
        }
        let expected = s.expect.get(&check).copied();
        let (status, result, error) = match run_check(&ctx, check, &mut tables) {
            Ok(o) => (Status::from(o.status), Some(o.result), None),
            Err(e) => (Status::Error, None, Some(e.to_string())),
        };
        let ok = match expected {
            Some(v) => status == Status::from(v),
            None => matches!(status, Status::Holds | Status::Fails),
        };
        sections.push(Section {
            check,
            condition: check.condition().into(),
            stage: check.stage(),
            status,
            expected,
            ok,
            result,
            error,
        });
    }
    let summary = sections
        .iter()
        .map(|x| SummaryRow {
            check: x.check,
            condition: x.condition.clone(),
            status: x.status,
            expected: x.expected,
            ok: x.ok,
        })
        .collect();
    let report = Report {
        scenario: s.clone(),
        provenance: Provenance {
            tool: "hrlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_version: CONFIG_VERSION,
            seed: s.simulation.as_ref().map(|c| c.seed),
            timestamps: "omitted so that reruns are byte-identical".into(),
        },
        success: sections.iter().all(|x| x.ok),
        sections,
        summary,
    };
    Ok(RunOutput { report, tables })
}

const BUNDLED: [(&str, &str); 9] = [
    (
        "baum-katz-rademacher",
        include_str!("../scenarios/baum-katz-rademacher.toml"),
    ),
    (
        "baum-katz-pareto",
        include_str!("../scenarios/baum-katz-pareto.toml"),
    ),
    (
        "baum-katz-gaussian",
        include_str!("../scenarios/baum-katz-gaussian.toml"),
    ),
    ("sp-rademacher", include_str!("../scenarios/sp-rademacher.toml")),
    ("sp-gaussian", include_str!("../scenarios/sp-gaussian.toml")),
    (
        "ms-counterexample",
        include_str!("../scenarios/ms-counterexample.toml"),
    ),
    ("nagaev-sweep", include_str!("../scenarios/nagaev-sweep.toml")),
    ("hj-sweep", include_str!("../scenarios/hj-sweep.toml")),
    ("lemma-sp-decay", include_str!("../scenarios/lemma-sp-decay.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CatalogEntry {
    pub name: String,
    pub family: String,
    pub anchor: String,
    pub description: String,
    pub checks: Vec<Check>,
}

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// TOML text of a bundled scenario.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn bundled_scenario(name: &str) -> Result<Scenario> {
    let text = bundled_source(name).ok_or_else(|| {
        Error::Config(format!(
            "no bundled scenario `{name}`; available: {}",
            bundled_names().join(", ")
        ))
    })?;
    Scenario::from_toml(text)
}

pub fn list_scenarios() -> Vec<CatalogEntry> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let s = Scenario::from_toml(text).expect("bundled scenarios parse");
            CatalogEntry {
                name: (*name).into(),
                family: s.family.unwrap_or_default(),
                anchor: s.anchor.unwrap_or_default(),
                description: s.description.unwrap_or_default(),
                checks: s.checks,
            }
        })
        .collect()
}

/// A path to a TOML file, or the name of a bundled scenario.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Scenario::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        });
    }
    bundled_scenario(spec)
}

/// Applies command-line overrides and re-validates.
pub fn apply_overrides(
    s: &mut Scenario,
    seed: Option<u64>,
    levels: Option<u32>,
    horizon: Option<u64>,
) -> Result<()> {
    if let Some(seed) = seed {
        match s.simulation.as_mut() {
            Some(sim) => sim.seed = seed,
            None if s.checks.iter().any(|c| c.stage() == Stage::Simulation) => {
                return Err(Error::Config(
                    "--seed given but the scenario has no simulation table".into(),
                ))
            }
            None => {}
        }
    }
    if let Some(m) = levels {
        if s.distribution.kind != DistName::Counterexample {
            return Err(Error::Config(
                "--levels applies to counterexample scenarios only".into(),
            ));
        }
        if !(1..=MAX_LEVELS).contains(&m) {
            return Err(Error::Config(format!("--levels must lie in 1..={MAX_LEVELS}")));
        }
        s.distribution.levels = Some(m);
    }
    if let Some(h) = horizon {
        s.horizon = h;
    }
    s.validate().map_err(|e| e.into_error(None))
}

/// Output directory: the flag, else [`OUT_DIR_ENV`], else [`DEFAULT_OUT_DIR`].
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// The √(n log n) pair as sequence specs.
pub fn sp_specs() -> (SeqSpec, SeqSpec) {
    let mut w = SeqSpec::power_law(-1.0);
    w.start_index = Some(2);
    let mut a = SeqSpec::power_law(0.5);
    a.beta = None;
    a.alpha = Some(0.5);
    a.log_power = Some(0.5);
    a.log_kind = Some(LogKind::Plain);
    a.start_index = Some(2);
    (w, a)
}
