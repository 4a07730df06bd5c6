//! Three-valued series verdicts and the generic term-oracle classifier.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::numerics::{log_spaced, ls_slope, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Certificate for divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum LowerBound {
    /// Terms are at least `constant · n^{-exponent}` from `from` on, with
    /// `exponent <= 1`; `to` is the last index actually inspected.
    #[serde(rename_all = "camelCase")]
    Terms {
        exponent: f64,
        constant: f64,
        from: u64,
        to: u64,
        description: String,
    },
    /// Infinitely many disjoint blocks each sum to at least `min_block`;
    /// `count` of them are certified explicitly.
    #[serde(rename_all = "camelCase")]
    Blocks {
        count: usize,
        min_block: f64,
        cumulative: f64,
        description: String,
    },
}

impl LowerBound {
    /// Lower bound on a single term (rate form) or a single block.
    pub fn constant(&self) -> f64 {
        match self {
            LowerBound::Terms { constant, .. } => *constant,
            LowerBound::Blocks { min_block, .. } => *min_block,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.constant() > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesVerdict {
    pub verdict: Verdict,
    pub partial_sum: f64,
    /// Bound on the sum beyond `horizon`; present iff `Converges`.
    pub tail_bound: Option<f64>,
    pub lower_bound: Option<LowerBound>,
    pub horizon: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SeriesVerdict {
    pub fn converges(partial_sum: f64, tail_bound: f64, horizon: u64) -> Self {
        Self {
            verdict: Verdict::Converges,
            partial_sum,
            tail_bound: Some(tail_bound),
            lower_bound: None,
            horizon,
            note: None,
        }
    }

    pub fn diverges(partial_sum: f64, lower_bound: LowerBound, horizon: u64) -> Self {
        Self {
            verdict: Verdict::Diverges,
            partial_sum,
            tail_bound: None,
            lower_bound: Some(lower_bound),
            horizon,
            note: None,
        }
    }

    pub fn inconclusive(partial_sum: f64, horizon: u64, note: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Inconclusive,
            partial_sum,
            tail_bound: None,
            lower_bound: None,
            horizon,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// `partial_sum + tail_bound` when converging.
    pub fn upper_bound(&self) -> Option<f64> {
        self.tail_bound.map(|t| self.partial_sum + t)
    }
}

/// Required margin below −1 for the fitted decay exponent.
pub const SLOPE_MARGIN: f64 = 0.2;
/// Points in the final-decade fit.
pub const FIT_POINTS: usize = 50;

/// Classifies `Σ_{n≥start} t_n` from a linear-domain oracle.
pub fn classify_series(term: impl Fn(u64) -> f64, start: u64, horizon: u64) -> Result<SeriesVerdict> {
    for n in fit_points(start, horizon)? {
        let t = term(n);
        if !(t >= 0.0) {
            return input(format!("term at n = {n} is {t}, not non-negative"));
        }
    }
    classify_series_ln(
        |n| {
            let t = term(n);
            if t < 0.0 {
                f64::NAN
            } else {
                t.ln()
            }
        },
        start,
        horizon,
    )
}

fn fit_points(start: u64, horizon: u64) -> Result<Vec<u64>> {
    if horizon < 100 || horizon < 10 * start.max(1) {
        return input(format!(
            "horizon {horizon} must be >= 100 and >= 10 x start {start}"
        ));
    }
    Ok(log_spaced(horizon / 10, horizon, FIT_POINTS))
}

/// Classifies `Σ_{n≥start} t_n` given `ln t_n` (`-inf` for a zero term).
///
/// Converges when the final decade decays faster than `n^{-1-0.2}` at every
/// local step; the tail is then bounded by `t_H H/(p-1)` with `p` the
/// shallowest local exponent. Diverges when `n t_n` does not drop more than
/// 1% anywhere across the final decade, giving terms `>= c/n`.
pub fn classify_series_ln(ln_term: impl Fn(u64) -> f64, start: u64, horizon: u64) -> Result<SeriesVerdict> {
    let pts = fit_points(start, horizon)?;
    let mut partial = NeumaierSum::new();
    for n in start.max(1)..=horizon {
        let l = ln_term(n);
        if l.is_nan() {
            return input(format!("term at n = {n} is negative or undefined"));
        }
        partial.add(l.exp());
    }
    let partial = partial.value();
    let xs: Vec<f64> = pts.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&n| ln_term(n)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Ok(SeriesVerdict::inconclusive(
            partial,
            horizon,
            "zero terms in the final decade",
        ));
    }

    let slope = ls_slope(&xs, &ys).unwrap_or(f64::NAN);
    if slope < -1.0 - SLOPE_MARGIN {
        let shallowest = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        let p = -shallowest;
        if p > 1.0 {
            let h = horizon as f64;
            let tail = (ln_term(horizon) + h.ln()).exp() / (p - 1.0);
            return Ok(SeriesVerdict::converges(partial, tail, horizon));
        }
        return Ok(SeriesVerdict::inconclusive(
            partial,
            horizon,
            "decay is not uniform across the final decade",
        ));
    }

    let nt: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x + y).collect();
    let mut running = f64::NEG_INFINITY;
    let mut monotone = true;
    for &v in &nt {
        running = running.max(v);
        if v < running - 1.01f64.ln() {
            monotone = false;
            break;
        }
    }
    if monotone {
        let c = nt.iter().copied().fold(f64::INFINITY, f64::min).exp();
        let lb = LowerBound::Terms {
            exponent: 1.0,
            constant: c,
            from: pts[0],
            to: horizon,
            description: format!("n*t_n >= {c:.6e} across the final decade"),
        };
        return Ok(SeriesVerdict::diverges(partial, lb, horizon));
    }
    Ok(SeriesVerdict::inconclusive(
        partial,
        horizon,
        format!("final-decade slope {slope:.4} is too close to -1"),
    ))
}
