//! The Montgomery-Smith distribution: symmetric atoms at ±ψ(K_m) with
//! probability 2^{-m-1}/K_m each, where ψ(t) = (t ln t)^{1/2}. It has a
//! finite φ-moment (so E[X²/ln(2+|X|)] < ∞) yet Σ n^{-1-1/T_{1,n}} = ∞.
//!
//! K_m = e^{λ_m} overflows f64 from m = 2 on, so everything is kept in the
//! log domain and K_m is never formed.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
pub use crate::numerics::LogNumber;
use crate::numerics::{bisect, log_add_exp};

/// Largest level index `solve_level` accepts; λ_9 ≈ 1024·e^512 is the last
/// one representable as an f64.
pub const MAX_SOLVABLE_LEVEL: u32 = 9;
/// Largest number of levels `build_counterexample` accepts.
pub const MAX_LEVELS: u32 = 8;
/// Factor applied to each solved λ_m.
pub const SAFETY_MARGIN: f64 = 1.01;

/// ψ(t) = (t ln t)^{1/2} for t ≥ 2, linear on [0, 2] with ψ(0) = 0.
pub fn psi(t: f64) -> f64 {
    assert!(t >= 0.0);
    let psi2 = (2.0 * LN_2).sqrt();
    if t <= 2.0 {
        t * psi2 / 2.0
    } else {
        (t * t.ln()).sqrt()
    }
}

/// Inverse of [`psi`].
pub fn phi(y: f64) -> f64 {
    assert!(y >= 0.0);
    let psi2 = (2.0 * LN_2).sqrt();
    if y <= psi2 {
        return 2.0 * y / psi2;
    }
    // t ln t = y², solved by Newton from above.
    let target = y * y;
    let mut t = (target / target.ln().max(1.0)).max(2.0) * 2.0;
    for _ in 0..100 {
        let f = t * t.ln() - target;
        let next = t - f / (t.ln() + 1.0);
        if (next - t).abs() <= 1e-15 * t {
            return next;
        }
        t = next.max(2.0);
    }
    t
}

/// ρ(λ) = 1 + e^{-λ}, an upper bound on ln(K+1)/ln K for λ = ln K ≥ 1.
pub fn rho_upper(lambda: f64) -> f64 {
    1.0 + (-lambda).exp()
}

/// `ln` of the left side of the inductive inequality
/// `2^{-m-1} λ exp(-2^m ρ(λ)) ≥ 1`.
pub fn ln_inductive_margin(m: u32, lambda: f64) -> f64 {
    lambda.ln() - 2f64.powi(m as i32) * rho_upper(lambda) - (m as f64 + 1.0) * LN_2
}

/// Certified upper bound on ln L(K, m), K = e^λ: any integer L ≥ e^{result}
/// makes `Σ_{n=K+1}^{L} n^{-1-s} ≥ ½ Σ_{n>K} n^{-1-s}` with `s = 2^m/λ`.
///
/// The tail beyond L is at most L^{-s}/s and the full tail at least
/// (K+1)^{-s}/s, so ln L ≥ ln(K+1) + (ln 2)/s suffices; the last term covers
/// rounding L up to an integer.
pub fn log_l_bound(lambda: f64, m: u32) -> Result<f64> {
    if !(lambda >= LN_2) {
        return input(format!("lambda = {lambda} is below ln 2 (K < 2)"));
    }
    let s = 2f64.powi(m as i32) / lambda;
    if !(s > 0.0 && s.is_finite()) {
        return input(format!("exponent s = {s} must be positive and finite"));
    }
    let v = lambda + (-lambda).exp().ln_1p() + LN_2 / s;
    Ok(v + (-v).exp().ln_1p())
}

/// Smallest λ_m satisfying the inductive inequality, times the 1% margin,
/// and also at least ln L(K_{m-1}, m-1) and above `lambda_prev`.
/// `lambda_prev = -inf` stands for K_0 = 0.
pub fn solve_level(m: u32, lambda_prev: f64) -> Result<f64> {
    if m == 0 || m > MAX_SOLVABLE_LEVEL {
        return input(format!("level m = {m} outside 1..={MAX_SOLVABLE_LEVEL}"));
    }
    let pm = 2f64.powi(m as i32);
    // Solve in u = ln λ; the root sits just above 2^m + (m+1) ln 2.
    let g = |u: f64| u - pm * rho_upper(u.exp()) - (m as f64 + 1.0) * LN_2;
    let hi = pm + (m as f64 + 1.0) * LN_2 + 2.0;
    let u = bisect(g, 0.0, hi, 1e-15)?;
    let mut lambda = u.exp() * SAFETY_MARGIN;
    if m >= 2 && lambda_prev.is_finite() {
        lambda = lambda.max(log_l_bound(lambda_prev, m - 1)?);
    }
    if lambda_prev.is_finite() && lambda <= lambda_prev {
        lambda = lambda_prev * SAFETY_MARGIN;
    }
    if !lambda.is_finite() || ln_inductive_margin(m, lambda) < 0.0 {
        return Err(Error::Numeric {
            what: format!("level {m} failed its inductive inequality after solving"),
            residual: ln_inductive_margin(m, lambda),
        });
    }
    Ok(lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Level {
    pub m: u32,
    /// λ_m = ln K_m.
    pub log_k: f64,
    /// ψ(K_m) = (K_m λ_m)^{1/2}.
    pub atom: LogNumber,
    /// 2^{-m-1}/K_m, the mass of each of ±ψ(K_m).
    pub prob: LogNumber,
}

impl Level {
    fn new(m: u32, log_k: f64) -> Self {
        Self {
            m,
            log_k,
            atom: LogNumber::from_ln(0.5 * (log_k + log_k.ln())),
            prob: LogNumber::from_ln(-(m as f64 + 1.0) * LN_2 - log_k),
        }
    }
}

/// The distribution truncated to M levels, with the leftover mass at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CounterexampleDist {
    levels: Vec<Level>,
    /// λ_{M+1}, the right end of block M.
    next_log_k: f64,
    p0: f64,
}

pub fn build_counterexample(levels: u32) -> Result<CounterexampleDist> {
    if !(1..=MAX_LEVELS).contains(&levels) {
        return input(format!("levels M = {levels} outside 1..={MAX_LEVELS}"));
    }
    let mut out = Vec::with_capacity(levels as usize);
    let mut prev = f64::NEG_INFINITY;
    for m in 1..=levels {
        let lam = solve_level(m, prev)?;
        out.push(Level::new(m, lam));
        prev = lam;
    }
    let next_log_k = solve_level(levels + 1, prev)?;
    let atom_mass = out
        .iter()
        .map(|l| l.prob.ln() + LN_2)
        .fold(f64::NEG_INFINITY, log_add_exp);
    Ok(CounterexampleDist {
        levels: out,
        next_log_k,
        p0: -atom_mass.exp_m1(),
    })
}

impl CounterexampleDist {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level_count(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn mass_at_zero(&self) -> f64 {
        self.p0
    }

    /// `ln` of the total probability on the non-zero atoms.
    pub fn ln_atom_mass(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.prob.ln() + LN_2)
            .fold(f64::NEG_INFINITY, log_add_exp)
    }

    /// Re-checks both inductive inequalities for every level.
    pub fn replay(&self) -> Vec<bool> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let own = ln_inductive_margin(l.m, l.log_k) >= 0.0;
                let chain = if i == 0 {
                    true
                } else {
                    let prev = self.levels[i - 1].log_k;
                    l.log_k > prev && log_l_bound(prev, l.m - 1).is_ok_and(|b| l.log_k >= b)
                };
                own && chain
            })
            .collect()
    }

    /// `Σ_{m≤M} 2^{-m} K_m^{-1} φ(ψ(K_m)) = 1 - 2^{-M}`; φ∘ψ is the identity
    /// so nothing is evaluated at K_m.
    pub fn phi_moment_truncated(&self) -> f64 {
        1.0 - 0.5f64.powi(self.levels.len() as i32)
    }

    /// `(Σ_{j≤m} 2^{-j} λ_j, 2^{-m} λ_m)`: T_{1,n} for K_m < n ≤ K_{m+1}
    /// and its single-term lower bound.
    pub fn t1n_lower_bound(&self, m: u32) -> Result<(f64, f64)> {
        if m == 0 || m > self.level_count() {
            return input(format!("level {m} outside 1..={}", self.level_count()));
        }
        let exact = self.levels[..m as usize]
            .iter()
            .map(|l| 0.5f64.powi(l.m as i32) * l.log_k)
            .sum();
        let l = &self.levels[m as usize - 1];
        Ok((exact, 0.5f64.powi(m as i32) * l.log_k))
    }

    /// Lower bounds for the blocks `Σ_{K_m<n≤K_{m+1}} n^{-1-1/T_{1,n}}`.
    ///
    /// On a block T_{1,n} ≥ 2^{-m} λ_m, so terms are ≥ n^{-1-s} with
    /// s = 2^m/λ_m; the block holds at least half the tail beyond K_m, and
    /// that tail is ≥ (K_m+1)^{-s}/s. Each bound is therefore
    /// `2^{-m-1} λ_m exp(-2^m ln(K_m+1)/λ_m)`, which the level choice keeps
    /// at or above 1.
    pub fn divergence_certificate(&self) -> Result<DivergenceCertificate> {
        if self.level_count() < 2 {
            return input("the divergence certificate needs M >= 2 levels");
        }
        let mut blocks = Vec::new();
        let mut cumulative = 0.0;
        for (i, l) in self.levels.iter().enumerate() {
            let next = self.levels.get(i + 1).map_or(self.next_log_k, |n| n.log_k);
            let lam = l.log_k;
            let ln_k1 = lam + (-lam).exp().ln_1p();
            let pm = 2f64.powi(l.m as i32);
            let ln_block = -(l.m as f64 + 1.0) * LN_2 + lam.ln() - pm * ln_k1 / lam;
            let bound = ln_block.exp();
            cumulative += bound;
            blocks.push(BlockBound {
                m: l.m,
                log_k: lam,
                next_log_k: next,
                block_lower_bound: bound,
                t1n_lower: 0.5f64.powi(l.m as i32) * lam,
            });
        }
        Ok(DivergenceCertificate {
            levels: blocks,
            cumulative,
            phi_moment_truncated: self.phi_moment_truncated(),
            note: "block bounds hold for every distribution sharing these first M levels, \
                   including the untruncated construction"
                .into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockBound {
    pub m: u32,
    pub log_k: f64,
    pub next_log_k: f64,
    pub block_lower_bound: f64,
    pub t1n_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DivergenceCertificate {
    pub levels: Vec<BlockBound>,
    pub cumulative: f64,
    pub phi_moment_truncated: f64,
    pub note: String,
}
