//! Distribution models for a single summand X: tails, truncated moments,
//! the log-type moments E[X²/ln(2+|X|)] and its log-log strengthening,
//! weak mean domination, and seeded sampling of partial sums.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::counterexample::CounterexampleDist;
use crate::error::{input, Error, Result};
use crate::numerics::normal::normal_pdf;
use crate::numerics::{integrate, log_add_exp, normal_sf, NeumaierSum};

/// Whether a truncation `X·1{|X| < b}` keeps an atom sitting exactly at b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Inclusion {
    /// `|X| < b`, the default everywhere.
    #[default]
    Strict,
    /// `|X| ≤ b`.
    Closed,
}

impl Inclusion {
    fn keeps(self, x: f64, b: f64) -> bool {
        match self {
            Inclusion::Strict => x < b,
            Inclusion::Closed => x <= b,
        }
    }
}

#[derive(Debug, Clone)]
pub enum DistKind {
    Rademacher,
    Gaussian {
        sigma: f64,
    },
    /// `P(|X| ≥ λ) = min(1, (s/λ)^q)` with a random sign.
    SymmetricPareto {
        q: f64,
        scale: f64,
    },
    /// Atoms `±v_i` with mass `p_i` each, plus `p0` at 0.
    AtomicSymmetric {
        atoms: Vec<(f64, f64)>,
        p0: f64,
    },
    Counterexample(Arc<CounterexampleDist>),
    /// `Y + shift` for a symmetric base `Y`.
    Shifted {
        base: Box<DistModel>,
        shift: f64,
    },
}

/// An immutable law for X.
#[derive(Debug, Clone)]
pub struct DistModel {
    kind: DistKind,
}

/// Anything that can report `P(|X| ≥ λ)`.
pub trait TailProbability {
    fn tail(&self, lambda: f64) -> Result<f64>;
}

impl TailProbability for DistModel {
    fn tail(&self, lambda: f64) -> Result<f64> {
        DistModel::tail(self, lambda)
    }
}

const GAUSS_CUTOFF: f64 = 40.0;

/// `E|Z|^q` for a standard normal Z.
pub fn gaussian_abs_moment(q: f64) -> f64 {
    (q / 2.0 * LN_2 + libm::lgamma((q + 1.0) / 2.0) - 0.5 * PI.ln()).exp()
}

/// `E[Z² 1{|Z| < z}]`.
fn gaussian_trunc_second(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    libm::erf(z / SQRT_2) - 2.0 * z * normal_pdf(z)
}

/// `E[|Z|³ 1{|Z| < z}]`.
fn gaussian_trunc_third(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    2.0 / (2.0 * PI).sqrt() * (2.0 - (z * z + 2.0) * (-0.5 * z * z).exp())
}

/// A finite moment with its error, or a certified divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum MomentValue {
    #[serde(rename_all = "camelCase")]
    Finite { value: f64, abs_error: f64 },
    /// Truncated values `E[g(|X|) 1{|X| < T}]` at increasing T.
    #[serde(rename_all = "camelCase")]
    Divergent { certificate: Vec<(f64, f64)> },
}

impl MomentValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            MomentValue::Finite { value, .. } => Some(*value),
            MomentValue::Divergent { .. } => None,
        }
    }
}

/// Truncation levels reported for a divergent moment.
pub const DIVERGENCE_PROBES: [f64; 3] = [1e3, 1e6, 1e9];

/// Outcome of the weak mean domination check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "camelCase")]
pub enum Domination {
    Dominated,
    #[serde(rename_all = "camelCase")]
    Violated {
        lambda: f64,
        row_average: f64,
        bound: f64,
    },
}

impl DistModel {
    pub fn rademacher() -> Self {
        Self {
            kind: DistKind::Rademacher,
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return input(format!("sigma must be positive, got {sigma}"));
        }
        Ok(Self {
            kind: DistKind::Gaussian { sigma },
        })
    }

    pub fn pareto(q: f64, scale: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return input(format!("tail exponent q must be positive, got {q}"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return input(format!("scale must be positive, got {scale}"));
        }
        Ok(Self {
            kind: DistKind::SymmetricPareto { q, scale },
        })
    }

    /// `atoms` are `(v_i, p_i)` with `v_i > 0`; `P(X = ±v_i) = p_i`.
    pub fn atomic(atoms: Vec<(f64, f64)>, p0: f64) -> Result<Self> {
        if atoms.is_empty() {
            return input("atomic distribution needs at least one atom");
        }
        for &(v, p) in &atoms {
            if !(v > 0.0 && v.is_finite()) || !(p >= 0.0) {
                return input(format!("atom ({v}, {p}) needs v > 0 and p >= 0"));
            }
        }
        let total = 2.0 * atoms.iter().map(|a| a.1).sum::<f64>() + p0;
        if !(p0 >= 0.0) || (total - 1.0).abs() > 1e-12 {
            return input(format!("atom masses sum to {total}, not 1"));
        }
        Ok(Self {
            kind: DistKind::AtomicSymmetric { atoms, p0 },
        })
    }

    /// `X ≡ c`.
    pub fn point_mass(c: f64) -> Result<Self> {
        let zero = Self {
            kind: DistKind::AtomicSymmetric {
                atoms: Vec::new(),
                p0: 1.0,
            },
        };
        Self::shifted(zero, c)
    }

    pub fn counterexample(ce: Arc<CounterexampleDist>) -> Self {
        Self {
            kind: DistKind::Counterexample(ce),
        }
    }

    pub fn shifted(base: DistModel, shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return input("shift must be finite");
        }
        if matches!(base.kind, DistKind::Shifted { .. } | DistKind::Counterexample(_)) {
            return input("shift base must be a plain symmetric law");
        }
        Ok(Self {
            kind: DistKind::Shifted {
                base: Box::new(base),
                shift,
            },
        })
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(&self.kind, DistKind::Shifted { shift, .. } if *shift != 0.0)
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            DistKind::Shifted { shift, .. } => *shift,
            _ => 0.0,
        }
    }

    /// Atoms of |X| as `(value, probability)` for purely atomic laws.
    fn abs_atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            DistKind::Rademacher => Some(vec![(1.0, 1.0)]),
            DistKind::AtomicSymmetric { atoms, p0 } => {
                let mut v: Vec<(f64, f64)> = atoms.iter().map(|&(x, p)| (x, 2.0 * p)).collect();
                v.push((0.0, *p0));
                Some(v)
            }
            DistKind::Shifted { base, shift } => {
                let pts = base.signed_atoms()?;
                Some(pts.into_iter().map(|(x, p)| ((x + shift).abs(), p)).collect())
            }
            _ => None,
        }
    }

    /// Signed atoms of an atomic symmetric base.
    fn signed_atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            DistKind::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            DistKind::AtomicSymmetric { atoms, p0 } => {
                let mut v = vec![(0.0, *p0)];
                for &(x, p) in atoms {
                    v.push((x, p));
                    v.push((-x, p));
                }
                Some(v)
            }
            _ => None,
        }
    }

    /// `P(Y ≥ t)` for the symmetric kinds.
    fn upper(&self, t: f64) -> f64 {
        match &self.kind {
            DistKind::Gaussian { sigma } => normal_sf(t / sigma),
            DistKind::SymmetricPareto { q, scale } => {
                let half = 0.5 * (scale / t.abs()).powf(*q).min(1.0);
                if t > 0.0 {
                    half
                } else {
                    1.0 - half
                }
            }
            _ => {
                let atoms = self.signed_atoms().expect("upper on an atomic law");
                atoms.iter().filter(|a| a.0 >= t).map(|a| a.1).sum()
            }
        }
    }

    /// `P(|X| ≥ λ)`.
    pub fn tail(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return input(format!("tail needs lambda >= 0, got {lambda}"));
        }
        if lambda == 0.0 {
            return Ok(1.0);
        }
        let p = match &self.kind {
            DistKind::Rademacher => {
                if lambda <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DistKind::Gaussian { sigma } => 2.0 * normal_sf(lambda / sigma),
            DistKind::SymmetricPareto { q, scale } => (scale / lambda).powf(*q).min(1.0),
            DistKind::AtomicSymmetric { .. } => self
                .abs_atoms()
                .unwrap()
                .iter()
                .filter(|a| a.0 >= lambda)
                .map(|a| a.1)
                .sum(),
            DistKind::Counterexample(ce) => {
                let ll = lambda.ln();
                let lp = ce
                    .levels()
                    .iter()
                    .filter(|l| l.atom.ln() >= ll)
                    .map(|l| l.prob.ln() + LN_2)
                    .fold(f64::NEG_INFINITY, log_add_exp);
                lp.exp()
            }
            DistKind::Shifted { base, shift } => base.upper(lambda - shift) + base.upper(lambda + shift),
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// `E X²`, or `None` when infinite.
    pub fn second_moment(&self) -> Option<f64> {
        self.abs_moment(2.0)
    }

    /// `E|X|^q`, or `None` when infinite or not available in closed form.
    pub fn abs_moment(&self, q: f64) -> Option<f64> {
        match &self.kind {
            DistKind::Gaussian { sigma } => Some(sigma.powf(q) * gaussian_abs_moment(q)),
            DistKind::SymmetricPareto { q: a, scale } => (*a > q).then(|| a * scale.powf(q) / (a - q)),
            DistKind::Counterexample(ce) => {
                let s = ce
                    .levels()
                    .iter()
                    .map(|l| l.prob.ln() + LN_2 + q * l.atom.ln())
                    .fold(f64::NEG_INFINITY, log_add_exp);
                Some(s.exp())
            }
            DistKind::Shifted { base, shift } if matches!(base.kind, DistKind::Gaussian { .. }) => {
                if q == 2.0 {
                    base.second_moment().map(|v| v + shift * shift)
                } else {
                    None
                }
            }
            _ => Some(self.abs_atoms()?.iter().map(|&(v, p)| p * v.powf(q)).sum()),
        }
    }

    /// Upper bound on `E[X² 1{|X| ≥ t}]`.
    fn second_moment_tail(&self, t: f64) -> f64 {
        match &self.kind {
            DistKind::Gaussian { sigma } => {
                let z = t / sigma;
                sigma * sigma * (2.0 * normal_sf(z) + 2.0 * z * normal_pdf(z))
            }
            DistKind::SymmetricPareto { q, scale } => {
                if *q <= 2.0 {
                    f64::INFINITY
                } else {
                    let t = t.max(*scale);
                    q * scale.powf(*q) * t.powf(2.0 - q) / (q - 2.0)
                }
            }
            DistKind::Counterexample(ce) => ce
                .levels()
                .iter()
                .filter(|l| l.atom.ln() >= t.ln())
                .map(|l| 0.5f64.powi(l.m as i32) * l.log_k)
                .sum(),
            DistKind::Shifted { base, shift } if matches!(base.kind, DistKind::Gaussian { .. }) => {
                // |X| ≥ t forces |Y| ≥ t - |c|, and X² ≤ 2c² + 2Y².
                let DistKind::Gaussian { sigma } = base.kind else {
                    unreachable!()
                };
                let u = (t - shift.abs()).max(0.0);
                2.0 * shift * shift * 2.0 * normal_sf(u / sigma) + 2.0 * base.second_moment_tail(u)
            }
            _ => self
                .abs_atoms()
                .unwrap()
                .iter()
                .filter(|a| a.0 >= t)
                .map(|&(v, p)| p * v * v)
                .sum(),
        }
    }

    /// `E[g(|X|) 1{lo ≤ |X| < hi}]` for the continuous kinds, by quadrature
    /// on the density of |X|.
    fn integrate_abs(&self, g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
        match &self.kind {
            DistKind::Gaussian { sigma } => gaussian_abs_integral(g, *sigma, 0.0, lo, hi),
            DistKind::Shifted { base, shift } => match base.kind {
                DistKind::Gaussian { sigma } => gaussian_abs_integral(g, sigma, *shift, lo, hi),
                _ => Err(Error::Unsupported(
                    "quadrature on a shifted non-Gaussian law".into(),
                )),
            },
            DistKind::SymmetricPareto { q, scale } => {
                let lo = lo.max(*scale);
                if hi <= lo {
                    return Ok((0.0, 0.0));
                }
                let (q, s) = (*q, *scale);
                // x = e^u; density q s^q x^{-q-1} dx = q s^q x^{-q} du.
                let f = |u: f64| {
                    let x = u.exp();
                    g(x) * q * (q * (s / x).ln()).exp()
                };
                let r = integrate(f, lo.ln(), hi.ln(), 1e-13)?;
                Ok((r.value, r.abs_error))
            }
            _ => Err(Error::Unsupported("quadrature on an atomic law".into())),
        }
    }

    /// `E[|X|^ν 1{|X| < b}]`, or with `|X| ≤ b` under [`Inclusion::Closed`].
    pub fn truncated_moment_with(&self, nu: f64, b: f64, inclusion: Inclusion) -> Result<f64> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return input(format!("moment order must be >= 0, got {nu}"));
        }
        if !(b >= 0.0) {
            return input(format!("truncation level must be >= 0, got {b}"));
        }
        if b == 0.0 && inclusion == Inclusion::Strict {
            return Ok(0.0);
        }
        match &self.kind {
            DistKind::Gaussian { sigma } if nu == 2.0 => {
                Ok(sigma * sigma * gaussian_trunc_second((b / sigma).min(GAUSS_CUTOFF * 10.0)))
            }
            DistKind::Gaussian { sigma } if nu == 3.0 => {
                Ok(sigma.powi(3) * gaussian_trunc_third((b / sigma).min(GAUSS_CUTOFF * 10.0)))
            }
            DistKind::SymmetricPareto { q, scale } => {
                let (q, s) = (*q, *scale);
                if b <= s {
                    return Ok(0.0);
                }
                if (nu - q).abs() < 1e-12 {
                    Ok(q * s.powf(q) * (b / s).ln())
                } else {
                    Ok(q * s.powf(q) * (b.powf(nu - q) - s.powf(nu - q)) / (nu - q))
                }
            }
            DistKind::Counterexample(ce) => {
                let lb = b.ln();
                let mut acc = NeumaierSum::new();
                for l in ce.levels() {
                    let a = l.atom.ln();
                    let keep = match inclusion {
                        Inclusion::Strict => a < lb,
                        Inclusion::Closed => a <= lb,
                    };
                    if keep {
                        if nu == 2.0 {
                            acc.add(0.5f64.powi(l.m as i32) * l.log_k);
                        } else {
                            acc.add((l.prob.ln() + LN_2 + nu * a).exp());
                        }
                    }
                }
                Ok(acc.value())
            }
            DistKind::Gaussian { .. } | DistKind::Shifted { .. } if self.abs_atoms().is_none() => {
                Ok(self.integrate_abs(&|x| x.powf(nu), 0.0, b)?.0)
            }
            _ => Ok(self
                .abs_atoms()
                .unwrap()
                .iter()
                .filter(|a| inclusion.keeps(a.0, b) && a.0 > 0.0)
                .map(|&(v, p)| p * v.powf(nu))
                .sum()),
        }
    }

    /// `E[|X|^ν 1{|X| < b}]` with the strict inequality.
    pub fn truncated_moment(&self, nu: f64, b: f64) -> Result<f64> {
        self.truncated_moment_with(nu, b, Inclusion::Strict)
    }

    /// `E[g(|X|)]` for `g(x) ≤ x² h(x)` with `h` non-increasing beyond the
    /// cut-off used for the tail bound.
    fn expect_quadratic_like(
        &self,
        g: &dyn Fn(f64) -> f64,
        h: &dyn Fn(f64) -> f64,
        infinite: bool,
    ) -> Result<MomentValue> {
        if let Some(atoms) = self.abs_atoms() {
            let v: NeumaierSum = atoms.iter().map(|&(x, p)| p * g(x)).collect();
            return Ok(MomentValue::Finite {
                value: v.value(),
                abs_error: 0.0,
            });
        }
        if infinite {
            let mut cert = Vec::new();
            for t in DIVERGENCE_PROBES {
                cert.push((t, self.integrate_abs(g, 0.0, t)?.0));
            }
            return Ok(MomentValue::Divergent { certificate: cert });
        }
        let mut t = 1e3;
        loop {
            let tail = self.second_moment_tail(t) * h(t);
            if tail < 1e-12 || t >= 1e100 {
                let (v, e) = self.integrate_abs(g, 0.0, t)?;
                return Ok(MomentValue::Finite {
                    value: v,
                    abs_error: e + tail,
                });
            }
            t *= 1e3;
        }
    }

    /// `E[X²/ln(2+|X|)]`.
    pub fn log_plus_moment(&self) -> Result<MomentValue> {
        if let DistKind::Counterexample(ce) = &self.kind {
            let v: NeumaierSum = ce
                .levels()
                .iter()
                .map(|l| {
                    let a = l.atom.ln();
                    0.5f64.powi(l.m as i32) * l.log_k / (a + (2.0 * (-a).exp()).ln_1p())
                })
                .collect();
            return Ok(MomentValue::Finite {
                value: v.value(),
                abs_error: 0.0,
            });
        }
        let infinite = matches!(self.kind, DistKind::SymmetricPareto { q, .. } if q <= 2.0);
        let g = |x: f64| x * x / (2.0 + x).ln();
        let h = |x: f64| 1.0 / (2.0 + x).ln();
        self.expect_quadratic_like(&g, &h, infinite)
    }

    /// `E[X² (ln(2 + ln(2+|X|)))^{1+δ} / ln(2+|X|)]`.
    pub fn loglog_moment(&self, delta: f64) -> Result<MomentValue> {
        if !(delta > 0.0 && delta.is_finite()) {
            return input(format!("delta must be positive, got {delta}"));
        }
        let h = move |x: f64| {
            let l = (2.0 + x).ln();
            (2.0 + l).ln().powf(1.0 + delta) / l
        };
        let g = move |x: f64| x * x * h(x);
        if let DistKind::Counterexample(ce) = &self.kind {
            let v: NeumaierSum = ce
                .levels()
                .iter()
                .map(|l| {
                    let a = l.atom.ln();
                    let lp = a + (2.0 * (-a).exp()).ln_1p();
                    0.5f64.powi(l.m as i32) * l.log_k * (2.0 + lp).ln().powf(1.0 + delta) / lp
                })
                .collect();
            return Ok(MomentValue::Finite {
                value: v.value(),
                abs_error: 0.0,
            });
        }
        // h decreases once (2+u) ln(2+u) > 1 + δ with u = ln(2+x).
        let u = (2.0f64 + 1e3).ln();
        if (2.0 + u) * (2.0 + u).ln() <= 1.0 + delta {
            return Err(Error::Unsupported(format!(
                "delta = {delta} too large for the tail bound"
            )));
        }
        let infinite = matches!(self.kind, DistKind::SymmetricPareto { q, .. } if q <= 2.0);
        self.expect_quadratic_like(&g, &h, infinite)
    }

    /// `ln C` with `P(|X| ≥ t) ≤ C t^{-q}` for all t > 0, when available.
    pub fn ln_power_tail_constant(&self, q: f64) -> Option<f64> {
        match &self.kind {
            DistKind::SymmetricPareto { q: a, scale } => (q <= *a).then(|| q * scale.ln()),
            DistKind::Gaussian { sigma } => Some(q * sigma.ln() + gaussian_abs_moment(q).ln()),
            DistKind::Counterexample(ce) => ce.levels().last().map(|l| q * l.atom.ln()),
            _ => self.ln_support_max().map(|m| q * m),
        }
    }

    /// `ln max|X|` for bounded laws.
    pub fn ln_support_max(&self) -> Option<f64> {
        match &self.kind {
            DistKind::Counterexample(ce) => ce.levels().last().map(|l| l.atom.ln()),
            _ => {
                let m = self.abs_atoms()?.iter().map(|a| a.0).fold(0.0, f64::max);
                Some(m.ln())
            }
        }
    }

    /// Exact `P(S_n = k)` for integer-valued atomic laws, as
    /// `(smallest support point, probabilities)`.
    pub fn lattice_sum_pmf(&self, n: u64) -> Option<(i64, Vec<f64>)> {
        let atoms = self.signed_atoms_or_shifted()?;
        if atoms.iter().any(|a| a.0.fract() != 0.0) || n == 0 || n > 100_000 {
            return None;
        }
        if matches!(self.kind, DistKind::Rademacher) {
            let nf = n as f64;
            let lg = libm::lgamma(nf + 1.0);
            let probs = (0..=n)
                .map(|k| {
                    let kf = k as f64;
                    (lg - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0) - nf * LN_2).exp()
                })
                .collect::<Vec<_>>();
            // S_n = 2k - n; spread onto the integer lattice with zeros between.
            let mut out = vec![0.0; 2 * n as usize + 1];
            for (k, p) in probs.into_iter().enumerate() {
                out[2 * k] = p;
            }
            return Some((-(n as i64), out));
        }
        let lo = atoms.iter().map(|a| a.0 as i64).min()?;
        let hi = atoms.iter().map(|a| a.0 as i64).max()?;
        let width = (hi - lo) as usize;
        let mut pmf = vec![1.0];
        for _ in 0..n {
            let mut next = vec![0.0; pmf.len() + width];
            for (i, &p) in pmf.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for &(v, q) in &atoms {
                    next[i + (v as i64 - lo) as usize] += p * q;
                }
            }
            pmf = next;
        }
        Some((lo * n as i64, pmf))
    }

    fn signed_atoms_or_shifted(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            DistKind::Shifted { base, shift } => Some(
                base.signed_atoms()?
                    .into_iter()
                    .map(|(x, p)| (x + shift, p))
                    .collect(),
            ),
            _ => self.signed_atoms(),
        }
    }

    /// One draw of X.
    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R, table: &Option<Vec<(f64, f64)>>) -> f64 {
        match &self.kind {
            DistKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DistKind::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            DistKind::SymmetricPareto { q, scale } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let x = scale * u.powf(-1.0 / q);
                if rng.random::<bool>() {
                    x
                } else {
                    -x
                }
            }
            DistKind::Shifted { base, shift } => base.draw(rng, table) + shift,
            DistKind::AtomicSymmetric { .. } => {
                let t = table.as_ref().expect("cumulative table");
                let u: f64 = rng.random();
                let i = t.partition_point(|e| e.1 <= u).min(t.len() - 1);
                t[i].0
            }
            DistKind::Counterexample(_) => unreachable!(),
        }
    }

    fn cumulative_table(&self) -> Option<Vec<(f64, f64)>> {
        let DistKind::AtomicSymmetric { .. } = self.kind else {
            return None;
        };
        let mut acc = 0.0;
        let mut t: Vec<(f64, f64)> = self
            .signed_atoms()?
            .into_iter()
            .map(|(x, p)| {
                acc += p;
                (x, acc)
            })
            .collect();
        t.last_mut().unwrap().1 = 1.0;
        Some(t)
    }

    /// A reusable sampler of `S_n` or of the truncated `S_n(b)`.
    pub fn sum_sampler(&self, truncate: Option<(f64, Inclusion)>) -> Result<SumSampler<'_>> {
        if let DistKind::Counterexample(_) = self.kind {
            return Err(Error::Unsupported(
                "sampling the counterexample law: its atoms carry probability about e^{-lambda_m}, \
                 so no feasible replicate count ever sees them"
                    .into(),
            ));
        }
        Ok(SumSampler {
            dist: self,
            table: match &self.kind {
                DistKind::Shifted { base, .. } => base.cumulative_table(),
                _ => self.cumulative_table(),
            },
            truncate,
        })
    }
}

fn gaussian_abs_integral(
    g: &dyn Fn(f64) -> f64,
    sigma: f64,
    shift: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    let top = hi.min(shift.abs() + GAUSS_CUTOFF * sigma);
    if top <= lo {
        return Ok((0.0, 0.0));
    }
    let dens = |x: f64| (normal_pdf((x - shift) / sigma) + normal_pdf((x + shift) / sigma)) / sigma;
    let f = |x: f64| g(x) * dens(x);
    let mut knots = vec![lo];
    for k in [shift.abs(), shift.abs() + 5.0 * sigma] {
        if k > lo && k < top {
            knots.push(k);
        }
    }
    knots.push(top);
    let (mut v, mut e) = (0.0, 0.0);
    for w in knots.windows(2) {
        let r = integrate(f, w[0], w[1], 1e-14)?;
        v += r.value;
        e += r.abs_error;
    }
    Ok((v, e))
}

/// Counter-based stream: `(key, replicate)` fixes the position exactly.
pub fn replicate_rng(key: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(replicate);
    rng
}

pub struct SumSampler<'a> {
    dist: &'a DistModel,
    table: Option<Vec<(f64, f64)>>,
    truncate: Option<(f64, Inclusion)>,
}

impl SumSampler<'_> {
    /// One realisation of `S_n`.
    pub fn sample<R: RngCore + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        let d = self.dist;
        match (&d.kind, self.truncate) {
            (DistKind::Rademacher, t) if t.is_none_or(|(b, inc)| inc.keeps(1.0, b)) => rademacher_sum(n, rng),
            (DistKind::Rademacher, Some(_)) => 0.0,
            (DistKind::Shifted { base, shift }, None) if matches!(base.kind, DistKind::Rademacher) => {
                rademacher_sum(n, rng) + n as f64 * shift
            }
            (DistKind::Gaussian { sigma }, None) => {
                sigma * (n as f64).sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
            (_, None) => {
                let mut s = NeumaierSum::new();
                for _ in 0..n {
                    s.add(d.draw(rng, &self.table));
                }
                s.value()
            }
            (_, Some((b, inc))) => {
                let mut s = NeumaierSum::new();
                for _ in 0..n {
                    let x = d.draw(rng, &self.table);
                    if inc.keeps(x.abs(), b) {
                        s.add(x);
                    }
                }
                s.value()
            }
        }
    }
}

fn rademacher_sum<R: RngCore + ?Sized>(n: u64, rng: &mut R) -> f64 {
    let mut ones = 0u64;
    let mut left = n;
    while left >= 64 {
        ones += rng.next_u64().count_ones() as u64;
        left -= 64;
    }
    if left > 0 {
        ones += (rng.next_u64() & ((1u64 << left) - 1)).count_ones() as u64;
    }
    2.0 * ones as f64 - n as f64
}

/// One realisation of `S_n` from the stream `(seed, replicate 0)`.
pub fn sample_sum(dist: &DistModel, n: u64, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("S_n needs n >= 1".into()));
    }
    let sampler = dist.sum_sampler(None)?;
    Ok(sampler.sample(n, &mut replicate_rng(seed, 0)))
}

/// `(1/n) Σ_k P(|X_k| ≥ λ) ≤ K P(|X| ≥ λ)` at every grid point.
pub fn weak_mean_domination_check(
    rows: &[&dyn TailProbability],
    x: &dyn TailProbability,
    k: f64,
    grid: &[f64],
) -> Result<Domination> {
    if rows.is_empty() {
        return input("weak mean domination needs at least one row variable");
    }
    if grid.is_empty() {
        return input("lambda grid is empty");
    }
    if !(k > 0.0) {
        return input(format!("domination constant must be positive, got {k}"));
    }
    for &lam in grid {
        let mut s = NeumaierSum::new();
        for r in rows {
            s.add(r.tail(lam)?);
        }
        let avg = s.value() / rows.len() as f64;
        let bound = k * x.tail(lam)?;
        if avg > bound * (1.0 + 1e-12) {
            return Ok(Domination::Violated {
                lambda: lam,
                row_average: avg,
                bound,
            });
        }
    }
    Ok(Domination::Dominated)
}
