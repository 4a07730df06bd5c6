//! Standard normal distribution helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1 - Φ(x)`, accurate deep into the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `2(1 - Φ(x))`, with `x = +inf` giving 0. This is the convention used
/// when the truncated variance vanishes.
pub fn two_sided_normal_tail(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    2.0 * normal_sf(x)
}

/// Leading Mills-ratio asymptotic `φ(x)/x · (1 - 1/x²)` of `1 - Φ(x)`, a
/// lower bound for every `x > 0`.
pub fn normal_sf_asymptotic(x: f64) -> f64 {
    assert!(x > 0.0);
    normal_pdf(x) / x * (1.0 - 1.0 / (x * x))
}

/// Constant `C` in the global bound `1 - Φ(x) <= C e^{-x²/2}`, `x >= 0`.
pub const GAUSSIAN_TAIL_CONSTANT: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((normal_sf(0.0) - 0.5).abs() < 1e-16);
        assert!((two_sided_normal_tail(1.0) - 0.317_310_507_862_914_1).abs() < 1e-15);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert_eq!(two_sided_normal_tail(f64::INFINITY), 0.0);
    }

    #[test]
    fn mills_bracket_and_chernoff() {
        for i in 1..200 {
            let x = 0.05 * i as f64;
            let sf = normal_sf(x);
            assert!(normal_sf_asymptotic(x) <= sf);
            assert!(normal_pdf(x) / x >= sf);
            assert!(sf <= GAUSSIAN_TAIL_CONSTANT * (-0.5 * x * x).exp());
        }
        let x = 30.0;
        assert!((normal_sf_asymptotic(x) / normal_sf(x) - 1.0).abs() < 3.0 / (x * x * x * x));
    }
}
