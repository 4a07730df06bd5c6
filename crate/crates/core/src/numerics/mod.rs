//! Small numerical kernels shared by the evaluators: compensated summation,
//! log-domain arithmetic, the standard normal tail, quadrature and scalar
//! root bracketing.

pub mod logspace;
pub mod normal;
pub mod quad;
pub mod roots;
pub mod sum;

pub use logspace::{log_add_exp, log_diff_exp, log_sum_exp, LogNumber};
pub use normal::{normal_cdf, normal_sf, two_sided_normal_tail};
pub use quad::{integrate, Quadrature};
pub use roots::bisect;
pub use sum::NeumaierSum;

/// Least-squares slope of `ys` against `xs`. Returns `None` for fewer than
/// two distinct abscissae or any non-finite input.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `count` integers spread geometrically over `[lo, hi]`, deduplicated and
/// always containing both endpoints.
pub fn log_spaced(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    assert!(lo >= 1 && hi >= lo);
    if count <= 1 || lo == hi {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (a + t * (b - a)).exp().round() as u64
        })
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.dedup();
    if *out.last().unwrap() != hi {
        out.push(hi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        assert!((ls_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-14);
        assert!(ls_slope(&[1.0], &[2.0]).is_none());
        assert!(ls_slope(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_spaced(50, 2000, 16);
        assert_eq!(g[0], 50);
        assert_eq!(*g.last().unwrap(), 2000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
