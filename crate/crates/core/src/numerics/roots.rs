use crate::error::{Error, Result};

/// Bisection for a sign change of `f` on `[lo, hi]`. Returns the right end
/// of the final bracket, i.e. a point where `f >= 0` for increasing `f`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::Numeric {
            what: format!("no sign change on [{lo}, {hi}]"),
            residual: flo.abs().min(fhi.abs()),
        });
    }
    let rising = flo < 0.0;
    for _ in 0..2000 {
        if hi - lo <= rel_tol * hi.abs().max(1e-300) {
            return Ok(if rising { hi } else { lo });
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric {
        what: "bisection exhausted its iteration budget".into(),
        residual: hi - lo,
    })
}
