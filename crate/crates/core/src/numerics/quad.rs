use crate::error::{Error, Result};

/// Result of a one-dimensional quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

/// Double-exponential quadrature of `f` over `[a, b]`. Fails with a numeric
/// error carrying the residual estimate when the requested absolute
/// tolerance is not reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let out = quadrature::integrate(&f, a, b, tol);
    if !out.integral.is_finite() || out.error_estimate > tol.max(1e-12 * out.integral.abs()) * 10.0 {
        return Err(Error::Numeric {
            what: format!("quadrature on [{a}, {b}] did not converge"),
            residual: out.error_estimate,
        });
    }
    Ok(Quadrature {
        value: out.integral,
        abs_error: out.error_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let q = integrate(|x| x * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((q.value - 9.0).abs() < 1e-11);
        let q = integrate(|x: f64| (-x).exp(), 0.0, 50.0, 1e-12).unwrap();
        assert!((q.value - (1.0 - (-50f64).exp())).abs() < 1e-11);
    }
}
