//! Adaptive Simpson quadrature on finite intervals.
//!
//! Used as the independent numerical route for the closed-form integrals in
//! [`crate::loss`] and [`crate::asymptotics`]. The integrands there are smooth
//! exponential-polynomial products, for which adaptive Simpson with the
//! standard |S_fine - S_coarse|/15 error estimate converges quickly.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}] (requested tolerance {tol})")]
    NonConvergence { a: f64, b: f64, tol: f64 },
    #[error("integrand returned a non-finite value at t = {t}")]
    NonFiniteIntegrand { t: f64 },
}

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` to roughly `rel_tol` relative accuracy with an
/// `abs_tol` floor for integrals near zero.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let eval = |t: f64| -> Result<f64, QuadError> {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFiniteIntegrand { t })
        }
    };
    // Seed the tolerance with a crude scale estimate from a coarse pass so
    // the relative criterion has something to be relative to.
    let mut scale = 0.0_f64;
    let coarse_n = 32;
    for i in 0..=coarse_n {
        let t = a + (b - a) * i as f64 / coarse_n as f64;
        scale = scale.max(eval(t)?.abs());
    }
    let tol = (scale * (b - a).abs() * rel_tol).max(abs_tol);

    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&eval, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> Result<f64, QuadError>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        // Richardson extrapolation of the two Simpson levels.
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadError::NonConvergence { a, b, tol });
    }
    let lv = adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let rv = adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(lv + rv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|t| t * t, 0.0, 1.0, 1e-12, 1e-15).unwrap();
        assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate(|t| (-t).exp(), 0.0, 30.0, 1e-12, 1e-16).unwrap();
        assert_relative_eq!(v, 1.0 - (-30.0_f64).exp(), max_relative = 1e-11);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate(|t| (10.0 * t).sin(), 0.0, std::f64::consts::PI, 1e-12, 1e-15).unwrap();
        let exact = (1.0 - (10.0 * std::f64::consts::PI).cos()) / 10.0;
        assert_relative_eq!(v, exact, epsilon = 1e-11);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|t| t, 2.0, 2.0, 1e-10, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|t| 1.0 / t, 0.0, 1.0, 1e-10, 1e-12).unwrap_err();
        assert!(matches!(err, QuadError::NonFiniteIntegrand { .. }));
    }
}
