//! Standard normal quantile function.
//!
//! Wichura's AS 241 (PPND16) rational approximation, accurate to roughly
//! machine precision over (0, 1). Keeps the crate free of special-function
//! dependencies; confidence-interval code only ever needs `z_{alpha/2}`.

// The published coefficients carry more digits than f64 resolves; they round
// to the intended values.
#![allow(clippy::excessive_precision)]

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalError {
    #[error("probability {p} is outside (0, 1)")]
    ProbabilityOutOfRange { p: f64 },
}

/// Inverse standard normal c.d.f.
pub fn quantile(p: f64) -> Result<f64, NormalError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(NormalError::ProbabilityOutOfRange { p });
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * rational(r, &A, &B));
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        rational(r - 1.6, &C, &D)
    } else {
        rational(r - 5.0, &E, &F)
    };
    Ok(if q < 0.0 { -x } else { x })
}

/// Two-sided critical value `z` with `P(|Z| <= z) = confidence`.
pub fn two_sided_z(confidence: f64) -> Result<f64, NormalError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(NormalError::ProbabilityOutOfRange { p: confidence });
    }
    quantile(0.5 + 0.5 * confidence)
}

fn rational(r: f64, num: &[f64; 8], den: &[f64; 8]) -> f64 {
    let mut n = num[7];
    let mut d = den[7];
    for i in (0..7).rev() {
        n = n * r + num[i];
        d = d * r + den[i];
    }
    n / d
}

#[rustfmt::skip]
const A: [f64; 8] = [
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
];
#[rustfmt::skip]
const B: [f64; 8] = [
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
];
#[rustfmt::skip]
const C: [f64; 8] = [
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
];
#[rustfmt::skip]
const D: [f64; 8] = [
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
];
#[rustfmt::skip]
const E: [f64; 8] = [
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
];
#[rustfmt::skip]
const F: [f64; 8] = [
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_quantiles() {
        assert_eq!(quantile(0.5).unwrap(), 0.0);
        assert_relative_eq!(quantile(0.975).unwrap(), 1.959963984540054, max_relative = 1e-12);
        assert_relative_eq!(quantile(0.95).unwrap(), 1.6448536269514722, max_relative = 1e-12);
        assert_relative_eq!(quantile(0.995).unwrap(), 2.5758293035489004, max_relative = 1e-12);
        assert_relative_eq!(quantile(0.9).unwrap(), 1.2815515655446004, max_relative = 1e-12);
        assert_relative_eq!(quantile(1e-10).unwrap(), -6.361340902404056, max_relative = 1e-10);
    }

    #[test]
    fn symmetry() {
        for p in [0.001, 0.01, 0.1, 0.3, 0.45] {
            let lo = quantile(p).unwrap();
            let hi = quantile(1.0 - p).unwrap();
            assert_relative_eq!(lo, -hi, max_relative = 1e-13);
        }
    }

    #[test]
    fn round_trip_against_numeric_cdf() {
        // Independent route: Phi(z) via quadrature of the density from 0 to z.
        let phi = |z: f64| {
            0.5 + crate::quad::integrate(
                |t| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(),
                0.0,
                z,
                1e-13,
                1e-16,
            )
            .unwrap()
        };
        for p in [0.025, 0.1, 0.5, 0.9, 0.975, 0.999] {
            let z = quantile(p).unwrap();
            assert_relative_eq!(phi(z), p, max_relative = 1e-10);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(quantile(0.0).is_err());
        assert!(quantile(1.0).is_err());
        assert!(quantile(f64::NAN).is_err());
        assert!(two_sided_z(1.0).is_err());
    }

    #[test]
    fn two_sided_value() {
        assert_relative_eq!(
            two_sided_z(0.95).unwrap(),
            1.959963984540054,
            max_relative = 1e-12
        );
    }
}
