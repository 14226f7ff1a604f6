//! Taylor coefficients of a function known only on one side of the origin.
//!
//! Used to read off the coefficients of `ε^k`, `ε = -1/mλ²`, from closed-form
//! quantities evaluated along a λ sweep: the function is interpolated on
//! Chebyshev–Lobatto nodes of `[-h, 0]` and the interpolant is differentiated
//! at the right endpoint.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::cos;

/// Interpolation degree used by [`endpoint_taylor_coefficients`] callers
/// that do not need a custom trade-off.
pub const DEFAULT_DEGREE: usize = 12;

/// Returns `[a_0, ..., a_order]` with `f(ε) ≈ Σ a_k ε^k` near `ε = 0`, from
/// `degree + 1` samples of `f` on `[-h, 0]`.
///
/// Coefficient `k` loses roughly `(2/h)^k · degree^{2k}` in relative accuracy
/// to rounding, so keep `order` well below `degree` and `h` as large as the
/// function's analytic radius allows.
pub fn endpoint_taylor_coefficients<F: FnMut(f64) -> f64>(
    mut f: F,
    h: f64,
    degree: usize,
    order: usize,
) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: "sweep half-width must be finite and > 0",
        });
    }
    if degree < 2 || order > degree {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: "need 2 <= degree and order <= degree",
        });
    }
    let n = degree;
    let pi = core::f64::consts::PI;
    // Lobatto nodes s_i = cos(iπ/n); s = 1 maps to ε = 0, s = -1 to ε = -h.
    let values: Vec<f64> = (0..=n)
        .map(|i| {
            let s = cos(i as f64 * pi / n as f64);
            let eps = if i == 0 { 0.0 } else { 0.5 * h * (s - 1.0) };
            f(eps)
        })
        .collect();

    // Discrete Chebyshev transform on Lobatto nodes.
    let mut cheb = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut acc = 0.0;
        for (i, &v) in values.iter().enumerate() {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * v * cos((k * i) as f64 * pi / n as f64);
        }
        let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
        cheb.push(scale * acc / n as f64);
    }

    // d^k T_m / ds^k at s = 1 equals Π_{i<k} (m² - i²) / (2i + 1).
    let mut coefficients = Vec::with_capacity(order + 1);
    let mut chain = 1.0; // (2/h)^k / k!
    for k in 0..=order {
        if k > 0 {
            chain *= 2.0 / (h * k as f64);
        }
        let mut derivative = 0.0;
        for (m, &c) in cheb.iter().enumerate() {
            let mut t = 1.0;
            for i in 0..k {
                let i = i as f64;
                let m = m as f64;
                t *= (m * m - i * i) / (2.0 * i + 1.0);
            }
            derivative += c * t;
        }
        coefficients.push(chain * derivative);
    }
    Ok(coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_polynomial_exactly() {
        let f = |e: f64| 3.0 - 2.0 * e + 0.5 * e * e - 4.0 * e * e * e;
        let c = endpoint_taylor_coefficients(f, 0.5, 8, 4).unwrap();
        let expected = [3.0, -2.0, 0.5, -4.0, 0.0];
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn geometric_series_coefficients() {
        // 1/(1 - 2ε): coefficients 2^k, singularity at ε = 0.5 on the far side.
        let c = endpoint_taylor_coefficients(|e| 1.0 / (1.0 - 2.0 * e), 0.1, 12, 5).unwrap();
        for (k, a) in c.iter().enumerate() {
            let exact = 2f64.powi(k as i32);
            let tol = if k < 5 { 1e-7 } else { 1e-5 };
            assert!((a - exact).abs() < tol * exact, "k={k}: {a}");
        }
    }

    #[test]
    fn exponential_coefficients() {
        let c = endpoint_taylor_coefficients(libm::exp, 1.0, 12, 5).unwrap();
        let mut fact = 1.0;
        for (k, a) in c.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((a * fact - 1.0).abs() < 1e-6, "k={k}: {a}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(endpoint_taylor_coefficients(|e| e, 0.0, 8, 2).is_err());
        assert!(endpoint_taylor_coefficients(|e| e, 1.0, 4, 5).is_err());
    }
}
