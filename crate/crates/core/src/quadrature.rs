//! The Gaussian velocity integral `G(u, λ) = ∫₀ᵘ exp(-v²/2λ²) dv` that appears
//! in the multiplicative Lagrangian and momentum.
//!
//! The primary route is adaptive Simpson quadrature. A Maclaurin series in
//! `u/λ` is kept as an independent cross-check for moderate arguments.

use crate::error::{Error, Result};
use crate::math::exp;
use crate::system::Lambda;

/// Absolute tolerance requested from the adaptive quadrature, per unit of λ.
const SIMPSON_TOLERANCE: f64 = 1e-15;
const SIMPSON_MAX_DEPTH: u32 = 48;

/// Beyond `|v| = 40 λ` the integrand is below `e^{-800}` and underflows.
const GAUSSIAN_CUTOFF: f64 = 40.0;

/// `sqrt(pi / 2)`.
pub const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance
/// `tol`, using the Richardson-corrected panel estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫₀ᵘ exp(-v²/2λ²) dv` by adaptive Simpson quadrature.
///
/// Odd in `u` by construction and bounded by `min(|u|, λ√(π/2))`.
/// Rejects `Lambda::Infinite`, where the integrand is 1 and the integral is `u`.
pub fn gaussian_velocity_integral(u: f64, lambda: Lambda) -> Result<f64> {
    let lambda = finite_scale(lambda)?;
    Ok(gaussian_integral_unchecked(u, lambda))
}

pub(crate) fn gaussian_integral_unchecked(u: f64, lambda: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let upper = u.abs().min(GAUSSIAN_CUTOFF * lambda);
    let inv = 1.0 / (2.0 * lambda * lambda);
    let integrand = |v: f64| exp(-v * v * inv);
    // Unit-λ panels keep the adaptive refinement local to where the
    // integrand bends.
    let panels = libm::ceil(upper / lambda).max(1.0) as usize;
    let width = upper / panels as f64;
    let tol = SIMPSON_TOLERANCE * lambda / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * width;
        let b = if k + 1 == panels {
            upper
        } else {
            (k + 1) as f64 * width
        };
        total += adaptive_simpson(&integrand, a, b, tol);
    }
    let bound = SQRT_HALF_PI * lambda;
    let value = total.min(bound).min(u.abs());
    if u < 0.0 {
        -value
    } else {
        value
    }
}

/// Maclaurin series `Σ (-1)^n u^{2n+1} / (n! (2n+1) (2λ²)^n)`.
///
/// Cross-validation route for the quadrature. Terms grow like
/// `(u²/2λ²)^n / n!` before decaying, so accuracy degrades once `|u|/λ`
/// exceeds about 4 (cancellation costs ~1e-13 there); larger arguments are rejected.
pub fn gaussian_velocity_integral_series(u: f64, lambda: Lambda) -> Result<f64> {
    let lambda = finite_scale(lambda)?;
    if u.abs() > 4.0 * lambda {
        return Err(Error::InvalidParameter {
            name: "u",
            reason: "series route is limited to |u| <= 4 lambda",
        });
    }
    let z = -u * u / (2.0 * lambda * lambda);
    // term_n = z^n / n!; contribution term_n / (2n+1)
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= z / n as f64;
        let contribution = term / (2 * n + 1) as f64;
        sum += contribution;
        if contribution.abs() <= f64::EPSILON * 1e-3 * sum.abs() || n > 400 {
            break;
        }
    }
    Ok(u * sum)
}

/// `λ √(π/2)`: the limit of the integral as `u → ∞`.
pub fn gaussian_velocity_integral_limit(lambda: f64) -> f64 {
    SQRT_HALF_PI * lambda
}

fn finite_scale(lambda: Lambda) -> Result<f64> {
    match lambda {
        Lambda::Finite(l) if l.is_finite() && l > 0.0 => Ok(l),
        Lambda::Finite(_) => Err(Error::InvalidParameter {
            name: "lambda",
            reason: "must be finite and > 0",
        }),
        Lambda::Infinite => Err(Error::InfiniteLambda {
            operation: "gaussian_velocity_integral",
            additive: "the velocity itself (the integrand is 1)",
        }),
    }
}

#[inline]
pub(crate) fn gaussian_integrand(v: f64, lambda: f64) -> f64 {
    exp(-v * v / (2.0 * lambda * lambda))
}
