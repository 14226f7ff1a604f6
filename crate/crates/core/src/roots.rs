//! Bracketed scalar root finding: bisection safeguarded secant steps, plus a
//! scan that rejects brackets with zero or several sign changes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    /// Required `|f(root)|`.
    pub residual_tol: f64,
    /// Absolute bracket width at which iteration stops; the relative floor
    /// of two ulps always applies as well.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Number of sub-intervals sampled when scanning a bracket for sign changes.
    pub scan_intervals: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            residual_tol: 1e-10,
            x_tol: 1e-15,
            max_iter: 200,
            scan_intervals: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Root of `f` inside `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Each iteration tries the secant through the bracket ends and falls back to
/// bisection when the secant leaves the bracket or fails to halve it. The
/// bracket is shrunk to `x_tol` (or two ulps), so the returned residual sits
/// near the rounding floor of `f`.
pub fn bracketed_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &RootConfig,
) -> Result<Root> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            residual: 0.0,
            iterations: 0,
        });
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::NoRoot { lo: a, hi: b });
    }

    let mut bisect_next = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a <= cfg.x_tol + 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        let before = b - a;
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if !bisect_next && secant > a && secant < b {
            secant
        } else {
            mid
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(Root {
                x,
                residual: 0.0,
                iterations,
            });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        bisect_next = b - a > 0.5 * before;
    }

    let (x, fx) = if fa.abs() <= fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    let residual = fx.abs();
    if residual > cfg.residual_tol {
        return Err(Error::RootNotConverged {
            iterations,
            residual,
        });
    }
    Ok(Root {
        x,
        residual,
        iterations,
    })
}

/// Scans `[lo, hi]` on `cfg.scan_intervals` sub-intervals and solves on the
/// single one that changes sign. Zero sign changes is `NoRoot`; more than one
/// is `AmbiguousRoot`.
pub fn unique_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &RootConfig,
) -> Result<Root> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let n = cfg.scan_intervals.max(1);
    let step = (hi - lo) / n as f64;
    let node = |i: usize| if i == n { hi } else { lo + i as f64 * step };

    let mut prev_x = lo;
    let mut prev_f = f(lo);
    let mut found: Option<(f64, f64)> = None;
    let mut changes = 0;
    for i in 1..=n {
        let x = node(i);
        let fx = f(x);
        if prev_f == 0.0 {
            // exact root on a node; count it once with the interval to its right
            changes += 1;
            found.get_or_insert((prev_x, prev_x));
        } else if fx != 0.0 && fx.signum() != prev_f.signum() {
            changes += 1;
            found.get_or_insert((prev_x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    if prev_f == 0.0 {
        changes += 1;
        found.get_or_insert((hi, hi));
    }

    match (changes, found) {
        (0, _) | (_, None) => Err(Error::NoRoot { lo, hi }),
        (1, Some((a, b))) if a == b => Ok(Root {
            x: a,
            residual: 0.0,
            iterations: 0,
        }),
        (1, Some((a, b))) => bracketed_root(f, a, b, cfg),
        (k, _) => Err(Error::AmbiguousRoot {
            sign_changes: k,
            lo,
            hi,
        }),
    }
}
