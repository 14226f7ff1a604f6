//! Closed forms of the multiplicative Lagrangian, Hamiltonian and momentum,
//! the additive hierarchies `L_j`, `H_j`, `p_j` they generate, truncated
//! partial sums in `ε = -1/mλ²`, and the λ→∞ reduction residuals.
//!
//! Writing `ε = -1/mλ²`, the closed forms expand as
//!
//! ```text
//! L_λ = Σ_j ε^{j-1}/j! · L_j + mλ²
//! H_λ = Σ_j ε^{j-1}/j! · H_j - mλ²,      H_j = H_N^j
//! p_λ = Σ_j ε^{j-1}/j! · p_j
//! ```
//!
//! and each level satisfies its own Legendre identity `L_j = p_j ẋ - H_j`.
//! All series coefficients are folded term to term; no standalone factorial
//! is ever formed, which keeps orders up to [`TruncationOrder::MAX`] finite.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, expm1, powi};
use crate::quadrature::{gaussian_integral_unchecked, gaussian_integrand, SQRT_HALF_PI};
use crate::system::{
    additive_hamiltonian, kinetic_energy, KineticState, PhaseState, Potential, SystemParams,
};

/// Above this value of `H_N / mλ²` the alternating partial sums cancel badly.
pub const CONDITIONING_LIMIT: f64 = 2.0;

/// Number of hierarchy levels kept in a partial sum, `1..=64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TruncationOrder(u32);

impl TruncationOrder {
    pub const MAX: u32 = 64;

    pub fn new(levels: u32) -> Result<Self> {
        if (1..=Self::MAX).contains(&levels) {
            Ok(TruncationOrder(levels))
        } else {
            Err(Error::InvalidParameter {
                name: "truncation order",
                reason: "must be in 1..=64",
            })
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// Which closed form a partial sum approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    Lagrangian,
    Hamiltonian,
    Momentum,
}

/// Which side of the λ→∞ reduction to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReductionKind {
    Lagrangian,
    Hamiltonian,
}

/// `L_j`, `H_j`, `p_j` at one phase-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyRow {
    pub j: u32,
    pub lagrangian: f64,
    pub hamiltonian: f64,
    pub momentum: f64,
}

/// `L_λ = mλ² (exp(-ẋ²/2λ²) + ẋ/λ² · G(ẋ, λ)) exp(-V/mλ²)`.
pub fn multiplicative_lagrangian(
    state: KineticState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    let lambda = params.require_finite("multiplicative_lagrangian", "T - V")?;
    let m = params.mass();
    let l2 = lambda * lambda;
    let v = state.xdot;
    let g = gaussian_integral_unchecked(v, lambda);
    let damping = exp(-potential.eval(state.x) / (m * l2));
    Ok(m * l2 * (exp(-v * v / (2.0 * l2)) + v / l2 * g) * damping)
}

/// `H_λ = -mλ² exp(-H_N/mλ²)`.
pub fn multiplicative_hamiltonian(
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    let scale = energy_scale(params, "multiplicative_hamiltonian", "additive_hamiltonian")?;
    let h = additive_hamiltonian(state, potential, params);
    Ok(-scale * exp(-h / scale))
}

/// `p_λ = m G(ẋ, λ) exp(-V/mλ²)`.
pub fn multiplicative_momentum(
    state: KineticState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    let lambda = params.require_finite("multiplicative_momentum", "p = m xdot")?;
    let m = params.mass();
    let g = gaussian_integral_unchecked(state.xdot, lambda);
    Ok(m * g * exp(-potential.eval(state.x) / (m * lambda * lambda)))
}

/// `p_λ` as a function of the phase-space point `(x, p)`; the additive limit
/// returns `p`.
pub fn multiplicative_momentum_at(
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    if !params.lambda().is_finite() {
        return Ok(state.p);
    }
    multiplicative_momentum(state.to_kinetic(params.mass()), potential, params)
}

/// Inverse of [`multiplicative_momentum_at`] at fixed `x`: the ordinary
/// momentum `p` whose λ-momentum is `p_lambda`.
///
/// `p_λ` is bounded by `mλ√(π/2)·exp(-V/mλ²)`; values at or beyond the bound
/// have no preimage.
pub fn momentum_from_multiplicative(
    x: f64,
    p_lambda: f64,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    let Some(lambda) = params.lambda().finite() else {
        return Ok(p_lambda);
    };
    let m = params.mass();
    let target = p_lambda * exp(potential.eval(x) / (m * lambda * lambda)) / m;
    let bound = SQRT_HALF_PI * lambda;
    if target.is_nan() || target.abs() >= bound {
        return Err(Error::InvalidParameter {
            name: "p_lambda",
            reason: "outside the range of the multiplicative momentum",
        });
    }
    Ok(m * invert_gaussian_integral(target, lambda))
}

/// Solves `G(u, λ) = target` for `u` with safeguarded Newton steps
/// (`G' = exp(-u²/2λ²)`), bisecting whenever a step leaves the bracket.
fn invert_gaussian_integral(target: f64, lambda: f64) -> f64 {
    if target == 0.0 {
        return 0.0;
    }
    let g = target.abs();
    // G(u) <= u, so the root is at least g.
    let mut lo = g;
    let mut hi = 2.0 * g.max(lambda);
    while gaussian_integral_unchecked(hi, lambda) < g {
        lo = hi;
        hi *= 2.0;
    }
    let mut u = lo;
    for _ in 0..100 {
        let residual = gaussian_integral_unchecked(u, lambda) - g;
        if residual == 0.0 {
            break;
        }
        if residual > 0.0 {
            hi = hi.min(u);
        } else {
            lo = lo.max(u);
        }
        let slope = gaussian_integrand(u, lambda);
        let mut next = u - residual / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 2.0 * f64::EPSILON * u.abs() {
            u = next;
            break;
        }
        u = next;
    }
    if target < 0.0 {
        -u
    } else {
        u
    }
}

/// `L_j = Σ_{k=0}^{j} C(j,k) T^{j-k} V^k / (2j - 2k - 1)`.
///
/// The denominator is odd, never zero; the `k = j` term enters with sign -1.
///
/// # Panics
/// If `j == 0`.
pub fn lagrangian_j(j: u32, kinetic: f64, potential: f64) -> f64 {
    assert!(j >= 1, "hierarchy index starts at 1");
    let mut binomial = 1.0;
    let mut sum = 0.0;
    for k in 0..=j {
        if k > 0 {
            binomial = binomial * (j - k + 1) as f64 / k as f64;
        }
        let denominator = 2 * i64::from(j) - 2 * i64::from(k) - 1;
        sum += binomial * powi(kinetic, j - k) * powi(potential, k) / denominator as f64;
    }
    sum
}

/// `H_j = H_N^j`.
///
/// # Panics
/// If `j == 0`.
pub fn hamiltonian_j(
    j: u32,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> f64 {
    assert!(j >= 1, "hierarchy index starts at 1");
    powi(additive_hamiltonian(state, potential, params), j)
}

/// `p_j`, the coefficient of `ε^{j-1}/j!` in the expansion of `p_λ`.
///
/// Evaluated as `j! Σ_{k=0}^{j-1} V^k/k! · a_{j-1-k}` with
/// `a_n = p^{2n+1} / (2^n n! (2n+1) m^n)`, so `p_1 = p` and
/// `p_2 = 2pV + p³/3m`.
///
/// # Panics
/// If `j == 0`.
pub fn momentum_j(j: u32, state: PhaseState, potential: &Potential, params: &SystemParams) -> f64 {
    assert!(j >= 1, "hierarchy index starts at 1");
    let coefficients = momentum_coefficients(j as usize, state, potential, params);
    factorial_times(j, coefficients[j as usize - 1])
}

/// `∂p_j/∂p` at fixed `x`, differentiated term by term.
///
/// # Panics
/// If `j == 0`.
pub fn momentum_j_p_derivative(
    j: u32,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> f64 {
    assert!(j >= 1, "hierarchy index starts at 1");
    let n = j as usize - 1;
    let m = params.mass();
    let p2 = state.p * state.p;
    let v = potential.eval(state.x);
    // d_i = p^{2i} / (2^i i! m^i) = ∂a_i/∂p;  b_k = V^k / k!
    let mut d = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    let (mut di, mut bk) = (1.0, 1.0);
    for i in 0..=n {
        if i > 0 {
            di *= p2 / (2.0 * i as f64 * m);
            bk *= v / i as f64;
        }
        d.push(di);
        b.push(bk);
    }
    let coefficient: f64 = (0..=n).map(|k| b[k] * d[n - k]).sum();
    factorial_times(j, coefficient)
}

/// `p_j` from the literal recursion `p_j = j![p_{j-1}V + p^{2j-1}/((j-1)! 2^{j-1} (2j-1) m^{j-1})]`
/// seeded with `p_0 = 0`.
///
/// Agrees with [`momentum_j`] for `j <= 2` or `V = 0` and differs otherwise;
/// it is not the series coefficient of `p_λ`. Kept for comparison reports.
///
/// # Panics
/// If `j == 0`.
pub fn momentum_j_printed(
    j: u32,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> f64 {
    assert!(j >= 1, "hierarchy index starts at 1");
    let m = params.mass();
    let p = state.p;
    let v = potential.eval(state.x);
    let mut previous = 0.0;
    // s = p^{2i-1} / ((i-1)! 2^{i-1} m^{i-1})
    let mut s = p;
    let mut factorial = 1.0;
    for i in 1..=j {
        if i > 1 {
            s *= p * p / ((i - 1) as f64 * 2.0 * m);
        }
        factorial *= i as f64;
        previous = factorial * (previous * v + s / (2 * i - 1) as f64);
    }
    previous
}

/// `c_n = p_{n+1} / (n+1)!` for `n = 0..levels`.
fn momentum_coefficients(
    levels: usize,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Vec<f64> {
    let m = params.mass();
    let p = state.p;
    let v = potential.eval(state.x);
    let mut a = Vec::with_capacity(levels);
    let mut b = Vec::with_capacity(levels);
    // s_n = p^{2n+1} / (2^n n! m^n), a_n = s_n / (2n+1)
    let (mut s, mut bk) = (p, 1.0);
    for n in 0..levels {
        if n > 0 {
            s *= p * p / (2.0 * n as f64 * m);
            bk *= v / n as f64;
        }
        a.push(s / (2 * n + 1) as f64);
        b.push(bk);
    }
    (0..levels)
        .map(|n| (0..=n).map(|k| b[k] * a[n - k]).sum())
        .collect()
}

fn factorial_times(j: u32, value: f64) -> f64 {
    (2..=j).fold(value, |acc, i| acc * i as f64)
}

/// `L_j`, `H_j`, `p_j` for `j = 1..=order` at one state.
pub fn hierarchy_rows(
    order: TruncationOrder,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Vec<HierarchyRow> {
    let t = kinetic_energy(state, params);
    let v = potential.eval(state.x);
    let coefficients = momentum_coefficients(order.get() as usize, state, potential, params);
    (1..=order.get())
        .map(|j| HierarchyRow {
            j,
            lagrangian: lagrangian_j(j, t, v),
            hamiltonian: hamiltonian_j(j, state, potential, params),
            momentum: factorial_times(j, coefficients[j as usize - 1]),
        })
        .collect()
}

/// Partial sum `Σ_{j=1}^{J} ε^{j-1}/j! · term_j` plus the constant offset
/// (`+mλ²` for `L`, `-mλ²` for `H`, none for `p`).
///
/// `ε^{j-1}/j!` is folded into each term, so `J = 64` stays finite.
pub fn truncated_series(
    order: TruncationOrder,
    kind: SeriesKind,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    let scale = energy_scale(params, "truncated_series", "the j = 1 hierarchy term")?;
    let eps = -1.0 / scale;
    let levels = order.get() as usize;
    match kind {
        SeriesKind::Hamiltonian => {
            let h = additive_hamiltonian(state, potential, params);
            let mut term = h;
            let mut sum = h;
            for j in 2..=levels {
                term *= eps * h / j as f64;
                sum += term;
            }
            Ok(sum - scale)
        }
        SeriesKind::Lagrangian => {
            let t = kinetic_energy(state, params);
            let v = potential.eval(state.x);
            // T^i/i! and V^k/k!, i, k <= J
            let mut tp = Vec::with_capacity(levels + 1);
            let mut vp = Vec::with_capacity(levels + 1);
            let (mut ti, mut vk) = (1.0, 1.0);
            for i in 0..=levels {
                if i > 0 {
                    ti *= t / i as f64;
                    vk *= v / i as f64;
                }
                tp.push(ti);
                vp.push(vk);
            }
            let mut weight = 1.0;
            let mut sum = 0.0;
            for j in 1..=levels {
                if j > 1 {
                    weight *= eps;
                }
                let level: f64 = (0..=j)
                    .map(|k| tp[j - k] * vp[k] / (2 * j as i64 - 2 * k as i64 - 1) as f64)
                    .sum();
                sum += weight * level;
            }
            Ok(sum + scale)
        }
        SeriesKind::Momentum => {
            let coefficients = momentum_coefficients(levels, state, potential, params);
            let mut weight = 1.0;
            let mut sum = 0.0;
            for (n, c) in coefficients.iter().enumerate() {
                if n > 0 {
                    weight *= eps;
                }
                sum += weight * c;
            }
            Ok(sum)
        }
    }
}

/// Distance of the shifted closed form from its additive counterpart:
/// `|L_λ - mλ² - (T - V)|` or `|H_λ + mλ² - H_N|`.
///
/// Both shifted forms are evaluated through `expm1` (using
/// `exp(-ẋ²/2λ²)·exp(-V/mλ²) = exp(-H_N/mλ²)`) so the `mλ²` offset does not
/// cancel digits. For `H_N >= 0` the Hamiltonian residual is at most
/// `H_N²/2mλ²`.
pub fn reduction_residual(
    kind: ReductionKind,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    let scale = energy_scale(params, "reduction_residual", "zero residual")?;
    let h = additive_hamiltonian(state, potential, params);
    let shifted_h = -scale * expm1(-h / scale);
    match kind {
        ReductionKind::Hamiltonian => Ok((shifted_h - h).abs()),
        ReductionKind::Lagrangian => {
            let kinetic = state.to_kinetic(params.mass());
            let p_lambda = multiplicative_momentum(kinetic, potential, params)?;
            let shifted_l = scale * expm1(-h / scale) + kinetic.xdot * p_lambda;
            let additive = kinetic_energy(state, params) - potential.eval(state.x);
            Ok((shifted_l - additive).abs())
        }
    }
}

/// `H_N / mλ²`; partial sums lose precision once this exceeds
/// [`CONDITIONING_LIMIT`].
pub fn conditioning_ratio(
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<f64> {
    let scale = energy_scale(params, "conditioning_ratio", "no truncation")?;
    Ok(additive_hamiltonian(state, potential, params) / scale)
}

pub fn is_ill_conditioned(
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> Result<bool> {
    Ok(conditioning_ratio(state, potential, params)?.abs() > CONDITIONING_LIMIT)
}

fn energy_scale(
    params: &SystemParams,
    operation: &'static str,
    additive: &'static str,
) -> Result<f64> {
    params.require_finite(operation, additive)?;
    Ok(params.energy_scale().expect("finite lambda"))
}
