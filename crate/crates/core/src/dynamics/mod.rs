//! Poisson brackets, the per-level Legendre and Hamilton identities, the
//! hierarchy and multiplicative flows on phase space, and trajectory
//! comparisons that show every flow traces the same orbit at its own rate.

mod compare;
mod flow;
mod integrate;

pub use compare::{coincidence_metric, rescaling_check, rescaling_check_with};
pub use flow::{printed_rate_factor, rate_factor, FlowField, FlowKind, RateConvention};
pub(crate) use integrate::integrate_with;
pub use integrate::{energy_drift, integrate, IntegratorConfig, Method};

use crate::hierarchy::{hamiltonian_j, lagrangian_j, momentum_j, momentum_j_p_derivative};
use crate::math::powi;
use crate::system::{
    additive_hamiltonian, kinetic_energy, KineticState, PhaseState, Potential, SystemParams,
};

/// Relative finite-difference step used wherever a derivative has no
/// analytic form.
pub const FD_STEP: f64 = 1e-6;

/// `{A, B} = ∂A/∂x ∂B/∂p - ∂A/∂p ∂B/∂x` by centred differences with step
/// `1e-6 · max(1, |x|, |p|)`.
pub fn poisson_bracket<A, B>(a: A, b: B, state: PhaseState) -> f64
where
    A: Fn(PhaseState) -> f64,
    B: Fn(PhaseState) -> f64,
{
    let h = FD_STEP * 1f64.max(state.x.abs()).max(state.p.abs());
    let dx = |f: &dyn Fn(PhaseState) -> f64| {
        (f(PhaseState::new(state.x + h, state.p)) - f(PhaseState::new(state.x - h, state.p)))
            / (2.0 * h)
    };
    let dp = |f: &dyn Fn(PhaseState) -> f64| {
        (f(PhaseState::new(state.x, state.p + h)) - f(PhaseState::new(state.x, state.p - h)))
            / (2.0 * h)
    };
    dx(&a) * dp(&b) - dp(&a) * dx(&b)
}

/// `|L_j - (p_j ẋ - H_j)|` with `T = mẋ²/2` and `p = mẋ`.
///
/// # Panics
/// If `j == 0`.
pub fn legendre_residual_j(
    j: u32,
    state: KineticState,
    potential: &Potential,
    params: &SystemParams,
) -> f64 {
    let phase = state.to_phase(params.mass());
    let t = kinetic_energy(phase, params);
    let v = potential.eval(state.x);
    let l = lagrangian_j(j, t, v);
    let p = momentum_j(j, phase, potential, params);
    let h = hamiltonian_j(j, phase, potential, params);
    (l - (p * state.xdot - h)).abs()
}

/// Residuals of the level-`j` Hamilton equations with the on-shell
/// substitutions `ẋ = p/m`, `ṗ = -V'(x)`:
///
/// ```text
/// r_x = ∂H_j/∂x - (∂p_j/∂p) V'(x)
/// r_p = ∂H_j/∂p - (∂p_j/∂p) p/m
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonResiduals {
    pub r_x: f64,
    pub r_p: f64,
}

impl HamiltonResiduals {
    pub fn max_abs(&self) -> f64 {
        self.r_x.abs().max(self.r_p.abs())
    }
}

/// Level-`j` Hamilton residuals from analytic partials.
///
/// # Panics
/// If `j == 0`.
pub fn hamilton_identity_residuals(
    j: u32,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> HamiltonResiduals {
    assert!(j >= 1, "hierarchy index starts at 1");
    let m = params.mass();
    let h = additive_hamiltonian(state, potential, params);
    let outer = j as f64 * powi(h, j - 1);
    let grad = potential.grad(state.x);
    let dh_dx = outer * grad;
    let dh_dp = outer * state.p / m;
    let dpj_dp = momentum_j_p_derivative(j, state, potential, params);
    HamiltonResiduals {
        r_x: dh_dx - dpj_dp * grad,
        r_p: dh_dp - dpj_dp * state.p / m,
    }
}

/// Level-`j` Hamilton residuals with every partial replaced by a centred
/// difference of `H_j` and `p_j`; the cross-check for
/// [`hamilton_identity_residuals`].
///
/// # Panics
/// If `j == 0`.
pub fn hamilton_identity_residuals_fd(
    j: u32,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> HamiltonResiduals {
    let m = params.mass();
    let hx = FD_STEP * state.x.abs().max(1.0);
    let hp = FD_STEP * state.p.abs().max(1.0);
    let hj = |s: PhaseState| hamiltonian_j(j, s, potential, params);
    let pj = |s: PhaseState| momentum_j(j, s, potential, params);
    let at = |x: f64, p: f64| PhaseState::new(x, p);
    let dh_dx = (hj(at(state.x + hx, state.p)) - hj(at(state.x - hx, state.p))) / (2.0 * hx);
    let dh_dp = (hj(at(state.x, state.p + hp)) - hj(at(state.x, state.p - hp))) / (2.0 * hp);
    let dpj_dp = (pj(at(state.x, state.p + hp)) - pj(at(state.x, state.p - hp))) / (2.0 * hp);
    let grad = potential.grad(state.x);
    HamiltonResiduals {
        r_x: dh_dx - dpj_dp * grad,
        r_p: dh_dp - dpj_dp * state.p / m,
    }
}

/// Scale `max(1, j |H_N|^{j-1})` against which Hamilton residuals are judged.
pub fn hamilton_residual_scale(
    j: u32,
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> f64 {
    let h = additive_hamiltonian(state, potential, params);
    (j as f64 * powi(h.abs(), j.saturating_sub(1))).max(1.0)
}
