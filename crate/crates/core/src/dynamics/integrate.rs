use alloc::vec::Vec;

use super::flow::{FlowField, FlowKind};
use crate::error::{Error, Result};
use crate::math::floor;
use crate::system::{
    additive_hamiltonian, PhaseState, Potential, Sample, SystemParams, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Kick–drift–kick leapfrog; separable (standard) flow only.
    Leapfrog,
}

/// Fixed-step integration over `[0, t_end]`.
///
/// The grid has `n = max(1, floor(t_end/dt))` steps of width `t_end/n`, so
/// there are `n + 1` samples and the last one lands exactly on `t_end`. The
/// effective step is within one part in `n` of the requested `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    method: Method,
    dt: f64,
    t_end: f64,
}

impl IntegratorConfig {
    pub fn new(method: Method, dt: f64, t_end: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "must be finite and > 0",
            });
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: "must be finite and > 0",
            });
        }
        Ok(IntegratorConfig { method, dt, t_end })
    }

    pub fn rk4(dt: f64, t_end: f64) -> Result<Self> {
        Self::new(Method::Rk4, dt, t_end)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Same method and step, different end time.
    pub fn with_t_end(&self, t_end: f64) -> Result<Self> {
        Self::new(self.method, self.dt, t_end)
    }

    pub fn steps(&self) -> usize {
        // The small bias keeps t_end = k·dt from losing a step to rounding.
        (floor(self.t_end / self.dt * (1.0 + 1e-12)) as usize).max(1)
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.steps() as f64
    }
}

/// Integrates `field` from `start` on the grid described by `cfg`.
pub fn integrate(
    field: &FlowField,
    start: PhaseState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let energy = additive_hamiltonian(start, field.potential(), field.params());
    match cfg.method() {
        Method::Rk4 => integrate_with(|s| Ok(field.eval(s)), start, cfg, energy),
        Method::Leapfrog => {
            if field.kind() != FlowKind::Standard {
                return Err(Error::Unsupported(
                    "leapfrog needs a separable Hamiltonian (standard flow only)",
                ));
            }
            leapfrog(field.potential(), field.params(), start, cfg, energy)
        }
    }
}

/// RK4 over an arbitrary vector field; `energy` is stored on the trajectory.
pub(crate) fn integrate_with<F>(
    field: F,
    start: PhaseState,
    cfg: &IntegratorConfig,
    energy: f64,
) -> Result<Trajectory>
where
    F: Fn(PhaseState) -> Result<(f64, f64)>,
{
    let n = cfg.steps();
    let h = cfg.step();
    let mut samples = Vec::with_capacity(n + 1);
    let mut state = start;
    samples.push(Sample { t: 0.0, state });
    let shifted =
        |s: PhaseState, k: (f64, f64), c: f64| PhaseState::new(s.x + c * k.0, s.p + c * k.1);
    for i in 1..=n {
        let k1 = field(state)?;
        let k2 = field(shifted(state, k1, 0.5 * h))?;
        let k3 = field(shifted(state, k2, 0.5 * h))?;
        let k4 = field(shifted(state, k3, h))?;
        let next = PhaseState::new(
            state.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            state.p + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        if !next.is_finite() {
            return Err(Error::NonFiniteState {
                last_good_time: samples[i - 1].t,
            });
        }
        state = next;
        let t = if i == n { cfg.t_end() } else { i as f64 * h };
        samples.push(Sample { t, state });
    }
    Trajectory::new(samples, energy)
}

fn leapfrog(
    potential: &Potential,
    params: &SystemParams,
    start: PhaseState,
    cfg: &IntegratorConfig,
    energy: f64,
) -> Result<Trajectory> {
    let n = cfg.steps();
    let h = cfg.step();
    let m = params.mass();
    let mut samples = Vec::with_capacity(n + 1);
    let mut s = start;
    samples.push(Sample { t: 0.0, state: s });
    for i in 1..=n {
        let p_half = s.p - 0.5 * h * potential.grad(s.x);
        let x = s.x + h * p_half / m;
        let p = p_half - 0.5 * h * potential.grad(x);
        let next = PhaseState::new(x, p);
        if !next.is_finite() {
            return Err(Error::NonFiniteState {
                last_good_time: samples[i - 1].t,
            });
        }
        s = next;
        let t = if i == n { cfg.t_end() } else { i as f64 * h };
        samples.push(Sample { t, state: s });
    }
    Trajectory::new(samples, energy)
}

/// `max_k |H_N(state_k) - traj.energy|`.
pub fn energy_drift(traj: &Trajectory, potential: &Potential, params: &SystemParams) -> f64 {
    traj.samples()
        .iter()
        .map(|s| (additive_hamiltonian(s.state, potential, params) - traj.energy()).abs())
        .fold(0.0, f64::max)
}
