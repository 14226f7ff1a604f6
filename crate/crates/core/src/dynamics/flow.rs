use core::fmt;

use crate::error::{Error, Result};
use crate::math::{exp, powi};
use crate::system::{additive_hamiltonian, PhaseState, Potential, SystemParams};

/// Which Hamiltonian generates the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowKind {
    /// `H_1 = H_N`.
    Standard,
    /// `H_j = H_N^j`, `j >= 1`.
    Hierarchy(u32),
    /// `H_λ = -mλ² exp(-H_N/mλ²)`, finite λ only.
    Multiplicative,
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowKind::Standard => f.write_str("standard"),
            FlowKind::Hierarchy(j) => write!(f, "hierarchy_{j}"),
            FlowKind::Multiplicative => f.write_str("multiplicative"),
        }
    }
}

/// Which time-rescaling factor relates a flow to the standard one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RateConvention {
    /// Chain-rule factors `dH/dH_N`: `j E^{j-1}` and `exp(-E/mλ²)`.
    #[default]
    Derived,
    /// `2 E^j / (mλ²)^{j-1}`, as printed for the `t_j` relation. Only defined
    /// for hierarchy levels; kept to demonstrate that it fails the
    /// rescaling check.
    Printed,
}

/// Hamiltonian vector field `(ẋ, ṗ) = (∂H/∂p, -∂H/∂x)` of one flow kind.
///
/// Every kind is a function of `H_N` alone, so each field is the standard
/// field `(p/m, -V')` times the scalar `dH/dH_N`, and all of them conserve
/// `H_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    kind: FlowKind,
    potential: Potential,
    params: SystemParams,
}

impl FlowField {
    pub fn new(kind: FlowKind, potential: Potential, params: SystemParams) -> Result<Self> {
        match kind {
            FlowKind::Hierarchy(0) => Err(Error::InvalidParameter {
                name: "j",
                reason: "hierarchy flows start at j = 1",
            }),
            FlowKind::Multiplicative if !params.lambda().is_finite() => {
                Err(Error::InfiniteLambda {
                    operation: "multiplicative flow",
                    additive: "the standard flow",
                })
            }
            _ => Ok(FlowField {
                kind,
                potential,
                params,
            }),
        }
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// `dH/dH_N` at `state`.
    pub fn factor(&self, state: PhaseState) -> f64 {
        let h = additive_hamiltonian(state, &self.potential, &self.params);
        derived_factor(self.kind, h, &self.params)
    }

    /// `(dx/dt, dp/dt)` at `state`.
    pub fn eval(&self, state: PhaseState) -> (f64, f64) {
        let c = self.factor(state);
        (
            c * state.p / self.params.mass(),
            -c * self.potential.grad(state.x),
        )
    }
}

fn derived_factor(kind: FlowKind, energy: f64, params: &SystemParams) -> f64 {
    match kind {
        FlowKind::Standard => 1.0,
        FlowKind::Hierarchy(j) => j as f64 * powi(energy, j - 1),
        FlowKind::Multiplicative => {
            let scale = params
                .energy_scale()
                .expect("multiplicative flow has finite lambda");
            exp(-energy / scale)
        }
    }
}

/// Rate at which the `kind` flow advances along the energy shell `E`
/// relative to the standard flow: `j E^{j-1}` for `H_j`, `exp(-E/mλ²)` for
/// `H_λ`.
pub fn rate_factor(kind: FlowKind, energy: f64, params: &SystemParams) -> Result<f64> {
    match kind {
        FlowKind::Hierarchy(0) => Err(Error::InvalidParameter {
            name: "j",
            reason: "hierarchy flows start at j = 1",
        }),
        FlowKind::Multiplicative if !params.lambda().is_finite() => Err(Error::InfiniteLambda {
            operation: "multiplicative rate factor",
            additive: "the standard rate 1",
        }),
        _ => Ok(derived_factor(kind, energy, params)),
    }
}

/// The printed relation `∂/∂t_j = 2E^j/(mλ²)^{j-1} ∂/∂t_1`.
///
/// `Standard` is level 1 (`2E`). The multiplicative flow has no printed
/// counterpart.
pub fn printed_rate_factor(kind: FlowKind, energy: f64, params: &SystemParams) -> Result<f64> {
    let j = match kind {
        FlowKind::Standard => 1,
        FlowKind::Hierarchy(0) => {
            return Err(Error::InvalidParameter {
                name: "j",
                reason: "hierarchy flows start at j = 1",
            })
        }
        FlowKind::Hierarchy(j) => j,
        FlowKind::Multiplicative => {
            return Err(Error::Unsupported(
                "no printed rate factor for the multiplicative flow",
            ))
        }
    };
    if j == 1 {
        return Ok(2.0 * energy);
    }
    let scale = params.require_finite("printed rate factor", "level 1 only")?;
    let scale = params.mass() * scale * scale;
    Ok(2.0 * powi(energy, j) / powi(scale, j - 1))
}

pub(crate) fn rate_with(
    convention: RateConvention,
    kind: FlowKind,
    energy: f64,
    params: &SystemParams,
) -> Result<f64> {
    match convention {
        RateConvention::Derived => rate_factor(kind, energy, params),
        RateConvention::Printed => printed_rate_factor(kind, energy, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::poisson_bracket;
    use crate::hierarchy::{hamiltonian_j, multiplicative_hamiltonian};
    use crate::system::Lambda;

    fn params(l: Lambda) -> SystemParams {
        SystemParams::new(1.0, l).unwrap()
    }

    #[test]
    fn rate_examples() {
        let p = params(Lambda::Finite(1.0));
        assert_eq!(rate_factor(FlowKind::Hierarchy(1), 7.3, &p).unwrap(), 1.0);
        assert_eq!(rate_factor(FlowKind::Standard, 7.3, &p).unwrap(), 1.0);
        assert_eq!(rate_factor(FlowKind::Hierarchy(3), 2.0, &p).unwrap(), 12.0);
        let r = rate_factor(FlowKind::Multiplicative, 1.0, &p).unwrap();
        assert!((r - 0.367_879_441_171_442_33).abs() < 1e-15);
        assert!(rate_factor(FlowKind::Multiplicative, 1.0, &params(Lambda::Infinite)).is_err());
        assert!(rate_factor(FlowKind::Hierarchy(0), 1.0, &p).is_err());
    }

    #[test]
    fn printed_factor_values() {
        let p = params(Lambda::Finite(2.0));
        assert_eq!(
            printed_rate_factor(FlowKind::Standard, 0.5, &p).unwrap(),
            1.0
        );
        let f2 = printed_rate_factor(FlowKind::Hierarchy(2), 1.0, &p).unwrap();
        assert_eq!(f2, 0.5);
        assert!(printed_rate_factor(FlowKind::Multiplicative, 1.0, &p).is_err());
        assert!(
            printed_rate_factor(FlowKind::Hierarchy(2), 1.0, &params(Lambda::Infinite)).is_err()
        );
    }

    #[test]
    fn field_examples() {
        let osc = Potential::harmonic(1.0);
        let p = params(Lambda::Finite(2.0));
        let standard = FlowField::new(FlowKind::Standard, osc.clone(), p).unwrap();
        let j1 = FlowField::new(FlowKind::Hierarchy(1), osc.clone(), p).unwrap();
        let j2 = FlowField::new(FlowKind::Hierarchy(2), osc.clone(), p).unwrap();
        for i in 0..10 {
            let s = PhaseState::new(0.3 * i as f64 - 1.0, 0.5 - 0.2 * i as f64);
            assert_eq!(standard.eval(s), j1.eval(s));
        }
        assert_eq!(j2.eval(PhaseState::new(0.0, 0.0)), (0.0, 0.0));
        assert!(FlowField::new(FlowKind::Multiplicative, osc, params(Lambda::Infinite)).is_err());
    }

    #[test]
    fn multiplicative_field_approaches_standard() {
        let osc = Potential::harmonic(1.0);
        let s = PhaseState::new(0.8, -0.6);
        let std =
            FlowField::new(FlowKind::Standard, osc.clone(), params(Lambda::Infinite)).unwrap();
        let (sx, sp) = std.eval(s);
        let norm = libm::hypot(sx, sp);
        for l in [1.0, 10.0, 100.0, 1000.0] {
            let p = params(Lambda::Finite(l));
            let f = FlowField::new(FlowKind::Multiplicative, osc.clone(), p).unwrap();
            let (fx, fp) = f.eval(s);
            let bound = 0.5 / (l * l) * norm;
            assert!(libm::hypot(fx - sx, fp - sp) <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fields_match_poisson_brackets() {
        let v = Potential::quartic(1.0, 0.2);
        let p = params(Lambda::Finite(1.3));
        let s = PhaseState::new(0.7, 0.4);
        for kind in [FlowKind::Hierarchy(3), FlowKind::Multiplicative] {
            let field = FlowField::new(kind, v.clone(), p).unwrap();
            let h = |st: PhaseState| match kind {
                FlowKind::Multiplicative => multiplicative_hamiltonian(st, &v, &p).unwrap(),
                FlowKind::Hierarchy(j) => hamiltonian_j(j, st, &v, &p),
                FlowKind::Standard => unreachable!(),
            };
            let (dx, dp) = field.eval(s);
            assert!((poisson_bracket(|st| st.x, h, s) - dx).abs() < 1e-8);
            assert!((poisson_bracket(|st| st.p, h, s) - dp).abs() < 1e-8);
        }
    }
}
