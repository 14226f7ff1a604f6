//! Domain types shared by every module: potentials, system parameters,
//! phase/kinetic states, trajectories, and the two elementary energies.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Name of a built-in potential family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotentialFamily {
    Free,
    Harmonic,
    Quartic,
    Polynomial,
}

impl PotentialFamily {
    pub const ALL: [PotentialFamily; 4] = [
        PotentialFamily::Free,
        PotentialFamily::Harmonic,
        PotentialFamily::Quartic,
        PotentialFamily::Polynomial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PotentialFamily::Free => "free",
            PotentialFamily::Harmonic => "harmonic",
            PotentialFamily::Quartic => "quartic",
            PotentialFamily::Polynomial => "polynomial",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for PotentialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Potential energy `V(x)` with an exact derivative.
///
/// * `Free`: `V = 0`.
/// * `Harmonic { stiffness: k }`: `V = k x² / 2`.
/// * `Quartic { quadratic: a, quartic: b }`: `V = a x² / 2 + b x⁴ / 4`.
/// * `Polynomial(c)`: `V = Σ c_i x^i`, `c` non-empty.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Free,
    Harmonic { stiffness: f64 },
    Quartic { quadratic: f64, quartic: f64 },
    Polynomial(Vec<f64>),
}

impl Potential {
    pub fn harmonic(stiffness: f64) -> Self {
        Potential::Harmonic { stiffness }
    }

    pub fn quartic(quadratic: f64, quartic: f64) -> Self {
        Potential::Quartic { quadratic, quartic }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                reason: "polynomial potential needs at least one coefficient",
            });
        }
        check_coefficients(&coefficients)?;
        Ok(Potential::Polynomial(coefficients))
    }

    /// Builds a potential from a family tag and its coefficient list.
    ///
    /// `free` takes no coefficients, `harmonic` takes `[k]`, `quartic` takes
    /// `[a, b]` and `polynomial` takes `[c0, c1, ...]`.
    pub fn from_family(family: PotentialFamily, coefficients: &[f64]) -> Result<Self> {
        check_coefficients(coefficients)?;
        match (family, coefficients) {
            (PotentialFamily::Free, []) => Ok(Potential::Free),
            (PotentialFamily::Free, _) => Err(Error::InvalidParameter {
                name: "coefficients",
                reason: "free potential takes no coefficients",
            }),
            (PotentialFamily::Harmonic, [k]) => Ok(Potential::harmonic(*k)),
            (PotentialFamily::Harmonic, _) => Err(Error::InvalidParameter {
                name: "coefficients",
                reason: "harmonic potential takes exactly one coefficient [k]",
            }),
            (PotentialFamily::Quartic, [a, b]) => Ok(Potential::quartic(*a, *b)),
            (PotentialFamily::Quartic, _) => Err(Error::InvalidParameter {
                name: "coefficients",
                reason: "quartic potential takes exactly two coefficients [a, b]",
            }),
            (PotentialFamily::Polynomial, c) => Potential::polynomial(c.to_vec()),
        }
    }

    pub fn family(&self) -> PotentialFamily {
        match self {
            Potential::Free => PotentialFamily::Free,
            Potential::Harmonic { .. } => PotentialFamily::Harmonic,
            Potential::Quartic { .. } => PotentialFamily::Quartic,
            Potential::Polynomial(_) => PotentialFamily::Polynomial,
        }
    }

    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            Potential::Free => Vec::new(),
            Potential::Harmonic { stiffness } => alloc::vec![*stiffness],
            Potential::Quartic { quadratic, quartic } => alloc::vec![*quadratic, *quartic],
            Potential::Polynomial(c) => c.clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness } => 0.5 * stiffness * x * x,
            Potential::Quartic { quadratic, quartic } => {
                let x2 = x * x;
                0.5 * quadratic * x2 + 0.25 * quartic * x2 * x2
            }
            Potential::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
        }
    }

    /// `dV/dx`.
    pub fn grad(&self, x: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness } => stiffness * x,
            Potential::Quartic { quadratic, quartic } => quadratic * x + quartic * x * x * x,
            Potential::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, &ci)| acc * x + i as f64 * ci),
        }
    }
}

fn check_coefficients(coefficients: &[f64]) -> Result<()> {
    if coefficients.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "coefficients",
            reason: "potential coefficients must be finite",
        })
    }
}

/// Velocity-scale parameter λ. `Infinite` selects the additive limit exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

impl Lambda {
    pub fn is_finite(self) -> bool {
        matches!(self, Lambda::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Lambda::Finite(l) => Some(l),
            Lambda::Infinite => None,
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Finite(l) => write!(f, "{l}"),
            Lambda::Infinite => f.write_str("infinite"),
        }
    }
}

/// Mass `m > 0` and multiplicative parameter `λ > 0` (or infinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    mass: f64,
    lambda: Lambda,
}

impl SystemParams {
    pub fn new(mass: f64, lambda: Lambda) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mass",
                reason: "must be finite and > 0",
            });
        }
        if let Lambda::Finite(l) = lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "lambda",
                    reason: "must be finite and > 0, or infinite",
                });
            }
        }
        Ok(SystemParams { mass, lambda })
    }

    /// Additive limit `λ = ∞`.
    pub fn additive(mass: f64) -> Result<Self> {
        Self::new(mass, Lambda::Infinite)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: Lambda) -> Result<Self> {
        Self::new(self.mass, lambda)
    }

    /// The energy scale `mλ²`, or `None` in the additive limit.
    pub fn energy_scale(&self) -> Option<f64> {
        self.lambda.finite().map(|l| self.mass * l * l)
    }

    pub(crate) fn require_finite(
        &self,
        operation: &'static str,
        additive: &'static str,
    ) -> Result<f64> {
        self.lambda.finite().ok_or(Error::InfiniteLambda {
            operation,
            additive,
        })
    }
}

/// Phase-space point `(x, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseState {
    pub x: f64,
    pub p: f64,
}

impl PhaseState {
    pub const fn new(x: f64, p: f64) -> Self {
        PhaseState { x, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }

    pub fn to_kinetic(self, mass: f64) -> KineticState {
        KineticState {
            x: self.x,
            xdot: self.p / mass,
        }
    }

    /// Euclidean distance in the phase plane.
    pub fn distance(&self, other: &PhaseState) -> f64 {
        crate::math::hypot(self.x - other.x, self.p - other.p)
    }
}

/// Configuration-space point `(x, ẋ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KineticState {
    pub x: f64,
    pub xdot: f64,
}

impl KineticState {
    pub const fn new(x: f64, xdot: f64) -> Self {
        KineticState { x, xdot }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.xdot.is_finite()
    }

    pub fn to_phase(self, mass: f64) -> PhaseState {
        PhaseState {
            x: self.x,
            p: mass * self.xdot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: PhaseState,
}

/// Time-ordered phase states plus the `H_N` value of the first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    energy: f64,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>, energy: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if let Some(i) = samples
            .windows(2)
            .position(|w| w[0].t.is_nan() || w[1].t.is_nan() || w[1].t <= w[0].t)
        {
            return Err(Error::NonIncreasingTimes { index: i + 1 });
        }
        Ok(Trajectory { samples, energy })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }
}

/// `T = p² / 2m`.
pub fn kinetic_energy(state: PhaseState, params: &SystemParams) -> f64 {
    state.p * state.p / (2.0 * params.mass())
}

/// `H_N = T + V`.
pub fn additive_hamiltonian(
    state: PhaseState,
    potential: &Potential,
    params: &SystemParams,
) -> f64 {
    kinetic_energy(state, params) + potential.eval(state.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit() -> SystemParams {
        SystemParams::new(1.0, Lambda::Infinite).unwrap()
    }

    fn builtins() -> [Potential; 4] {
        [
            Potential::Free,
            Potential::harmonic(1.3),
            Potential::quartic(-1.0, 0.5),
            Potential::polynomial(vec![0.3, -1.2, 0.0, 0.7, -0.05]).unwrap(),
        ]
    }

    #[test]
    fn kinetic_energy_examples() {
        assert_eq!(kinetic_energy(PhaseState::new(0.0, 0.0), &unit()), 0.0);
        assert_eq!(kinetic_energy(PhaseState::new(3.0, 2.0), &unit()), 2.0);
        let m4 = SystemParams::new(4.0, Lambda::Infinite).unwrap();
        assert_eq!(kinetic_energy(PhaseState::new(0.0, 2.0), &m4), 0.5);
    }

    #[test]
    fn additive_hamiltonian_examples() {
        let p = unit();
        assert_eq!(
            additive_hamiltonian(PhaseState::new(1.0, 0.0), &Potential::Free, &p),
            0.0
        );
        let h = Potential::harmonic(1.0);
        assert_eq!(additive_hamiltonian(PhaseState::new(1.0, 1.0), &h, &p), 1.0);
        assert_eq!(additive_hamiltonian(PhaseState::new(0.0, 2.0), &h, &p), 2.0);
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(SystemParams::new(0.0, Lambda::Infinite).is_err());
        assert!(SystemParams::new(-1.0, Lambda::Finite(1.0)).is_err());
        assert!(SystemParams::new(1.0, Lambda::Finite(0.0)).is_err());
        assert!(SystemParams::new(1.0, Lambda::Finite(f64::NAN)).is_err());
        assert!(SystemParams::new(1.0, Lambda::Finite(f64::INFINITY)).is_err());
        let p = SystemParams::new(2.0, Lambda::Finite(3.0)).unwrap();
        assert_eq!(p.energy_scale(), Some(18.0));
        assert_eq!(unit().energy_scale(), None);
    }

    #[test]
    fn potential_from_family_validates_arity() {
        assert_eq!(
            Potential::from_family(PotentialFamily::Harmonic, &[2.0]).unwrap(),
            Potential::harmonic(2.0)
        );
        assert!(Potential::from_family(PotentialFamily::Harmonic, &[]).is_err());
        assert!(Potential::from_family(PotentialFamily::Free, &[1.0]).is_err());
        assert!(Potential::from_family(PotentialFamily::Quartic, &[1.0]).is_err());
        assert!(Potential::from_family(PotentialFamily::Polynomial, &[]).is_err());
        assert!(Potential::from_family(PotentialFamily::Polynomial, &[f64::NAN]).is_err());
        for fam in PotentialFamily::ALL {
            assert_eq!(PotentialFamily::from_name(fam.name()), Some(fam));
        }
        assert_eq!(PotentialFamily::from_name("morse"), None);
    }

    #[test]
    fn polynomial_eval_and_grad() {
        let v = Potential::polynomial(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.eval(2.0), 1.0 + 4.0 + 12.0);
        assert_eq!(v.grad(2.0), 2.0 + 12.0);
        let c = Potential::polynomial(vec![5.0]).unwrap();
        assert_eq!(c.grad(3.0), 0.0);
    }

    #[test]
    fn grad_matches_central_differences() {
        // Deterministic stand-in for 100 random points on [-5, 5].
        for v in builtins() {
            for i in 0..100 {
                let x = -5.0 + 10.0 * ((i as f64 * 0.618_033_988_75) % 1.0);
                let h = 1e-5 * x.abs().max(1.0);
                let fd = (v.eval(x + h) - v.eval(x - h)) / (2.0 * h);
                let g = v.grad(x);
                assert!(
                    (g - fd).abs() / g.abs().max(1.0) < 1e-6,
                    "{v:?} at x={x}: {g} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn trajectory_invariants() {
        let s = |t| Sample {
            t,
            state: PhaseState::default(),
        };
        assert_eq!(Trajectory::new(vec![], 0.0), Err(Error::EmptyTrajectory));
        assert_eq!(
            Trajectory::new(vec![s(0.0), s(1.0), s(1.0)], 0.0),
            Err(Error::NonIncreasingTimes { index: 2 })
        );
        let t = Trajectory::new(vec![s(0.0), s(0.5)], 2.0).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.last().t, 0.5);
        assert_eq!(t.energy(), 2.0);
    }

    #[test]
    fn kinetic_phase_round_trip() {
        for m in [0.5, 1.0, 3.0] {
            for i in 0..200 {
                let xdot = -7.0 + 0.0731 * i as f64;
                let k = KineticState::new(0.25, xdot);
                let back = k.to_phase(m).to_kinetic(m);
                assert_eq!(back.x, k.x);
                assert!((back.xdot - xdot).abs() <= f64::EPSILON * xdot.abs());
            }
        }
    }
}
