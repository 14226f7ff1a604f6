//! Numerical toolkit for the multiplicative Lagrangian and Hamiltonian of a
//! system with one degree of freedom.
//!
//! The multiplicative Hamiltonian `H_λ = -mλ² exp(-H_N / mλ²)` and its
//! Lagrangian partner expand into infinite additive hierarchies `L_j`, `H_j`,
//! `p_j`. This crate evaluates the closed forms and the hierarchy terms,
//! checks the per-level Legendre and Hamilton identities, integrates the
//! hierarchy and multiplicative flows on phase space, and applies the
//! λ-extended canonical transformations built from `F_λ = mλ² ln(1 + F/mλ²)`.
//!
//! The crate is `no_std` and only needs `alloc` (trajectories and sample
//! buffers). IO, configuration and file formats live in the `hamflow` crate.
//!
//! ```
//! use hamflow_core::{hierarchy, Lambda, PhaseState, Potential, SystemParams};
//!
//! let params = SystemParams::new(1.0, Lambda::Finite(10.0)).unwrap();
//! let v = Potential::harmonic(1.0);
//! let state = PhaseState::new(1.0, 1.0);
//! let closed = hierarchy::multiplicative_hamiltonian(state, &v, &params).unwrap();
//! assert!((closed + 100.0 * (-0.01f64).exp()).abs() < 1e-12);
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod canonical;
pub mod dynamics;
mod error;
pub mod fit;
pub mod hierarchy;
mod math;
pub mod quadrature;
pub mod roots;
pub mod system;

pub use error::{Error, Result};
pub use system::{
    additive_hamiltonian, kinetic_energy, KineticState, Lambda, PhaseState, Potential,
    PotentialFamily, Sample, SystemParams, Trajectory,
};
