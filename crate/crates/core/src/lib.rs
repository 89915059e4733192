//! Desk-scale numerical toolkit for the effective dynamics of a dilute Bose
//! gas with a partially attractive pair interaction.
//!
//! The crate is organized around five subsystems:
//!
//! - [`potentials`]: the admissible radial potential family, lattice covering
//!   numbers, and the quadratic-form admissibility checks;
//! - [`scattering`]: zero-energy radial scattering, the scattering length,
//!   and the auxiliary shell potential with its matched scattering state;
//! - [`gp`]: split-step spectral propagation of the cubic one-body equation
//!   and its energy functional;
//! - [`manybody`]: exact few-body dynamics, reduced densities, condensate
//!   counting projectors, configuration indicators, and the energy-difference
//!   decomposition;
//! - [`inequalities`]: desk-scale verification of the operator positivity
//!   statements and combinatorial identities the derivation relies on.
//!
//! [`compare`] co-evolves a few-body state against the one-body field and
//! emits the diagnostics time series.

pub mod compare;
pub mod error;
pub mod gp;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod linalg;
pub mod manybody;
pub mod potentials;
pub mod profile;
pub mod radial;
pub mod scattering;
pub mod stats;

pub use error::{CoreError, Result};
pub use gp::{ExternalPotential, GPField};
pub use manybody::{CountingWeight, ManyBodyState, ReducedDensity};
pub use potentials::{PotentialSpec, ValidationReport};
pub use profile::RadialProfile;
pub use scattering::{ModifiedScattering, ScatteringSolution};
