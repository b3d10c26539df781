//! Mediated-entanglement dynamics and quantum speed limits for small
//! multi-qudit systems.
//!
//! Everything here is `no_std` + `alloc`: dense complex linear algebra,
//! density states and information measures, the builtin Hamiltonians,
//! unitary and Lindblad evolution, closed-form time bounds, seeded random
//! ensembles and the `.hspec` Hamiltonian grammar. File formats, sweeps and
//! the command line live in the `medqsl` crate.
//!
//! Energies are stored in units of ħΩ, so every time in this crate is the
//! dimensionless `T = Ωt`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
mod error;
pub mod hamiltonian;
pub mod hspec;
pub mod linalg;
pub mod math;
pub mod qsl;
pub mod randgen;
pub mod state;

pub use dynamics::{JumpOperatorSet, Observables, ObserveConfig, TimeGrid, Trajectory};
pub use error::{Error, Result};
pub use hamiltonian::{EnergyMoments, Hamiltonian};
pub use linalg::{ComplexMatrix, EigDecomposition, C64};
pub use qsl::{BoundReport, ReferenceBounds};
pub use randgen::RngStream;
pub use state::{Bipartition, DensityState, SystemLayout};
