//! Quantum emitters coupled to a photonic sawtooth lattice.
//!
//! Energies are in whatever unit the lattice hoppings are given in; the CLI
//! uses `J_AA = 1`.

pub mod bound_state;
pub mod circuit;
pub mod dynamics;
pub mod emission;
pub mod error;
pub mod green;
pub mod lattice;
pub mod propagate;
pub mod spin_model;

pub use error::{Result, SawtoothError, Warning};
pub use lattice::{Band, Direction, LatticeParams, Sublattice};
