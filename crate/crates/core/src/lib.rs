//! Charge dynamics of a superconducting Cooper pair box.
//!
//! The box is modelled as two bosonic modes (the two superconducting
//! islands) holding a fixed total number `N` of Cooper pairs. The crate
//! provides:
//!
//! - [`fock`]: the `(N+1)`-dimensional fixed-number sector, ladder and
//!   channel operators, and the Bose-Hubbard, charge and qubit Hamiltonians;
//! - [`unitary`]: closed-system Schrödinger propagation and the charge
//!   oscillation observables;
//! - [`meanfield`]: the two-component Gross-Pitaevskii equations and the
//!   reduced phase-number (pendulum) system;
//! - [`lindblad`]: Kossakowski-Lindblad evolution with channel
//!   `b = a₁a₂†`, and the decay constants of Fock versus condensate states.
//!
//! Units have `ħ = 1`: energies are angular frequencies.

pub mod error;
pub mod fock;
pub mod lindblad;
pub mod meanfield;
pub mod ode;
pub mod unitary;

pub use error::{Error, Result};
pub use num_complex::Complex64;
