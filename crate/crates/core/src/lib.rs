//! pressure-lab: numerical pressure of the geometric potential for concrete
//! hyperbolic maps.
//!
//! The crate computes three families of pressure for the potential
//! `phi_u = -log |det df|_{E^u}|` on a registry of explicit systems (linear
//! toral automorphisms, piecewise-linear horseshoes, the Henon family):
//!
//! * saddle-point pressure over periodic orbits filtered by hyperbolicity
//!   strength `(alpha, c)`, with the `alpha -> 0, c -> 0` limit grid;
//! * classical pressure via unrestricted periodic-orbit sums and via transfer
//!   operators on cylinder discretizations;
//! * the variational supremum over Markov measures (equilibrium states from
//!   Perron eigendata).
//!
//! On systems with closed-form answers the three agree, and the `cli` runner
//! emits convergence tables and machine-readable reports comparing them.

// index-style loops are clearer than iterator chains in the dense matrix and
// lattice code, where rows and columns are addressed symmetrically
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod cocycle;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod orbits;
pub mod pressure;
pub mod report;
pub mod systems;

pub use error::{Error, Result};
pub use linalg::{Matrix, Point};
pub use systems::{MapSystem, MarkovCoding, SystemSpec};
