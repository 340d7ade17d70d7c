//! Cluster-expansion lattice thermodynamics: semi-grand-canonical Monte Carlo,
//! reference expansions and two-phase boundary tracking in the (T, mu) plane.

pub mod atat_io;
pub mod ce;
pub mod drivers;
pub mod error;
pub mod lattice;
pub mod mc;
pub mod models;
pub mod thermo;

pub use error::{Error, Result};

/// Boltzmann constant in eV/K.
pub const KB_EV: f64 = 8.617e-5;
