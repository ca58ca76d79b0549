//! Scattering of scalar and electromagnetic waves on square lattices of
//! zero-range scatterers and point dipoles.

pub mod error;
pub mod lattice_sums;
pub mod limits;
pub mod multi_center;
pub mod plane_lattice;
pub mod quadrature;
pub mod single_center;
pub mod special;
pub mod types;

pub use error::{Error, Result};
pub use types::{branch_sqrt, make_incident_wave, Frequency, LatticeConfig, Mode, ModeKind, WaveVector};
