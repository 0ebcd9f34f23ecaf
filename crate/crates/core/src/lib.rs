//! Kernel functions of multiply connected planar domains.
//!
//! This crate computes the Szegő, Garabedian, Green's, Poisson and Bergman
//! kernels and the Ahlfors maps of smooth finitely connected domains by
//! boundary integral methods, and verifies the representation identities that
//! tie the whole kernel family to just two Ahlfors maps.

pub mod ahlfors;
pub mod bie;
pub mod error;
pub mod geometry;
pub mod oracles;
pub mod szego;
pub mod zeros;

pub use error::{Error, Result};
pub use geometry::{
    boundary_grid, make_preset_domain, winding_number, BoundaryGrid, DomainSpec, Orientation,
    ParamCurve, Preset,
};
