//! Boundary-integral engine.
//!
//! Periodic trapezoid quadrature over the analytic boundary grids, Cauchy
//! transforms (with FFT-upsampled densities near the boundary), the
//! Kerzman–Stein second-kind solve for the Szegő boundary trace, and a
//! double-layer Dirichlet solver with one logarithmic source per hole.

pub mod cauchy;
pub mod dirichlet;
pub mod kst;
pub mod spectral;

pub use cauchy::{boundary_integral_dw, cauchy_integral, BoundaryField, CauchyEval};
pub use dirichlet::{DirichletSolver, HarmonicEvaluator};
pub use kst::KstSolver;
