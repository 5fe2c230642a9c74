//! Numerical laboratory for the massless scalar field in 1+1 dimensions.
//!
//! The crate evaluates the distinguished two-point functions of the field,
//! a family of regular reference states built from a compactly supported
//! density `ψ`, the vertex-operator expansion of the sine-Gordon S-matrix with
//! its finite-norm and causality checks, the quasiequivalence analysis of the
//! field algebra on bounded intervals, and the fermionic vertex operators of
//! the Thirring model.

pub mod densities;
pub mod error;
pub mod geometry;
pub mod lightcone;
pub mod mc;
pub mod propagators;
pub mod quad;
pub mod quasiequiv;
pub mod smatrix;
pub mod spline;
pub mod states;
pub mod thirring;
pub mod vertex;

pub use error::{Result, SgError};
pub use geometry::Point;
pub use num_complex::Complex64;
