//! High-order weight-adjusted discontinuous Galerkin solver for low-frequency
//! Biot poroelastic waves on affine simplicial meshes.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod planewave;
pub mod refelem;
pub mod solver;
pub mod wadg;

pub use error::{Error, Result};
