//! Numerical symplectic dynamics near fixed points.

pub mod action;
pub mod census;
pub mod error;
pub mod expr;
pub mod flow;
pub mod genfun;
pub mod hamiltonian;
pub mod homology;
pub mod index;
pub mod orbits;
pub mod output;
pub mod scenario;
pub mod symplectic;

pub use error::{Error, Result};
