//! Desk-scale numerical laboratory for fully nonlinear path-dependent
//! PDEs: sublinear expectations over bounded control families with
//! randomized stopping on scenario lattices, jet-based viscosity checks,
//! sup-convolution regularization with comparison pipelines, and the
//! Hilbert-space lift of path functionals.

pub mod cli;
pub mod error;
pub mod expectation;
pub mod experiments;
pub mod hilbert;
pub mod lattice;
pub mod pathspace;
pub mod registry;
pub mod regularization;
pub mod viscosity;
pub mod tol;

pub use error::{PpdeError, Result};
