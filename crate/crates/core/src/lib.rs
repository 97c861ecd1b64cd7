//! Nonlinear eigenproblems `∂J(u) ∋ λ ∂H(u)` of convex p-homogeneous functionals.
//!
//! Two problem instances implement [`functional::FunctionalPair`]: a dense SPD
//! matrix ([`spd::SpdInstance`]) and the mean-value p-Laplacian on a square or
//! L-shaped grid ([`plaplace::PLaplaceInstance`]). The solvers in [`eigen`] work
//! on either; [`metrics`] holds the per-iterate diagnostics and [`runner`]
//! turns a JSON [`config::ExperimentConfig`] into a run directory.

pub mod config;
pub mod eigen;
pub mod error;
pub mod functional;
pub mod grid;
pub mod inner;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod plaplace;
pub mod roots;
pub mod runner;
pub mod spd;
pub mod validation;

pub use error::{Error, Result};
