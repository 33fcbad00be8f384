//! Sparse high-dimensional regression with orthogonal-decomposition
//! pre-processing of the design.
//!
//! A typical pipeline centers `(X, y)`, applies a [`transform::TransformSpec`],
//! fits a penalized path with [`solver`], picks a λ with [`tuning`], and
//! scores the selected support with [`diagnostics`]. [`simgen`] generates the
//! benchmark designs and [`cli`] drives batch experiments.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod simgen;
pub mod solver;
pub mod transform;
pub mod tuning;

pub use error::{Error, Result};
pub use linalg::Matrix;
