//! Finite elements for the Kolmogorov equation `u_t - u_xx + x u_y = f` that
//! keep its hypocoercive structure at the discrete level.
//!
//! The discrete equation is tested with `V - div(A grad V)` for a symmetric
//! positive semidefinite `A`, which yields coercivity in `u_y` although the
//! operator only diffuses in `x`. This crate builds the meshes, spaces and
//! matrices, integrates in time, and checks the resulting estimates
//! numerically: coercivity of the bilinear form, exponential decay with a
//! computable rate, and convergence rates under refinement.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod field;
pub mod hypo;
pub mod hypo3d;
pub mod mesh;
pub mod output;
pub mod space;
pub mod sparse;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};
