//! Verification lab for explicit lower bounds on Laplace-Beltrami eigenvalues
//! of closed manifolds under a Bakry-Emery Ricci curvature condition.
//!
//! The crate evaluates every constant of the bound chain in log-space
//! ([`bounds`]), builds model manifolds with certified geometry ([`models`]),
//! discretizes the Laplacian ([`operators`]), computes low spectra
//! ([`solver`]) and confronts each inequality with the data ([`verify`]).

pub mod bounds;
pub mod error;
pub mod logscalar;
pub mod models;
pub mod operators;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use logscalar::LogScalar;
