//! Weighted tent-space quasi-norms on a discretized upper half-space, the
//! explicit factorizations between them, and a verification harness that
//! machine-checks the geometric inclusions and norm inequalities they rest
//! on.
//!
//! The boundary is the flat torus [0,1)^n (n = 1 or 2) sampled on a uniform
//! lattice; heights form a geometric ladder. See the `geometry`, `grid`,
//! `functionals`, `factorization`, and `measures` modules for the pieces,
//! and `suites` for the bundled verification runs behind the CLI.

pub mod config;
pub mod error;
pub mod exponent;
pub mod factorization;
pub mod functionals;
pub mod generators;
pub mod geometry;
pub mod grid;
pub mod kahan;
pub mod measures;
pub mod report;
pub mod suites;

pub use error::{Error, Result};
