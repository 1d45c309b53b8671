//! Numerical laboratory for the axisymmetric sigma_k Nirenberg problem.
//!
//! The prescribed-curvature equation on S^n reduces, for axisymmetric metrics, to a
//! second-order ODE for the cylindrical variable xi(t). This crate evaluates that
//! operator, integrates it, checks its conservation laws, builds global solutions and
//! analyzes bubble towers.

pub mod blowup;
pub mod constants;
pub mod curvature;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod ode;
pub mod par;
pub mod params;
pub mod quadrature;
pub mod roots;
pub mod solvers;
pub mod special;

pub use error::{Error, Result};
pub use params::ProblemParams;
