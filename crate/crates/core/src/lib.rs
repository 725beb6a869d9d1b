//! Numerical laboratory for the singularly perturbed stochastic Sine-Gordon
//! equation on `D = (0, 1)` with a random dynamical boundary condition:
//!
//! ```text
//! ε u_tt + u_t − Δu + u − sin u = ε^α Ẇ1        in D
//! ε δ_tt + δ_t + δ = −u_t + ε^α Ẇ2             on ∂D
//! δ_t = ∂u/∂n                                  on ∂D
//! ```
//!
//! together with its velocity splitting and its two ε → 0 limits.

pub mod error;
pub mod full_system;
pub mod geometry;
pub mod harness;
pub mod limits;
pub mod linalg;
pub mod noise;
pub mod splitting;
pub mod stats;

pub use error::{Error, Result};
