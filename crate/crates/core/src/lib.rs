//! Time-periodic solutions of the cubic wave equation
//! `Ω²∂τ²u − ∂x²u + u³ = 0` on `[0, π]` with Dirichlet conditions, at the
//! frequencies `Ω = (2k+1)/(2k)`.
//!
//! Solutions are built as `u = u_k + A h`, where `u_k` is an explicit
//! approximation and `h` is the fixed point of a contraction on a small ball
//! of a weighted ℓ¹ space of sine-sine coefficients. The [`bounds`] module
//! measures every constant the contraction argument relies on.

pub mod approx;
pub mod bounds;
pub mod constants;
pub mod error;
pub mod fixed_point;
pub mod operators;
pub mod qroot;
pub mod spectral;
pub mod timedomain;

pub use error::{Error, Result};
