//! Nonoscillation analysis for mixed delay–advance differential equations
//!
//! ```text
//! x'(t) + δ₁ a(t) x(g(t)) + δ₂ b(t) x(h(t)) = 0,   g(t) ≤ t ≤ h(t),  a, b ≥ 0.
//! ```
//!
//! The crate checks explicit sufficient conditions for a nonoscillatory
//! solution on a finite window ([`criteria`]), builds the monotone positive
//! solutions those conditions promise ([`construct`]), finds real roots of the
//! characteristic quasi-polynomials of autonomous equations ([`charroots`]),
//! and integrates the initial-value problem directly for cross-checks
//! ([`simulate`]).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

// NaN must fail every `!(x < y)` style guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charroots;
pub mod cli;
pub mod construct;
pub mod criteria;
pub mod gridfn;
pub mod model;
pub mod scalar;
pub mod simulate;

pub use scalar::Real;

pub type GridFunction64 = gridfn::GridFunction<f64>;
pub type ProblemSpec64 = model::ProblemSpec<f64>;
pub type Ivp64 = model::Ivp<f64>;
pub type Bounds64 = model::Bounds<f64>;
pub type Window64 = model::Window<f64>;
pub type CharProblem64 = charroots::CharProblem<f64>;
pub type Certificate64 = criteria::Certificate<f64>;
pub type ConstructionResult64 = construct::ConstructionResult<f64>;
pub type Trajectory64 = simulate::Trajectory<f64>;

pub type GridFunction32 = gridfn::GridFunction<f32>;
pub type ProblemSpec32 = model::ProblemSpec<f32>;
pub type CharProblem32 = charroots::CharProblem<f32>;
