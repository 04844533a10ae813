//! Metastable layer dynamics for the one-dimensional hyperbolic
//! Cahn-Hilliard equation
//!
//! ```text
//! τ u_tt + u_t = (-ε² u_xx + F'(u))_xx,   x ∈ (0, 1),   u_x = u_xxx = 0 at x = 0, 1.
//! ```
//!
//! The crate is organised in layers:
//!
//! * [`potential`]: double-well potentials and their well constants A±, K±.
//! * [`profile`]: standing waves, the interaction coefficients α and β, the
//!   approximate metastable states u^h, the barrier Ψ and the mass map.
//! * [`layer_ode`]: reduced ODE systems for the transition points (classic
//!   and hyperbolic), their integrator and the τ → 0 comparison.
//! * [`pde`]: a finite-difference IMEX solver for the full equation.
//! * [`harness`]: run configuration, reference tables and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod layer_ode;
pub mod pde;
pub mod potential;
pub mod profile;
pub mod quadrature;
pub mod roots;

pub use error::{Error, Result};
pub use potential::{quartic_potential, DoubleWellPotential, Well, WellConstants};
