//! Reduced dynamics of the transition points.
//!
//! Hyperbolic system: h' = η, τη' = P(h) − η − τQ(h, η) (no Q for two layers).
//! Classic system: h' = P(h). Both are integrated adaptively until `t_end`
//! or until some gap reaches the collision threshold ε/ρ.

pub mod integrator;
mod limit;
mod system;
mod trajectory;

pub use integrator::{IntegratorOptions, Method};
pub use limit::{compare_tau_limit, compare_trajectories, write_limit_csv, TauLimitRow};
pub use system::{initial_velocities, l_pm, p_of_h, q_of, rhs_classic, rhs_hyperbolic, LengthBalance};
pub use trajectory::{integrate, Termination, Trajectory};

use crate::error::{Error, Result};
use crate::profile::{AlphaMode, LayerVector, ProfileParams};
use serde::{Deserialize, Serialize};

/// Positions, velocities and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub h: LayerVector,
    pub eta: Vec<f64>,
    pub t: f64,
}

impl LayerState {
    pub fn new(h: LayerVector, eta: Vec<f64>, t: f64) -> Result<Self> {
        if eta.len() != h.len() {
            return Err(Error::ValidationFailure(format!(
                "{} velocities for {} layers",
                eta.len(),
                h.len()
            )));
        }
        Ok(LayerState { h, eta, t })
    }

    /// Mirror image under x ↦ 1 − x.
    pub fn reflect(&self) -> LayerState {
        LayerState { h: self.h.reflect(), eta: self.eta.iter().rev().map(|v| -v).collect(), t: self.t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Hyperbolic,
    Classic,
}

/// How the initial velocities are chosen from h⁰.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VelocityMode {
    #[default]
    Forward,
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeParams {
    pub eps: f64,
    /// τ = 0 selects the classic system.
    pub tau: f64,
    pub rho: f64,
    pub delta: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
    #[serde(default)]
    pub method: Method,
}

impl OdeParams {
    /// Defaults: ρ = 1/2, δ = ε/(2ρ), rel_tol 1e-11, abs_tol 1e-16.
    pub fn new(eps: f64, tau: f64, t_end: f64) -> Self {
        let rho = 0.5;
        OdeParams {
            eps,
            tau,
            rho,
            delta: 0.5 * eps / rho,
            rel_tol: 1e-11,
            abs_tol: 1e-16,
            t_end,
            alpha_mode: AlphaMode::Asymptotic,
            method: Method::Dopri5,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn system(&self) -> System {
        if self.tau > 0.0 {
            System::Hyperbolic
        } else {
            System::Classic
        }
    }

    /// The collision threshold ε/ρ.
    pub fn threshold(&self) -> f64 {
        self.eps / self.rho
    }

    pub fn profile(&self, n: usize) -> Result<ProfileParams> {
        ProfileParams::new(self.eps, self.rho, self.delta, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(Error::ValidationFailure(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0) {
            return Err(Error::ValidationFailure("tolerances must be positive".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::ValidationFailure("t_end must be >= 0".into()));
        }
        Ok(())
    }

    pub(crate) fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions {
            method: self.method,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            ..Default::default()
        }
    }
}
