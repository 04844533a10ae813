//! Finite-difference solver for τu_tt + u_t = (−ε²u_xx + F'(u))_xx on (0, 1)
//! with u_x = u_xxx = 0 at both ends.
//!
//! The equation is advanced as the first-order system u_t = v,
//! τv_t + v = −ε²D₄u + D₂F'(u), implicit in the fourth-order and damping
//! terms and explicit in the nonlinearity.

pub mod banded;
mod integrated;
mod layers;
pub mod operators;
mod run;
mod stepper;

pub use integrated::{IntegratedSolver, IntegratedState};
pub use layers::extract_layers;
pub use operators::{energy, spatial_operator};
pub use run::{diagnostics, initial_data, integrate_pde, Diagnostics, InitialData, PdeRun, Snapshot, SnapshotWriter};
pub use stepper::{step, Stepper};


use crate::error::{Error, Result};
use crate::potential::DoubleWellPotential;
use crate::profile::Field;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Backward Euler on the linear part, forward Euler on the nonlinearity.
    #[default]
    ImexBe,
    /// Crank–Nicolson on the linear part, second-order Adams–Bashforth on the nonlinearity.
    ImexCn,
}

/// How the initial velocity u₁ is built from the layer velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VelocityLift {
    /// u₁ = ±D₂(−ε²D₂u₀ + F'(u₀)), the classic right-hand side at u₀.
    #[default]
    Operator,
    /// u₁ = Σⱼ ηⱼ ∂u^h/∂hⱼ with η = ±P(h⁰): moves u₀ along the family of
    /// profiles only, so it carries no transverse component.
    Tangent,
}

/// Interface resolution: Δx ≤ ε / `MIN_POINTS_PER_EPS`.
pub const MIN_POINTS_PER_EPS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub eps: f64,
    pub tau: f64,
    /// Number of grid intervals; Δx = 1/n and there are n + 1 nodes.
    pub n: usize,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    pub t_end: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    /// Admissibility parameter for the u^h reference in diagnostics.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub lift: VelocityLift,
}

fn default_rho() -> f64 {
    0.5
}

impl PdeParams {
    pub fn new(eps: f64, tau: f64, n: usize, dt: f64, t_end: f64) -> Self {
        PdeParams { eps, tau, n, dt, scheme: Scheme::ImexBe, t_end, stride: 1000, rho: default_rho(), lift: VelocityLift::Operator }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Largest stable step for the explicit nonlinearity: the growth factor
    /// of mode k stays bounded while dt·(F''k² − ε²k⁴) ≤ 2, i.e.
    /// dt ≤ 8ε² / max|F''|² with the maximum over [−1, 1].
    pub fn max_stable_dt(&self, pot: &DoubleWellPotential) -> f64 {
        let fmax = (0..=200).map(|i| pot.f2(-1.0 + i as f64 / 100.0).abs()).fold(0.0, f64::max);
        8.0 * self.eps * self.eps / (fmax * fmax)
    }

    pub fn validate(&self, pot: &DoubleWellPotential) -> Result<()> {
        let bad = |m: String| Err(Error::ValidationFailure(m));
        if !(self.eps > 0.0 && self.tau >= 0.0 && self.dt > 0.0 && self.t_end >= 0.0) {
            return bad("need eps > 0, tau >= 0, dt > 0, t_end >= 0".into());
        }
        if self.n < 8 || self.stride == 0 {
            return bad("need n >= 8 and stride >= 1".into());
        }
        if self.dx() > self.eps / MIN_POINTS_PER_EPS {
            return bad(format!("dx = {} exceeds eps/8 = {}", self.dx(), self.eps / MIN_POINTS_PER_EPS));
        }
        let dt_max = self.max_stable_dt(pot);
        if self.dt > dt_max {
            return bad(format!("dt = {} exceeds the stability bound {dt_max:.3e}", self.dt));
        }
        Ok(())
    }
}

/// Concentration u, velocity v = u_t and the time.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub u: Field,
    pub v: Field,
    pub t: f64,
    /// Mass at the start of the run.
    pub m0: f64,
    pub(crate) steps: u64,
    pub(crate) t0: f64,
    /// F'(u) at the previous step, for the two-step scheme.
    pub(crate) prev_f1: Option<Vec<f64>>,
}

impl PdeState {
    pub fn new(u: Field, v: Field, t: f64) -> Result<Self> {
        if u.u.len() != v.u.len() || u.u.len() < 3 {
            return Err(Error::ValidationFailure("u and v must share a grid of >= 3 nodes".into()));
        }
        let m0 = u.integral();
        Ok(PdeState { u, v, t, m0, steps: 0, t0: t, prev_f1: None })
    }

    pub fn mass(&self) -> f64 {
        self.u.integral()
    }
}
