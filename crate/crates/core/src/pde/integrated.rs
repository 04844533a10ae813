//! The integrated form: for ũ(x) = ∫₀ˣ u dy,
//! τũ_tt + ũ_t = (−ε²ũ_xxx + F'(ũ_x))_x with ũ(0) = 0, ũ(1) = M and
//! ũ_xx = 0 at both ends. Used as an independent cross-check of the primal
//! solver; only the backward-Euler IMEX variant is provided.

use super::banded::{BandLu, Pentadiagonal};
use super::PdeParams;
use crate::error::{Error, Result};
use crate::potential::DoubleWellPotential;
use crate::profile::Field;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedState {
    /// ũ at the nodes x_i = i/n, with ũ₀ = 0 and ũ_n = M.
    pub ut: Vec<f64>,
    /// ũ_t at the nodes (zero at both ends).
    pub vt: Vec<f64>,
    pub t: f64,
    steps: u64,
}

fn cumulative(u: &Field) -> Vec<f64> {
    let dx = u.dx();
    let mut acc = vec![0.0; u.u.len()];
    for i in 1..u.u.len() {
        acc[i] = acc[i - 1] + 0.5 * dx * (u.u[i - 1] + u.u[i]);
    }
    acc
}

impl IntegratedState {
    /// Cumulative trapezoid integrals of the primal data.
    pub fn from_primal(u0: &Field, u1: &Field) -> IntegratedState {
        let mut vt = cumulative(u1);
        let n = vt.len() - 1;
        vt[n] = 0.0;
        IntegratedState { ut: cumulative(u0), vt, t: 0.0, steps: 0 }
    }

    pub fn mass(&self) -> f64 {
        *self.ut.last().expect("non-empty grid")
    }

    /// ũ_x at the cell midpoints x_{i+1/2}.
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.ut.len() - 1;
        self.ut.windows(2).map(|w| (w[1] - w[0]) * n as f64).collect()
    }
}

pub struct IntegratedSolver {
    params: PdeParams,
    pot: DoubleWellPotential,
    lu: BandLu,
}

impl IntegratedSolver {
    pub fn new(params: &PdeParams, pot: &DoubleWellPotential) -> Result<Self> {
        params.validate(pot)?;
        let m = params.n - 1;
        let c = 1.0 / params.dx().powi(4);
        // fourth difference on the interior nodes with odd reflection
        let mut k = Pentadiagonal::zeros(m);
        for i in 0..m {
            let diag = if i == 0 || i == m - 1 { 5.0 } else { 6.0 };
            k.set(i, i, diag * c);
            if i >= 1 {
                k.set(i, i - 1, -4.0 * c);
            }
            if i >= 2 {
                k.set(i, i - 2, c);
            }
            if i + 1 < m {
                k.set(i, i + 1, -4.0 * c);
            }
            if i + 2 < m {
                k.set(i, i + 2, c);
            }
        }
        let (e2, dt) = (params.eps * params.eps, params.dt);
        let lu = k.scale_shift(dt * e2, params.tau / dt + 1.0).factor()?;
        Ok(IntegratedSolver { params: *params, pot: pot.clone(), lu })
    }

    /// Fourth difference of ũ at the interior nodes, ghosts by odd reflection.
    fn d4(&self, ut: &[f64]) -> Vec<f64> {
        let n = ut.len() - 1;
        let c = 1.0 / self.params.dx().powi(4);
        let at = |j: isize| -> f64 {
            if j < 0 {
                2.0 * ut[0] - ut[(-j) as usize]
            } else if j as usize > n {
                2.0 * ut[n] - ut[2 * n - j as usize]
            } else {
                ut[j as usize]
            }
        };
        (1..n as isize)
            .map(|i| (at(i - 2) - 4.0 * at(i - 1) + 6.0 * at(i) - 4.0 * at(i + 1) + at(i + 2)) * c)
            .collect()
    }

    pub fn step(&self, s: &mut IntegratedState) -> Result<()> {
        let n = self.params.n;
        if s.ut.len() != n + 1 {
            return Err(Error::ValidationFailure("grid mismatch in integrated state".into()));
        }
        let (e2, dt, tau, dx) = (self.params.eps * self.params.eps, self.params.dt, self.params.tau, self.params.dx());
        let flux: Vec<f64> = s.ut.windows(2).map(|w| self.pot.f1((w[1] - w[0]) / dx)).collect();
        let d4 = self.d4(&s.ut);
        let mut rhs: Vec<f64> = (1..n)
            .map(|i| tau / dt * s.vt[i] - e2 * d4[i - 1] + (flux[i] - flux[i - 1]) / dx)
            .collect();
        self.lu.solve(&mut rhs);
        s.vt[1..n].copy_from_slice(&rhs);
        for i in 1..n {
            s.ut[i] += dt * s.vt[i];
        }
        s.steps += 1;
        s.t = s.steps as f64 * dt;
        Ok(())
    }
}
