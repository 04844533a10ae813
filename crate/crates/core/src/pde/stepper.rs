use super::banded::BandLu;
use super::operators::{apply_d2, d4_matrix};
use super::{PdeParams, PdeState, Scheme};
use crate::error::{Error, Result};
use crate::potential::DoubleWellPotential;

/// Holds the factorized implicit matrix for a fixed (ε, τ, Δx, dt).
#[derive(Debug, Clone)]
pub struct Stepper {
    params: PdeParams,
    pot: DoubleWellPotential,
    lu: BandLu,
    weights: Vec<f64>,
    // scratch
    rhs: Vec<f64>,
    work: Vec<f64>,
}

impl Stepper {
    pub fn new(params: &PdeParams, pot: &DoubleWellPotential) -> Result<Self> {
        params.validate(pot)?;
        let nodes = params.n + 1;
        let d4 = d4_matrix(nodes, params.dx());
        let (e2, dt, tau) = (params.eps * params.eps, params.dt, params.tau);
        let a = match params.scheme {
            Scheme::ImexBe => d4.scale_shift(dt * e2, tau / dt + 1.0),
            Scheme::ImexCn => d4.scale_shift(0.25 * e2 * dt, tau / dt + 0.5),
        };
        let lu = a.factor()?;
        let mut weights = vec![1.0; nodes];
        weights[0] = 0.5;
        weights[nodes - 1] = 0.5;
        Ok(Stepper {
            params: *params,
            pot: pot.clone(),
            lu,
            weights,
            rhs: vec![0.0; nodes],
            work: vec![0.0; nodes],
        })
    }

    pub fn params(&self) -> &PdeParams {
        &self.params
    }

    /// Advances `state` by one step of size dt.
    pub fn step(&mut self, state: &mut PdeState) -> Result<()> {
        let nodes = self.params.n + 1;
        if state.u.u.len() != nodes {
            return Err(Error::ValidationFailure(format!(
                "state has {} nodes, stepper expects {nodes}",
                state.u.u.len()
            )));
        }
        let (e2, dt, tau, dx) = (self.params.eps * self.params.eps, self.params.dt, self.params.tau, self.params.dx());
        let f1: Vec<f64> = state.u.u.iter().map(|&u| self.pot.f1(u)).collect();
        // nonlinear flux, extrapolated for the two-step scheme
        let nl: Vec<f64> = match (self.params.scheme, &state.prev_f1) {
            (Scheme::ImexCn, Some(prev)) => f1.iter().zip(prev).map(|(a, b)| 1.5 * a - 0.5 * b).collect(),
            _ => f1.clone(),
        };
        apply_d2(&nl, dx, &mut self.rhs);
        let mean_v: f64 = self.weights.iter().zip(&state.v.u).map(|(w, v)| w * v).sum();
        // D₄ applied as D₂D₂ so that constants map to exact zeros
        let mut d2 = vec![0.0; nodes];
        let (target, decay) = match self.params.scheme {
            Scheme::ImexBe => {
                apply_d2(&state.u.u, dx, &mut d2);
                apply_d2(&d2, dx, &mut self.work);
                for i in 0..nodes {
                    self.rhs[i] += tau / dt * state.v.u[i] - e2 * self.work[i];
                }
                (tau / dt, tau / dt + 1.0)
            }
            Scheme::ImexCn => {
                let w: Vec<f64> = (0..nodes).map(|i| state.u.u[i] + 0.25 * dt * state.v.u[i]).collect();
                apply_d2(&w, dx, &mut d2);
                apply_d2(&d2, dx, &mut self.work);
                for i in 0..nodes {
                    self.rhs[i] += (tau / dt - 0.5) * state.v.u[i] - e2 * self.work[i];
                }
                (tau / dt - 0.5, tau / dt + 0.5)
            }
        };
        self.lu.solve(&mut self.rhs);
        // Every term but the damping is in divergence form, so in exact
        // arithmetic Σwᵢvᵢ obeys a scalar recurrence; restore it against
        // round-off by a constant shift, which lies in the kernel of D₄.
        let got: f64 = self.weights.iter().zip(&self.rhs).map(|(w, v)| w * v).sum();
        let shift = (target * mean_v / decay - got) / self.params.n as f64;
        let v = &mut state.v.u;
        for i in 0..nodes {
            let vn = self.rhs[i] + shift;
            match self.params.scheme {
                Scheme::ImexBe => state.u.u[i] += dt * vn,
                Scheme::ImexCn => state.u.u[i] += 0.5 * dt * (v[i] + vn),
            }
            v[i] = vn;
        }
        if !state.u.u.iter().all(|x| x.is_finite()) {
            return Err(Error::StepFailure { t: state.t });
        }
        state.prev_f1 = Some(f1);
        state.steps += 1;
        state.t = state.t0 + state.steps as f64 * dt;
        Ok(())
    }
}

/// One step with a freshly factorized matrix; prefer [`Stepper`] in loops.
pub fn step(state: &PdeState, params: &PdeParams, pot: &DoubleWellPotential) -> Result<PdeState> {
    let mut s = state.clone();
    Stepper::new(params, pot)?.step(&mut s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::quartic_potential;
    use crate::profile::Field;

    fn bump(n: usize) -> PdeState {
        let pi = std::f64::consts::PI;
        let u = Field::from_fn(n, |x| 0.2 * (3.0 * pi * x).cos() + 0.5 * (pi * x).cos());
        PdeState::new(u, Field::zeros(n), 0.0).unwrap()
    }

    #[test]
    fn constant_state_is_fixed() {
        let pot = quartic_potential();
        for scheme in [Scheme::ImexBe, Scheme::ImexCn] {
            let params = PdeParams { scheme, ..PdeParams::new(0.15, 2.0, 64, 1e-3, 1.0) };
            let s0 = PdeState::new(Field::from_fn(64, |_| 0.4), Field::zeros(64), 0.0).unwrap();
            let s1 = step(&s0, &params, &pot).unwrap();
            assert!(s1.u.u.iter().all(|&u| (u - 0.4).abs() < 1e-15));
            assert_eq!(s1.v.sup_norm(), 0.0);
            assert_eq!(s1.t, 1e-3);
        }
    }

    #[test]
    fn rejects_unstable_or_underresolved() {
        let pot = quartic_potential();
        assert!(PdeParams::new(0.07, 50.0, 1024, 0.02, 1.0).validate(&pot).is_err());
        assert!(PdeParams::new(0.07, 50.0, 64, 1e-3, 1.0).validate(&pot).is_err());
        assert!(PdeParams::new(0.07, 50.0, 1024, 1e-3, 1.0).validate(&pot).is_ok());
    }

    #[test]
    fn mass_is_conserved() {
        let pot = quartic_potential();
        for scheme in [Scheme::ImexBe, Scheme::ImexCn] {
            let params = PdeParams { scheme, ..PdeParams::new(0.1, 1.0, 128, 1e-3, 1.0) };
            let mut st = Stepper::new(&params, &pot).unwrap();
            let mut s = bump(128);
            let m0 = s.mass();
            for _ in 0..2000 {
                st.step(&mut s).unwrap();
            }
            assert!((s.mass() - m0).abs() < 1e-13, "{:e}", s.mass() - m0);
        }
    }

    #[test]
    fn nonzero_mean_velocity_follows_mass_ode() {
        // τm'' + m' = 0 ⇒ m(t) = m0 + τ m'(0)(1 − e^{−t/τ})
        let pot = quartic_potential();
        let tau = 0.5;
        let n = 128;
        let params = PdeParams::new(0.1, tau, n, 1e-4, 1.0);
        let mut st = Stepper::new(&params, &pot).unwrap();
        let mut s = bump(n);
        s.v = Field::from_fn(n, |_| 0.1);
        let m0 = s.mass();
        for _ in 0..10000 {
            st.step(&mut s).unwrap();
        }
        let expect = m0 + tau * 0.1 * (1.0 - (-1.0f64 / tau).exp());
        assert!((s.mass() - expect).abs() < 1e-4, "{} vs {expect}", s.mass());
    }

    #[test]
    fn time_convergence_orders() {
        let pot = quartic_potential();
        let n = 64;
        let t_end = 0.2;
        for (scheme, nominal) in [(Scheme::ImexBe, 1.0), (Scheme::ImexCn, 2.0)] {
            let run = |dt: f64| {
                let params = PdeParams { scheme, ..PdeParams::new(0.15, 0.5, n, dt, t_end) };
                let mut st = Stepper::new(&params, &pot).unwrap();
                let mut s = bump(n);
                for _ in 0..params.steps() {
                    st.step(&mut s).unwrap();
                }
                s.u.u
            };
            let dts = [2e-3, 1e-3, 5e-4];
            let sols: Vec<_> = dts.iter().map(|&dt| run(dt)).collect();
            let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let order = (d(&sols[0], &sols[1]) / d(&sols[1], &sols[2])).log2();
            assert!((order - nominal).abs() < 0.3, "{scheme:?} order {order}");
        }
    }
}
