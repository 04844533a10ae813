use super::integrator::{self, OdeRhs, OdeSolution};
use super::system::{p_raw, q_raw};
use super::{LayerState, OdeParams, System};
use crate::error::{Error, Result};
use crate::potential::DoubleWellPotential;
use crate::profile::{AlphaMode, LayerVector};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Why a run stopped. Gap indices are 1-based (l_1 … l_{N+2}).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Termination {
    EndTime,
    /// Two interior layers met at gap `gap`.
    Collision { gap: usize },
    /// The first or last layer reached the boundary zone.
    Boundary { gap: usize },
}

// Offset state: y = (h − h⁰, η) so tolerances resolve tiny displacements.
struct Hyperbolic<'a> {
    h0: &'a [f64],
    eps: f64,
    tau: f64,
    pot: &'a DoubleWellPotential,
    mode: AlphaMode,
}

impl OdeRhs for Hyperbolic<'_> {
    fn dim(&self) -> usize {
        2 * self.h0.len()
    }

    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let k = self.h0.len();
        let h: Vec<f64> = self.h0.iter().zip(&y[..k]).map(|(a, s)| a + s).collect();
        let eta = &y[k..];
        let mut p = vec![0.0; k];
        p_raw(&h, self.eps, self.pot, self.mode, &mut Vec::with_capacity(k + 1), &mut p)?;
        let mut q = vec![0.0; k];
        if k > 2 {
            q_raw(&h, eta, &mut q)?;
        }
        dy[..k].copy_from_slice(eta);
        for i in 0..k {
            dy[k + i] = (p[i] - eta[i]) / self.tau - q[i];
        }
        Ok(())
    }
}

struct Classic<'a> {
    h0: &'a [f64],
    eps: f64,
    pot: &'a DoubleWellPotential,
    mode: AlphaMode,
}

impl OdeRhs for Classic<'_> {
    fn dim(&self) -> usize {
        self.h0.len()
    }

    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let h: Vec<f64> = self.h0.iter().zip(y).map(|(a, s)| a + s).collect();
        p_raw(&h, self.eps, self.pot, self.mode, &mut Vec::with_capacity(h.len() + 1), dy)
    }
}

fn gaps_of(h: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let k = h.len();
    (0..=k).map(move |j| match j {
        0 => 2.0 * h[0],
        _ if j == k => 2.0 * (1.0 - h[k - 1]),
        _ => h[j] - h[j - 1],
    })
}

fn argmin_gap(h: &[f64]) -> (usize, f64) {
    gaps_of(h)
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, l)| if l < acc.1 { (j, l) } else { acc })
}

/// An integrated layer trajectory with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: System,
    pub termination: Termination,
    h0: Vec<f64>,
    params: OdeParams,
    pot: DoubleWellPotential,
    sol: OdeSolution,
}

impl Trajectory {
    pub fn params(&self) -> &OdeParams {
        &self.params
    }

    pub fn layers(&self) -> usize {
        self.h0.len()
    }

    /// Accepted step times (monotone, starting at 0).
    pub fn times(&self) -> &[f64] {
        &self.sol.t
    }

    pub fn t_final(&self) -> f64 {
        self.sol.t_final()
    }

    pub fn event_time(&self) -> Option<f64> {
        self.sol.event.as_ref().map(|e| e.0)
    }

    pub fn rhs_evals(&self) -> usize {
        self.sol.rhs_evals
    }

    /// s(t) = h(t) − h(0), evaluated without cancellation.
    pub fn displacement_at(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let mut y = self.sol.eval(t);
        y.truncate(self.h0.len());
        Ok(y)
    }

    pub fn state_at(&self, t: f64) -> Result<LayerState> {
        self.check_time(t)?;
        self.state_from(t, &self.sol.eval(t))
    }

    /// States at the accepted steps.
    pub fn states(&self) -> Result<Vec<LayerState>> {
        self.sol.t.iter().zip(&self.sol.y).map(|(&t, y)| self.state_from(t, y)).collect()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_final()) {
            return Err(Error::DomainError(format!(
                "t = {t} outside the integrated range [0, {}]",
                self.t_final()
            )));
        }
        Ok(())
    }

    fn state_from(&self, t: f64, y: &[f64]) -> Result<LayerState> {
        let k = self.h0.len();
        let h: Vec<f64> = self.h0.iter().zip(&y[..k]).map(|(a, s)| a + s).collect();
        let eta = match self.system {
            System::Hyperbolic => y[k..].to_vec(),
            System::Classic => {
                let mut p = vec![0.0; k];
                p_raw(&h, self.params.eps, &self.pot, self.params.alpha_mode, &mut Vec::new(), &mut p)?;
                p
            }
        };
        LayerState::new(LayerVector::new(h)?, eta, t)
    }

    /// CSV `t,h1..hK,eta1..etaK` at the given times (accepted steps if `None`).
    pub fn write_csv(&self, path: &Path, times: Option<&[f64]>) -> Result<()> {
        let states = match times {
            Some(ts) => ts.iter().map(|&t| self.state_at(t)).collect::<Result<Vec<_>>>()?,
            None => self.states()?,
        };
        let k = self.layers();
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["t".to_string()];
        header.extend((1..=k).map(|i| format!("h{i}")));
        header.extend((1..=k).map(|i| format!("eta{i}")));
        writeln!(w, "{}", header.join(","))?;
        for s in states {
            let mut row = vec![format!("{:.17e}", s.t)];
            row.extend(s.h.positions().iter().map(|v| format!("{v:.17e}")));
            row.extend(s.eta.iter().map(|v| format!("{v:.17e}")));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates the hyperbolic (needs `eta0`) or classic system from `h0`.
pub fn integrate(
    system: System,
    h0: &LayerVector,
    eta0: Option<&[f64]>,
    params: &OdeParams,
    pot: &DoubleWellPotential,
) -> Result<Trajectory> {
    params.validate()?;
    let k = h0.len();
    if k < 2 {
        return Err(Error::DomainError("need at least two transition layers".into()));
    }
    let threshold = params.threshold();
    let hp = h0.positions();
    let (_, g0) = argmin_gap(hp);
    if g0 <= threshold {
        return Err(Error::EventAtStart { min_gap: g0, threshold });
    }
    let event = |y: &[f64]| -> f64 {
        let h: Vec<f64> = hp.iter().zip(&y[..k]).map(|(a, s)| a + s).collect();
        argmin_gap(&h).1 - threshold
    };
    let opts = params.integrator();
    let sol = match system {
        System::Hyperbolic => {
            if !(params.tau > 0.0) {
                return Err(Error::DomainError("hyperbolic system needs tau > 0".into()));
            }
            let eta0 = eta0.ok_or_else(|| Error::DomainError("hyperbolic system needs eta0".into()))?;
            if eta0.len() != k {
                return Err(Error::DomainError("velocity length mismatch".into()));
            }
            let rhs = Hyperbolic { h0: hp, eps: params.eps, tau: params.tau, pot, mode: params.alpha_mode };
            let mut y0 = vec![0.0; k];
            y0.extend_from_slice(eta0);
            integrator::solve(&rhs, 0.0, &y0, params.t_end, &opts, Some(&event))?
        }
        System::Classic => {
            let rhs = Classic { h0: hp, eps: params.eps, pot, mode: params.alpha_mode };
            integrator::solve(&rhs, 0.0, &vec![0.0; k], params.t_end, &opts, Some(&event))?
        }
    };
    let termination = match &sol.event {
        None => Termination::EndTime,
        Some((_, y)) => {
            let h: Vec<f64> = hp.iter().zip(&y[..k]).map(|(a, s)| a + s).collect();
            let (j, _) = argmin_gap(&h);
            if j == 0 || j == k {
                Termination::Boundary { gap: j + 1 }
            } else {
                Termination::Collision { gap: j + 1 }
            }
        }
    };
    Ok(Trajectory { system, termination, h0: hp.to_vec(), params: *params, pot: pot.clone(), sol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer_ode::{initial_velocities, l_pm, rhs_hyperbolic, VelocityMode};
    use crate::potential::quartic_potential;

    fn lv(h: &[f64]) -> LayerVector {
        LayerVector::new(h.to_vec()).unwrap()
    }

    fn table1(tau: f64, t_end: f64) -> Trajectory {
        let pot = quartic_potential();
        let params = OdeParams::new(0.07, tau, t_end);
        let h0 = lv(&[0.31, 0.66]);
        let eta0 = initial_velocities(&h0, VelocityMode::Forward, &params, &pot).unwrap();
        integrate(params.system(), &h0, Some(&eta0), &params, &pot).unwrap()
    }

    #[test]
    fn equilibrium_stays_put() {
        let pot = quartic_potential();
        let params = OdeParams::new(0.05, 10.0, 1e4);
        let h0 = lv(&[0.25, 0.75]);
        let tr = integrate(System::Hyperbolic, &h0, Some(&[0.0, 0.0]), &params, &pot).unwrap();
        assert_eq!(tr.termination, Termination::EndTime);
        let s = tr.displacement_at(1e4).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-15), "{s:?}");
    }

    #[test]
    fn table_one_entries() {
        // frozen from an independent high-accuracy run
        let cases = [
            (0.0, [-0.012797, -0.053420, -0.124057]),
            (5.0, [-0.012573, -0.049698, -0.083037]),
            (50.0, [-0.011266, -0.036384, -0.047508]),
        ];
        for (tau, expect) in cases {
            let tr = table1(tau, 665.0);
            assert_eq!(tr.termination, Termination::EndTime);
            for (t, e) in [300.0, 600.0, 665.0].into_iter().zip(expect) {
                let s = tr.displacement_at(t).unwrap()[0];
                assert!((s - e).abs() < 2e-6, "tau={tau} t={t} s={s} expected {e}");
            }
        }
    }

    #[test]
    fn hyperbolic_moves_slower() {
        let c = table1(0.0, 665.0);
        let h = table1(50.0, 665.0);
        for t in [300.0, 600.0, 665.0] {
            assert!(h.displacement_at(t).unwrap()[0].abs() <= c.displacement_at(t).unwrap()[0].abs());
        }
    }

    #[test]
    fn collision_event_is_located() {
        let tr = table1(0.0, 2000.0);
        assert_eq!(tr.termination, Termination::Boundary { gap: 1 });
        let te = tr.event_time().unwrap();
        let last = tr.state_at(te).unwrap();
        let thr = tr.params().threshold();
        assert!((last.h.min_gap() - thr).abs() < 1e-8, "{}", last.h.min_gap());
        for s in tr.states().unwrap() {
            assert!(s.h.min_gap() >= thr - 1e-12);
        }
        assert!(tr.times().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn event_at_start() {
        let pot = quartic_potential();
        let params = OdeParams::new(0.07, 0.0, 10.0);
        let err = integrate(System::Classic, &lv(&[0.05, 0.5]), None, &params, &pot).unwrap_err();
        assert!(matches!(err, Error::EventAtStart { .. }));
    }

    #[test]
    fn tightening_tolerances_changes_little() {
        let pot = quartic_potential();
        let h0 = lv(&[0.31, 0.66]);
        let run = |tol: f64| {
            let params = OdeParams::new(0.07, 5.0, 665.0).with_tolerances(tol, tol * 1e-5);
            let eta0 = initial_velocities(&h0, VelocityMode::Forward, &params, &pot).unwrap();
            let tr = integrate(System::Hyperbolic, &h0, Some(&eta0), &params, &pot).unwrap();
            tr.displacement_at(665.0).unwrap()[0]
        };
        let (a, b) = (run(1e-8), run(1e-9));
        assert!(((a - b) / b).abs() < 1e-3);
    }

    #[test]
    fn lengths_conserved_and_relax() {
        let pot = quartic_potential();
        let tau = 20.0;
        let params = OdeParams::new(0.01, tau, 400.0);
        let h0 = lv(&[0.2, 0.35, 0.6, 0.8]);
        // forward data: L± constant
        let eta0 = initial_velocities(&h0, VelocityMode::Forward, &params, &pot).unwrap();
        let tr = integrate(System::Hyperbolic, &h0, Some(&eta0), &params, &pot).unwrap();
        let b0 = l_pm(&tr.state_at(0.0).unwrap());
        for s in tr.states().unwrap() {
            let b = l_pm(&s);
            assert!((b.l_minus - b0.l_minus).abs() < 10.0 * params.rel_tol);
        }
        // generic data: L(t) − L(0) = τL'(0)(1 − e^{−t/τ})
        let eta0 = vec![1e-5, -2e-5, 0.5e-5, 3e-5];
        let tr = integrate(System::Hyperbolic, &h0, Some(&eta0), &params, &pot).unwrap();
        let b0 = l_pm(&tr.state_at(0.0).unwrap());
        for t in [10.0, 100.0, 400.0] {
            let b = l_pm(&tr.state_at(t).unwrap());
            let expect = tau * b0.dl_minus * (1.0 - (-t / tau).exp());
            assert!((b.l_minus - b0.l_minus - expect).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn interval_equations_hold_along_trajectory() {
        // N = 2: the gap equations are linear combinations of the layer equations
        let pot = quartic_potential();
        let tau = 10.0;
        let eps = 0.012;
        let params = OdeParams::new(eps, tau, 300.0);
        let h0 = lv(&[0.2, 0.45, 0.75]);
        let eta0 = vec![2e-5, -1e-5, 3e-5];
        let tr = integrate(System::Hyperbolic, &h0, Some(&eta0), &params, &pot).unwrap();
        let a = |l: f64| 16.0 * (-2f64.sqrt() * l / eps).exp();
        for t in [0.0, 50.0, 150.0, 300.0] {
            let s = tr.state_at(t).unwrap();
            let (dh, deta) = rhs_hyperbolic(&s, &params, &pot).unwrap();
            let h = s.h.positions();
            let l = s.h.gaps();
            let (e, de) = (&s.eta, &deta);
            let _ = dh;
            // l1 = 2h1, l2 = h2 − h1, l3 = h3 − h2, l4 = 2(1 − h3)
            let lp = [2.0 * e[0], e[1] - e[0], e[2] - e[1], -2.0 * e[2]];
            let lpp = [2.0 * de[0], de[1] - de[0], de[2] - de[1], -2.0 * de[2]];
            let q21 = e[1] * e[1] - e[0] * e[0];
            let q32 = e[2] * e[2] - e[1] * e[1];
            let (a1, a2, a3, a4) = (a(l[0]), a(l[1]), a(l[2]), a(l[3]));
            let res = [
                tau * lpp[0] + lp[0] + tau / l[1] * q21 - (a3 - a1) / (2.0 * l[1]),
                tau * lpp[1] + lp[1] + tau / (2.0 * l[2]) * q32 - (a4 - a2) / (4.0 * l[2]),
                tau * lpp[2] + lp[2] - tau / (2.0 * l[1]) * q21 + (a3 - a1) / (4.0 * l[1]),
                tau * lpp[3] + lp[3] - tau / l[2] * q32 + (a4 - a2) / (2.0 * l[2]),
            ];
            let scale = (a1 + a2 + a3 + a4) + e.iter().map(|v| v.abs()).sum::<f64>();
            for r in res {
                assert!(r.abs() <= 1e-12 * scale, "t={t} res={res:?} h={h:?}");
            }
        }
    }

    #[test]
    fn mirror_symmetry() {
        let pot = quartic_potential();
        let params = OdeParams::new(0.012, 15.0, 500.0);
        let h0 = lv(&[0.15, 0.3, 0.58, 0.9]);
        let eta0 = initial_velocities(&h0, VelocityMode::Forward, &params, &pot).unwrap();
        let m0 = LayerState::new(h0.clone(), eta0.clone(), 0.0).unwrap().reflect();
        let a = integrate(System::Hyperbolic, &h0, Some(&eta0), &params, &pot).unwrap();
        let b = integrate(System::Hyperbolic, &m0.h, Some(&m0.eta), &params, &pot).unwrap();
        assert_eq!(a.termination, Termination::EndTime);
        for t in [100.0, 300.0, 500.0] {
            let sa = a.state_at(t).unwrap().reflect();
            let sb = b.state_at(t).unwrap();
            let scale = sb.eta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in sa.h.positions().iter().zip(sb.h.positions()) {
                assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in sa.eta.iter().zip(&sb.eta) {
                assert!((x - y).abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn stiff_method_agrees_for_small_tau() {
        let pot = quartic_potential();
        let h0 = lv(&[0.31, 0.66]);
        let mut params = OdeParams::new(0.07, 1e-3, 300.0).with_tolerances(1e-8, 1e-14);
        let eta0 = initial_velocities(&h0, VelocityMode::Forward, &params, &pot).unwrap();
        let explicit = integrate(System::Hyperbolic, &h0, Some(&eta0), &params, &pot).unwrap();
        params.method = crate::layer_ode::Method::Sdirk2;
        let implicit = integrate(System::Hyperbolic, &h0, Some(&eta0), &params, &pot).unwrap();
        let (x, y) = (explicit.displacement_at(300.0).unwrap()[0], implicit.displacement_at(300.0).unwrap()[0]);
        assert!(((x - y) / x).abs() < 1e-4, "{x} {y}");
        assert!(implicit.times().len() < explicit.times().len());
    }

    #[test]
    fn csv_export() {
        let tr = table1(5.0, 10.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("traj.csv");
        tr.write_csv(&p, Some(&[0.0, 5.0, 10.0])).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,h1,h2,eta1,eta2");
        assert_eq!(lines.len(), 4);
        assert!(tr.state_at(11.0).is_err());
    }
}
