//! The PDE against the reduced layer dynamics on matched initial data.

use super::config::{RunConfig, Velocity};
use crate::error::{Error, Result};
use crate::layer_ode::{initial_velocities, integrate, OdeParams, Trajectory};
use crate::pde::{diagnostics, integrate_pde, InitialData, PdeParams};
use crate::potential::DoubleWellPotential;
use crate::profile::LayerVector;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Default pass threshold on the sup-norm displacement gap.
pub const DEFAULT_GAP_TOL: f64 = 5e-3;
/// Displacements below this are treated as sign-neutral.
pub const SIGN_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub t: f64,
    /// s_j(t) = h_j(t) − h_j(0) from the extracted zero crossings.
    pub pde: Vec<f64>,
    pub ode: Vec<f64>,
    /// max_j |s_pde − s_ode|; infinite if the layer counts differ.
    pub gap: f64,
    pub signs_agree: bool,
    /// ‖u − u^h‖∞ · ε^{5/2} · exp(Aℓ^h/ε), when a reference profile exists.
    pub ratio: Option<f64>,
    pub mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub eps: f64,
    pub tau: f64,
    pub n: usize,
    pub dt: f64,
    pub rows: Vec<CompareRow>,
    pub sup_gap: f64,
    pub terminal_gap: f64,
    /// Sign agreement at every sample after t = 0.
    pub signs_agree: bool,
    pub max_mass_drift: f64,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl CompareReport {
    pub fn passes(&self, gap_tol: f64) -> bool {
        self.sup_gap <= gap_tol && self.signs_agree
    }

    pub fn verdict(&self, gap_tol: f64) -> Result<()> {
        if self.passes(gap_tol) {
            return Ok(());
        }
        let failed = self.rows.iter().filter(|r| r.gap > gap_tol || !r.signs_agree).count();
        Err(Error::ToleranceFailure { failed })
    }

    /// Ratios after the first sample, relative to the first one past t = 0.
    pub fn ratio_growth(&self) -> Option<f64> {
        let mut later = self.rows.iter().skip(1).map(|r| r.ratio);
        let first = later.next()??;
        let mut worst: f64 = 1.0;
        for r in later {
            worst = worst.max(r? / first);
        }
        Some(worst)
    }

    /// CSV `t,pde_s1..,ode_s1..,gap,signs_agree,ratio,mass_drift`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let k = self.rows.first().map_or(0, |r| r.ode.len());
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["t".to_string()];
        header.extend((1..=k).map(|i| format!("pde_s{i}")));
        header.extend((1..=k).map(|i| format!("ode_s{i}")));
        header.extend(["gap", "signs_agree", "ratio", "mass_drift"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut row = vec![format!("{:e}", r.t)];
            let pad = |v: &[f64]| (0..k).map(|j| v.get(j).map_or("nan".into(), |x| format!("{x:e}"))).collect::<Vec<_>>();
            row.extend(pad(&r.pde));
            row.extend(pad(&r.ode));
            row.push(format!("{:e}", r.gap));
            row.push(r.signs_agree.to_string());
            row.push(r.ratio.map_or(String::new(), |x| format!("{x:e}")));
            row.push(format!("{:e}", r.mass_drift));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn same_sign(a: f64, b: f64) -> bool {
    (a.abs() <= SIGN_FLOOR && b.abs() <= SIGN_FLOOR) || a.signum() == b.signum()
}

fn ode_run(
    h0: &LayerVector,
    velocity: Velocity,
    params: &OdeParams,
    pot: &DoubleWellPotential,
) -> Result<Trajectory> {
    let eta0 = match velocity.mode() {
        Some(mode) => initial_velocities(h0, mode, params, pot)?,
        None => vec![0.0; h0.len()],
    };
    let eta = if params.tau > 0.0 { Some(eta0.as_slice()) } else { None };
    integrate(params.system(), h0, eta, params, pot)
}

/// Runs both paths from `h0` and tabulates the displacement gap at every
/// PDE output sample.
pub fn compare_runs(
    h0: &LayerVector,
    velocity: Velocity,
    ode: &OdeParams,
    pde: &PdeParams,
    pot: &DoubleWellPotential,
) -> Result<CompareReport> {
    let start = Instant::now();
    let init = InitialData::Layers { h0: h0.clone(), velocity: velocity.mode() };
    let ode = OdeParams { t_end: pde.t_end, ..*ode };
    let (traj, pde_out) = rayon::join(
        || ode_run(h0, velocity, &ode, pot),
        || {
            let mut samples = Vec::new();
            integrate_pde(&init, pde, pot, false, |snap, state| {
                let d = diagnostics(state, pde, pot).ok();
                samples.push((snap.t, snap.layers.clone(), d.and_then(|d| d.ratio), snap.mass - state.m0));
                Ok(())
            })?;
            Ok::<_, Error>(samples)
        },
    );
    let traj = traj?;
    let samples = pde_out?;
    let mut notes = Vec::new();
    let origin = samples.first().map(|s| s.1.clone()).unwrap_or_default();
    let mut rows = Vec::with_capacity(samples.len());
    for (t, layers, ratio, mass_drift) in samples {
        let s_pde: Vec<f64> = if layers.len() == origin.len() {
            layers.iter().zip(&origin).map(|(a, b)| a - b).collect()
        } else {
            Vec::new()
        };
        let s_ode = if t <= traj.t_final() { traj.displacement_at(t)? } else { Vec::new() };
        let comparable = s_pde.len() == h0.len() && s_ode.len() == h0.len();
        if !comparable {
            notes.push(format!("t = {t}: {} PDE layers, reduced model active: {}", layers.len(), !s_ode.is_empty()));
        }
        let gap = if comparable {
            s_pde.iter().zip(&s_ode).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let signs_agree = t == 0.0 || (comparable && s_pde.iter().zip(&s_ode).all(|(a, b)| same_sign(*a, *b)));
        rows.push(CompareRow { t, pde: s_pde, ode: s_ode, gap, signs_agree, ratio, mass_drift });
    }
    let sup_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let terminal_gap = rows.last().map_or(0.0, |r| r.gap);
    let max_mass_drift = rows.iter().map(|r| r.mass_drift.abs()).fold(0.0, f64::max);
    Ok(CompareReport {
        eps: pde.eps,
        tau: pde.tau,
        n: pde.n,
        dt: pde.dt,
        signs_agree: rows.iter().all(|r| r.signs_agree),
        rows,
        sup_gap,
        terminal_gap,
        max_mass_drift,
        notes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn compare_pde_ode(cfg: &RunConfig) -> Result<CompareReport> {
    let pot = cfg.potential()?;
    compare_runs(&cfg.layers()?, cfg.model()?.velocity, &cfg.ode_params()?, &cfg.pde_params()?, &pot)
}
