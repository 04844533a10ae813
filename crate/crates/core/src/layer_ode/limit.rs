use super::{initial_velocities, integrate, OdeParams, System, Termination, Trajectory, VelocityMode};
use crate::error::{Error, Result};
use crate::potential::DoubleWellPotential;
use crate::profile::{solve_hn1, LayerVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Distances between a hyperbolic run and the classic reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauLimitRow {
    pub tau: f64,
    /// sup_t |h − h_c|∞
    pub sup_h_err: f64,
    /// ∫ |η − η_c|∞ dt
    pub int_eta_err: f64,
    /// sup_{t ≥ t₁} |η − η_c|∞
    pub sup_eta_err_t1: f64,
}

const UNIFORM_SAMPLES: usize = 4001;

/// Error functionals of `a` against `b` on their common time range; the
/// comparison grid merges both step sequences with a uniform grid so that
/// initial layers of width τ are resolved.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory, t1: f64) -> Result<TauLimitRow> {
    if a.layers() != b.layers() {
        return Err(Error::DomainError("trajectories have different layer counts".into()));
    }
    let t_end = a.t_final().min(b.t_final());
    let mut grid: Vec<f64> = a
        .times()
        .iter()
        .chain(b.times())
        .copied()
        .chain((0..UNIFORM_SAMPLES).map(|i| t_end * i as f64 / (UNIFORM_SAMPLES - 1) as f64))
        .filter(|&t| t <= t_end)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut row = TauLimitRow { tau: a.params().tau, sup_h_err: 0.0, int_eta_err: 0.0, sup_eta_err_t1: 0.0 };
    let mut prev: Option<(f64, f64)> = None;
    for &t in &grid {
        let (sa, sb) = (a.state_at(t)?, b.state_at(t)?);
        let ds = a
            .displacement_at(t)?
            .iter()
            .zip(b.displacement_at(t)?)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let de = sa.eta.iter().zip(&sb.eta).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        row.sup_h_err = row.sup_h_err.max(ds);
        if t >= t1 {
            row.sup_eta_err_t1 = row.sup_eta_err_t1.max(de);
        }
        if let Some((tp, ep)) = prev {
            row.int_eta_err += 0.5 * (t - tp) * (de + ep);
        }
        prev = Some((t, de));
    }
    Ok(row)
}

/// Runs the hyperbolic system for each τ from forward data (so that
/// E_τ(0) = 0) and measures its distance to the classic trajectory.
///
/// If `mass_target` is given, the last position of `h0` is first re-solved
/// so that the profile built on `h0` carries that mass.
#[allow(clippy::too_many_arguments)]
pub fn compare_tau_limit(
    h0: &LayerVector,
    mass_target: Option<f64>,
    taus: &[f64],
    t_end: f64,
    t1: f64,
    params: &OdeParams,
    pot: &DoubleWellPotential,
) -> Result<Vec<TauLimitRow>> {
    let h0 = match mass_target {
        None => h0.clone(),
        Some(m) => {
            let mut h = h0.positions().to_vec();
            h.pop();
            let last = solve_hn1(&h, m, &params.profile(h0.n())?, pot)?;
            h.push(last);
            LayerVector::new(h)?
        }
    };
    let classic_params = OdeParams { tau: 0.0, t_end, ..*params };
    let classic = integrate(System::Classic, &h0, None, &classic_params, pot)?;
    if classic.termination != Termination::EndTime {
        return Err(Error::DomainError(format!(
            "classic trajectory stops at t = {} before t_end = {t_end}",
            classic.t_final()
        )));
    }
    let eta0 = initial_velocities(&h0, VelocityMode::Forward, params, pot)?;
    taus.par_iter()
        .map(|&tau| {
            if !(tau > 0.0) {
                return Err(Error::DomainError(format!("tau must be positive, got {tau}")));
            }
            let p = OdeParams { tau, t_end, ..*params };
            let hyp = integrate(System::Hyperbolic, &h0, Some(&eta0), &p, pot)?;
            if hyp.termination != Termination::EndTime {
                return Err(Error::DomainError(format!("hyperbolic run with tau = {tau} stopped early")));
            }
            compare_trajectories(&hyp, &classic, t1)
        })
        .collect()
}

/// CSV `tau,sup_h_err,int_eta_err,sup_eta_err_t1`.
pub fn write_limit_csv(rows: &[TauLimitRow], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "tau,sup_h_err,int_eta_err,sup_eta_err_t1")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{:e},{:e}", r.tau, r.sup_h_err, r.int_eta_err, r.sup_eta_err_t1)?;
    }
    w.flush()?;
    Ok(())
}
