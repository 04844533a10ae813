//! τ → 0 convergence of the hyperbolic layer dynamics to the classic one.

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::layer_ode::{compare_tau_limit, compare_trajectories, integrate, write_limit_csv, OdeParams, System, TauLimitRow};
use crate::potential::DoubleWellPotential;
use crate::profile::LayerVector;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Default admissible distance of the fitted rate from 1.
pub const DEFAULT_RATE_TOL: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<TauLimitRow>,
    /// Least-squares slope of log sup|h − h_c| against log τ over the
    /// positive τ; `None` with fewer than two of them.
    pub slope: Option<f64>,
    /// Every error functional decreases along the (decreasing) τ list.
    pub monotone: bool,
}

impl SweepReport {
    pub fn passes(&self, rate_tol: f64) -> bool {
        self.monotone && self.slope.is_none_or(|s| (s - 1.0).abs() <= rate_tol)
    }

    pub fn verdict(&self, rate_tol: f64) -> Result<()> {
        if self.passes(rate_tol) {
            Ok(())
        } else {
            Err(Error::ToleranceFailure { failed: 1 })
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_limit_csv(&self.rows, path)
    }
}

/// Ordinary least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn decreasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

/// Runs the τ list (τ = 0 compares the classic system with itself).
pub fn sweep_taus(
    h0: &LayerVector,
    mass: Option<f64>,
    taus: &[f64],
    t1: f64,
    params: &OdeParams,
    pot: &DoubleWellPotential,
) -> Result<SweepReport> {
    let positive: Vec<f64> = taus.iter().copied().filter(|&t| t > 0.0).collect();
    let mut rows = if positive.is_empty() {
        Vec::new()
    } else {
        compare_tau_limit(h0, mass, &positive, params.t_end, t1, params, pot)?
    };
    if taus.contains(&0.0) {
        let p = OdeParams { tau: 0.0, ..*params };
        let classic = integrate(System::Classic, h0, None, &p, pot)?;
        let mut row = compare_trajectories(&classic, &classic, t1)?;
        row.tau = 0.0;
        rows.push(row);
    }
    let fit: Vec<&TauLimitRow> = rows.iter().filter(|r| r.tau > 0.0 && r.sup_h_err > 0.0).collect();
    let slope = fit_slope(
        &fit.iter().map(|r| r.tau.ln()).collect::<Vec<_>>(),
        &fit.iter().map(|r| r.sup_h_err.ln()).collect::<Vec<_>>(),
    );
    let pos: Vec<&TauLimitRow> = rows.iter().filter(|r| r.tau > 0.0).collect();
    let monotone = decreasing(pos.iter().map(|r| r.sup_h_err))
        && decreasing(pos.iter().map(|r| r.int_eta_err))
        && decreasing(pos.iter().map(|r| r.sup_eta_err_t1));
    Ok(SweepReport { rows, slope, monotone })
}

pub fn sweep_tau(cfg: &RunConfig) -> Result<SweepReport> {
    let s = cfg.sweep_section()?;
    sweep_taus(&cfg.layers()?, s.mass, &s.taus, s.t1, &cfg.ode_params()?, &cfg.potential()?)
}
