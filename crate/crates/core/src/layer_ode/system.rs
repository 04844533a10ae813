use super::{LayerState, OdeParams, VelocityMode};
use crate::error::{Error, Result};
use crate::potential::DoubleWellPotential;
use crate::profile::{interval_well, AlphaMode, LayerVector};
use crate::profile::standing_wave::{asymptotic_alpha_beta, center_distance};

/// α^j for the gaps of the (possibly slightly inadmissible) raw positions.
pub(crate) fn alphas_raw(
    h: &[f64],
    eps: f64,
    pot: &DoubleWellPotential,
    mode: AlphaMode,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    let k = h.len();
    for j in 0..=k {
        let l = match j {
            0 => 2.0 * h[0],
            _ if j == k => 2.0 * (1.0 - h[k - 1]),
            _ => h[j] - h[j - 1],
        };
        if !(l > 0.0) {
            return Err(Error::DomainError(format!("non-positive gap l_{} = {l}", j + 1)));
        }
        let well = interval_well(j + 1);
        let a = match mode {
            AlphaMode::Asymptotic => asymptotic_alpha_beta(pot, well, eps / l).0,
            AlphaMode::Exact => pot.near_well(well, center_distance(pot, well, l / eps)?),
        };
        out.push(a);
    }
    Ok(())
}

/// Stacks per-interval terms t_1..t_N into (t_1, t_1+t_2, …, t_{N-1}+t_N, t_N).
fn stack(terms: &[f64], out: &mut [f64]) {
    let n = terms.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, t) in terms.iter().enumerate() {
        out[i] += t;
        out[i + 1] += t;
    }
    debug_assert_eq!(out.len(), n + 1);
}

pub(crate) fn p_raw(
    h: &[f64],
    eps: f64,
    pot: &DoubleWellPotential,
    mode: AlphaMode,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) -> Result<()> {
    alphas_raw(h, eps, pot, mode, scratch)?;
    let terms: Vec<f64> =
        (0..h.len() - 1).map(|i| (scratch[i + 2] - scratch[i]) / (4.0 * (h[i + 1] - h[i]))).collect();
    stack(&terms, out);
    Ok(())
}

pub(crate) fn q_raw(h: &[f64], eta: &[f64], out: &mut [f64]) -> Result<()> {
    let mut terms = Vec::with_capacity(h.len() - 1);
    for i in 0..h.len() - 1 {
        let l = h[i + 1] - h[i];
        if !(l > 0.0) {
            return Err(Error::DomainError(format!("coincident layers at index {i}")));
        }
        terms.push((eta[i + 1] * eta[i + 1] - eta[i] * eta[i]) / (2.0 * l));
    }
    stack(&terms, out);
    Ok(())
}

fn check_admissible(h: &LayerVector, params: &OdeParams) -> Result<()> {
    if h.len() < 2 {
        return Err(Error::DomainError("need at least two transition layers".into()));
    }
    if !h.in_omega(params.eps, params.rho) {
        return Err(Error::DomainError(format!(
            "configuration outside Omega_rho: min gap {} <= {}",
            h.min_gap(),
            params.threshold()
        )));
    }
    Ok(())
}

/// The stacked drift P(h).
pub fn p_of_h(h: &LayerVector, params: &OdeParams, pot: &DoubleWellPotential) -> Result<Vec<f64>> {
    check_admissible(h, params)?;
    let mut out = vec![0.0; h.len()];
    p_raw(h.positions(), params.eps, pot, params.alpha_mode, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// The stacked quadratic coupling Q(h, η); only defined for three or more layers.
pub fn q_of(h: &LayerVector, eta: &[f64]) -> Result<Vec<f64>> {
    if h.len() < 3 {
        return Err(Error::DomainError("the quadratic coupling needs N >= 2".into()));
    }
    if eta.len() != h.len() {
        return Err(Error::DomainError("velocity length mismatch".into()));
    }
    let mut out = vec![0.0; h.len()];
    q_raw(h.positions(), eta, &mut out)?;
    Ok(out)
}

/// (h', η') for the hyperbolic system.
pub fn rhs_hyperbolic(
    state: &LayerState,
    params: &OdeParams,
    pot: &DoubleWellPotential,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(params.tau > 0.0) {
        return Err(Error::DomainError("hyperbolic system needs tau > 0".into()));
    }
    let p = p_of_h(&state.h, params, pot)?;
    let q = if state.h.len() > 2 { q_of(&state.h, &state.eta)? } else { vec![0.0; p.len()] };
    let deta = (0..p.len())
        .map(|i| (p[i] - state.eta[i]) / params.tau - q[i])
        .collect();
    Ok((state.eta.clone(), deta))
}

/// h' = P(h).
pub fn rhs_classic(h: &LayerVector, params: &OdeParams, pot: &DoubleWellPotential) -> Result<Vec<f64>> {
    p_of_h(h, params, pot)
}

/// η(0) = ±P(h⁰), the velocities compatible with mass conservation.
pub fn initial_velocities(
    h0: &LayerVector,
    mode: VelocityMode,
    params: &OdeParams,
    pot: &DoubleWellPotential,
) -> Result<Vec<f64>> {
    let p = rhs_classic(h0, params, pot)?;
    Ok(match mode {
        VelocityMode::Forward => p,
        VelocityMode::Reversed => p.into_iter().map(|v| -v).collect(),
    })
}

/// Total lengths of the (−1)- and (+1)-phases and their rates of change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthBalance {
    pub l_minus: f64,
    pub l_plus: f64,
    pub dl_minus: f64,
    pub dl_plus: f64,
}

/// Gap j (1-based) belongs to the −1 phase when j is odd; the two boundary
/// gaps count with weight ½ because they are reflected.
pub fn l_pm(state: &LayerState) -> LengthBalance {
    let ext = state.h.extended();
    let k = state.eta.len();
    let mut eta_ext = Vec::with_capacity(k + 2);
    eta_ext.push(-state.eta[0]);
    eta_ext.extend_from_slice(&state.eta);
    eta_ext.push(-state.eta[k - 1]);
    let mut b = LengthBalance { l_minus: 0.0, l_plus: 0.0, dl_minus: 0.0, dl_plus: 0.0 };
    for j in 1..ext.len() {
        let w = if j == 1 || j == ext.len() - 1 { 0.5 } else { 1.0 };
        let l = w * (ext[j] - ext[j - 1]);
        let dl = w * (eta_ext[j] - eta_ext[j - 1]);
        if j % 2 == 1 {
            b.l_minus += l;
            b.dl_minus += dl;
        } else {
            b.l_plus += l;
            b.dl_plus += dl;
        }
    }
    b
}
