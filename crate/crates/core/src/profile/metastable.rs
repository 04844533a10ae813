//! The approximate metastable state u^h and the functionals built on it.

use super::standing_wave::{
    asymptotic_alpha_beta, center_distance, interval_well, solve_phi, AlphaMode,
    StandingWaveSolution, MIN_LENGTH_RATIO,
};
use super::{Field, LayerVector, ProfileParams};
use crate::error::{Error, Result};
use crate::potential::DoubleWellPotential;
use crate::quadrature::{self, QuadTol};
use crate::roots;

/// Smooth ramp: 0 for z ≤ -1, 1 for z ≥ 1, ½(1 + tanh(3z/(1 - z²))) between.
pub fn cutoff(z: f64) -> f64 {
    if z <= -1.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 + (3.0 * z / (1.0 - z * z)).tanh())
    }
}

/// u^h for a fixed configuration: the standing waves on every gap, blended
/// across each transition by the cut-off χ((x - h_j)/ε).
#[derive(Debug, Clone)]
pub struct MetastableState {
    h: LayerVector,
    ext: Vec<f64>,
    eps: f64,
    // waves[j-1] lives on the gap (h_{j-1}, h_j), j = 1..=N+2
    waves: Vec<StandingWaveSolution>,
}

impl MetastableState {
    pub fn new(h: &LayerVector, params: &ProfileParams, pot: &DoubleWellPotential) -> Result<Self> {
        h.check_omega(params)?;
        let eps = params.eps;
        let waves = h
            .gaps()
            .iter()
            .enumerate()
            .map(|(i, &l)| solve_phi(l, interval_well(i + 1), pot, eps))
            .collect::<Result<Vec<_>>>()?;
        for (j, w) in waves.iter().enumerate() {
            if w.reach() - 0.5 * w.ell < eps {
                return Err(Error::DomainError(format!(
                    "standing wave on gap {} does not extend past the blend region",
                    j + 1
                )));
            }
        }
        Ok(MetastableState { h: h.clone(), ext: h.extended(), eps, waves })
    }

    pub fn layers(&self) -> &LayerVector {
        &self.h
    }

    pub fn waves(&self) -> &[StandingWaveSolution] {
        &self.waves
    }

    fn midpoint(&self, j: usize) -> f64 {
        // h_{j+1/2}
        0.5 * (self.ext[j] + self.ext[j + 1])
    }

    /// u^h(x) for x ∈ [0, 1].
    pub fn value(&self, x: f64) -> Result<f64> {
        let n1 = self.h.len();
        // I_j = [h_{j-1/2}, h_{j+1/2}] for j = 1..=N+1
        let mut j = 1;
        while j < n1 && x > self.midpoint(j) {
            j += 1;
        }
        let hj = self.ext[j];
        let chi = cutoff((x - hj) / self.eps);
        let left = &self.waves[j - 1];
        let right = &self.waves[j];
        let mut u = 0.0;
        if chi < 1.0 {
            u += (1.0 - chi) * left.value(x - self.midpoint(j - 1))?;
        }
        if chi > 0.0 {
            u += chi * right.value(x - self.midpoint(j))?;
        }
        Ok(u)
    }

    pub fn sample(&self, n: usize) -> Result<Field> {
        let mut field = Field::zeros(n);
        for (ui, &xi) in field.u.iter_mut().zip(&field.x) {
            *ui = self.value(xi)?;
        }
        Ok(field)
    }

    /// ∫₀¹ u^h dx by adaptive quadrature on the smooth pieces between the
    /// blend boundaries h_j ± ε and the midpoints.
    pub fn mass(&self) -> Result<f64> {
        let mut breaks = vec![0.0, 1.0];
        for (j, &hj) in self.h.positions().iter().enumerate() {
            breaks.push(hj - self.eps);
            breaks.push(hj + self.eps);
            breaks.push(self.midpoint(j + 1));
        }
        breaks.retain(|&b| (0.0..=1.0).contains(&b));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let tol = QuadTol { abs_tol: 1e-14, rel_tol: 1e-13, max_panels: 2000 };
        let mut total = 0.0;
        for w in breaks.windows(2) {
            // the sampler can only fail outside its range, which the
            // construction excludes; NaN surfaces as a quadrature failure
            total +=
                quadrature::integrate(|x| self.value(x).unwrap_or(f64::NAN), w[0], w[1], tol)?;
        }
        if !total.is_finite() {
            return Err(Error::QuadratureFailure("non-finite mass".into()));
        }
        Ok(total)
    }
}

/// Samples u^h on a uniform grid with `n` intervals (at least 16 per ε).
pub fn build_uh(
    h: &LayerVector,
    params: &ProfileParams,
    pot: &DoubleWellPotential,
    n: usize,
) -> Result<Field> {
    if (n as f64) * params.eps < 16.0 {
        return Err(Error::DomainError(format!(
            "grid with {n} intervals does not resolve eps = {} (need 16 nodes per eps)",
            params.eps
        )));
    }
    MetastableState::new(h, params, pot)?.sample(n)
}

/// Pointwise Allen-Cahn residual -ε²u_xx + F'(u) and its norms.
#[derive(Debug, Clone)]
pub struct AcResidual {
    pub residual: Field,
    pub sup: f64,
    pub l2: f64,
}

impl AcResidual {
    /// sup of the residual over nodes farther than `radius` from every point in `centers`.
    pub fn sup_outside(&self, centers: &[f64], radius: f64) -> f64 {
        self.residual
            .x
            .iter()
            .zip(&self.residual.u)
            .filter(|(x, _)| centers.iter().all(|c| (*x - c).abs() >= radius))
            .map(|(_, r)| r.abs())
            .fold(0.0, f64::max)
    }
}

/// Centered second differences; the end nodes use even reflection (u_x = 0).
pub fn ac_residual(u: &Field, pot: &DoubleWellPotential, eps: f64) -> AcResidual {
    let n = u.u.len();
    let dx = u.dx();
    let inv = 1.0 / (dx * dx);
    let mut r = Field { x: u.x.clone(), u: vec![0.0; n] };
    for i in 0..n {
        let left = if i == 0 { u.u[1] } else { u.u[i - 1] };
        let right = if i == n - 1 { u.u[n - 2] } else { u.u[i + 1] };
        let uxx = (left - 2.0 * u.u[i] + right) * inv;
        r.u[i] = -eps * eps * uxx + pot.f1(u.u[i]);
    }
    let sup = r.sup_norm();
    let sq = Field { x: r.x.clone(), u: r.u.iter().map(|v| v * v).collect() };
    let l2 = sq.integral().sqrt();
    AcResidual { residual: r, sup, l2 }
}

/// α^j for j = 1..=N+2, in the requested mode, on the well matching each gap's sign.
pub(crate) fn alphas(
    h: &LayerVector,
    eps: f64,
    pot: &DoubleWellPotential,
    mode: AlphaMode,
) -> Result<Vec<f64>> {
    h.gaps()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let well = interval_well(i + 1);
            match mode {
                AlphaMode::Asymptotic => Ok(asymptotic_alpha_beta(pot, well, eps / l).0),
                AlphaMode::Exact => {
                    let beta = center_distance(pot, well, l / eps)?;
                    Ok(pot.near_well(well, beta))
                }
            }
        })
        .collect()
}

/// Ψ(h) = Σ_{j=1}^{N+1} (α^{j+1} - α^j)².
pub fn barrier_psi(
    h: &LayerVector,
    params: &ProfileParams,
    pot: &DoubleWellPotential,
    mode: AlphaMode,
) -> Result<f64> {
    h.check_omega(params)?;
    let a = alphas(h, params.eps, pot, mode)?;
    Ok(a.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum())
}

/// M(h) = ∫₀¹ u^h dx.
pub fn mass(h: &LayerVector, params: &ProfileParams, pot: &DoubleWellPotential) -> Result<f64> {
    MetastableState::new(h, params, pot)?.mass()
}

/// Solves M(ξ, h_{N+1}) = `m_target` for the last position.
pub fn solve_hn1(
    xi: &[f64],
    m_target: f64,
    params: &ProfileParams,
    pot: &DoubleWellPotential,
) -> Result<f64> {
    let last = *xi.last().ok_or_else(|| Error::DomainError("empty xi".into()))?;
    // standing waves need every gap above both ε/ρ and 5ε
    let gap = params.min_gap().max(MIN_LENGTH_RATIO * params.eps);
    let lo = last + gap * (1.0 + 1e-9);
    let hi = 1.0 - 0.5 * gap * (1.0 + 1e-9);
    if lo >= hi {
        return Err(Error::NoRoot("no admissible room for the last transition".into()));
    }
    let f = |x: f64| -> Result<f64> {
        let mut h = xi.to_vec();
        h.push(x);
        Ok(mass(&LayerVector::new(h)?, params, pot)? - m_target)
    };
    roots::brent(f, lo, hi, 1e-13).map_err(|e| match e {
        Error::NoRoot(msg) => Error::NoRoot(format!("mass {m_target} not attainable in Omega_rho: {msg}")),
        other => other,
    })
}
