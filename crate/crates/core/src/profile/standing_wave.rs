//! Standing waves φ(·, ℓ, ±1): solutions of -ε²φ'' + F'(φ) = 0 on
//! (-ℓ/2, ℓ/2) with zero boundary values and one sign inside.
//!
//! The center value m = ±(1 - β) is found from the half-length condition
//! ℓ/2 = ∫₀^{|m|} ε dφ / (2(F(φ) - F(m)))^{1/2}. With the substitution
//! 1 - |φ| = β cosh 2σ the integrand becomes 2 cosh σ (β / S)^{1/2}, where S
//! is the divided difference of F between the two distances from the well.
//! It is smooth, bounded and free of cancellation for any β, so both the
//! root-finding and the profile tabulation run in the σ variable.

use crate::error::{Error, Result};
use crate::potential::{DoubleWellPotential, Well};
use crate::quadrature::{self, QuadTol};
use crate::roots;
use serde::{Deserialize, Serialize};

/// How α and β are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// Quadrature and root-finding on the standing-wave problem.
    Exact,
    /// Leading terms α = K²A² e^{-A/r} / 2, β = K e^{-A/2r}.
    #[default]
    Asymptotic,
}

/// Smallest admissible ℓ/ε.
pub const MIN_LENGTH_RATIO: f64 = 4.0;

/// Sign of u^h on the j-th gap (h_{j-1}, h_j): u^h < 0 on (0, h₁), so the
/// gap j carries the well (-1)^j.
pub fn interval_well(j: usize) -> Well {
    if j.is_multiple_of(2) {
        Well::Plus
    } else {
        Well::Minus
    }
}

fn quad_tol() -> QuadTol {
    QuadTol { abs_tol: 0.0, rel_tol: 1e-14, max_panels: 4000 }
}

/// Integrand of the half-length in σ (units of ε).
fn core_integrand(pot: &DoubleWellPotential, well: Well, beta: f64, sigma: f64) -> f64 {
    let d = beta * (2.0 * sigma).cosh();
    let s = pot.near_well_slope(well, d, beta);
    2.0 * sigma.cosh() * (beta / s).sqrt()
}

fn sigma_max(beta: f64) -> f64 {
    0.5 * (1.0 / beta).acosh()
}

/// ℓ/(2ε) as a function of β.
fn half_length(pot: &DoubleWellPotential, well: Well, beta: f64) -> Result<f64> {
    quadrature::integrate(|s| core_integrand(pot, well, beta, s), 0.0, sigma_max(beta), quad_tol())
}

/// β = 1 - |m| for the standing wave with ℓ/ε = `length_ratio`.
pub(crate) fn center_distance(
    pot: &DoubleWellPotential,
    well: Well,
    length_ratio: f64,
) -> Result<f64> {
    if !(length_ratio >= MIN_LENGTH_RATIO) || !length_ratio.is_finite() {
        return Err(Error::NoSolution { ell: length_ratio, eps: 1.0 });
    }
    let target = 0.5 * length_ratio;
    let c = pot.constants();
    let guess = (c.k(well).ln() - 0.5 * c.a(well) * length_ratio).min(-1e-3);
    let f = |x: f64| -> Result<f64> { Ok(half_length(pot, well, x.exp())? - target) };
    // half_length decreases in β, so f decreases in ln β
    let x_top = (1.0f64 - 1e-9).ln();
    let mut hi = (guess + 1.0).min(x_top);
    while f(hi)? > 0.0 {
        if hi >= x_top {
            return Err(Error::NoSolution { ell: length_ratio, eps: 1.0 });
        }
        hi = (hi + 2.0).min(x_top);
    }
    let mut lo = guess - 1.0;
    let mut expansions = 0;
    while f(lo)? < 0.0 {
        lo -= 4.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::NoSolution { ell: length_ratio, eps: 1.0 });
        }
    }
    let x = roots::brent(f, lo, hi, 1e-15)?;
    Ok(x.exp())
}

/// Exact or asymptotic (α, β) for the ratio r = ε/ℓ.
///
/// `r0` bounds the asymptotic regime; `Exact` requires 1/r ≥ 5.
pub fn alpha_beta(
    r: f64,
    well: Well,
    mode: AlphaMode,
    pot: &DoubleWellPotential,
    r0: f64,
) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::DomainError(format!("ratio must be positive, got {r}")));
    }
    match mode {
        AlphaMode::Exact => {
            let beta = center_distance(pot, well, 1.0 / r)?;
            Ok((pot.near_well(well, beta), beta))
        }
        AlphaMode::Asymptotic => {
            if r >= r0 {
                return Err(Error::DomainError(format!(
                    "asymptotic alpha needs r < r0 = {r0}, got r = {r}"
                )));
            }
            Ok(asymptotic_alpha_beta(pot, well, r))
        }
    }
}

/// Leading terms without the r < r₀ guard (used inside ODE right-hand sides).
pub(crate) fn asymptotic_alpha_beta(pot: &DoubleWellPotential, well: Well, r: f64) -> (f64, f64) {
    let c = pot.constants();
    let (a, k) = (c.a(well), c.k(well));
    let alpha = 0.5 * k * k * a * a * (-a / r).exp();
    let beta = k * (-a / (2.0 * r)).exp();
    (alpha, beta)
}

/// Tabulated inverse x ↦ p(x) of a monotone map p ↦ x(p), interpolated by
/// cubic Hermite polynomials using the known derivative dp/dx at the nodes.
#[derive(Debug, Clone)]
struct InverseTable {
    x: Vec<f64>,
    p: Vec<f64>,
    dp: Vec<f64>,
}

impl InverseTable {
    fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|&xi| xi <= x).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.p[k] + h10 * h * self.dp[k] + h01 * self.p[k + 1] + h11 * h * self.dp[k + 1]
    }

    fn x_max(&self) -> f64 {
        *self.x.last().expect("non-empty table")
    }
}

/// φ(·, ℓ, ±1) with its center value and interaction coefficients.
#[derive(Debug, Clone)]
pub struct StandingWaveSolution {
    pub ell: f64,
    pub eps: f64,
    pub well: Well,
    /// φ(0), signed.
    pub m: f64,
    /// F(m).
    pub alpha: f64,
    /// 1 - |m|.
    pub beta: f64,
    pot: DoubleWellPotential,
    // |x| in [0, ℓ/2] → σ
    core: InverseTable,
    // distance y past the zero → v = -|φ| continuation
    tail: InverseTable,
}

/// Solves the standing-wave problem of length `ell` on the branch `well`.
pub fn solve_phi(
    ell: f64,
    well: Well,
    pot: &DoubleWellPotential,
    eps: f64,
) -> Result<StandingWaveSolution> {
    if !(ell > 0.0 && eps > 0.0) {
        return Err(Error::DomainError("ell and eps must be positive".into()));
    }
    let ratio = ell / eps;
    let beta = center_distance(pot, well, ratio).map_err(|e| match e {
        Error::NoSolution { .. } => Error::NoSolution { ell, eps },
        other => other,
    })?;
    let alpha = pot.near_well(well, beta);
    let m = well.sign() * (1.0 - beta);

    // core table, uniform in σ
    let smax = sigma_max(beta);
    let nodes = ((256.0 * smax).ceil() as usize).max(128);
    let mut xs = Vec::with_capacity(nodes + 1);
    let mut ps = Vec::with_capacity(nodes + 1);
    let mut dps = Vec::with_capacity(nodes + 1);
    let mut acc = 0.0;
    let g = |s: f64| core_integrand(pot, well, beta, s);
    for k in 0..=nodes {
        let s = smax * k as f64 / nodes as f64;
        if k > 0 {
            let s0 = smax * (k - 1) as f64 / nodes as f64;
            acc += quadrature::integrate(g, s0, s, quad_tol())?;
        }
        xs.push(eps * acc);
        ps.push(s);
        dps.push(1.0 / (eps * g(s)));
    }
    // pin the end node to the exact half length
    let scale = 0.5 * ell / xs[nodes];
    if (scale - 1.0).abs() > 1e-9 {
        return Err(Error::QuadratureFailure(format!(
            "tabulated half length off by {:.3e}",
            scale - 1.0
        )));
    }
    for x in xs.iter_mut() {
        *x *= scale;
    }
    let core = InverseTable { x: xs, p: ps, dp: dps };

    let tail = tail_table(pot, well, alpha, eps)?;
    Ok(StandingWaveSolution { ell, eps, well, m, alpha, beta, pot: pot.clone(), core, tail })
}

/// Continuation of φ past its zero, where it changes sign and heads towards
/// the opposite well until the turning point F(φ) = F(m).
fn tail_table(pot: &DoubleWellPotential, well: Well, alpha: f64, eps: f64) -> Result<InverseTable> {
    let s = well.sign();
    let gap = |v: f64| pot.f(-s * v) - alpha;
    let v_turn = roots::brent(|v| Ok(gap(v)), 0.0, 1.0, 1e-14)?;
    let integrand = |v: f64| 1.0 / (2.0 * gap(v)).sqrt();
    let v_stop = 0.95 * v_turn;
    let steps = 400;
    let dv = v_stop / steps as f64;
    let mut xs = vec![0.0];
    let mut ps = vec![0.0];
    let mut dps = vec![(2.0 * gap(0.0)).sqrt() / eps];
    let mut acc = 0.0;
    for k in 1..=steps {
        let (v0, v1) = ((k - 1) as f64 * dv, k as f64 * dv);
        acc += quadrature::integrate(integrand, v0, v1, quad_tol())?;
        xs.push(eps * acc);
        ps.push(v1);
        dps.push((2.0 * gap(v1)).sqrt() / eps);
        if eps * acc >= 1.5 * eps {
            break;
        }
    }
    Ok(InverseTable { x: xs, p: ps, dp: dps })
}

impl StandingWaveSolution {
    /// Largest |x| the sampler covers (ℓ/2 plus the continuation).
    pub fn reach(&self) -> f64 {
        0.5 * self.ell + self.tail.x_max()
    }

    /// φ(x) and φ'(x) for |x| ≤ [`reach`](Self::reach).
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let ax = x.abs();
        let half = 0.5 * self.ell;
        let s = self.well.sign();
        let dir = if x < 0.0 { -1.0 } else { 1.0 };
        if ax <= half {
            let sigma = self.core.eval(ax).clamp(0.0, sigma_max(self.beta));
            let d = self.beta * (2.0 * sigma).cosh();
            let g = core_integrand(&self.pot, self.well, self.beta, sigma);
            let dmag = -2.0 * self.beta * (2.0 * sigma).sinh() / (self.eps * g);
            Ok((s * (1.0 - d), s * dir * dmag))
        } else if ax - half <= self.tail.x_max() * (1.0 + 1e-12) {
            let v = self.tail.eval(ax - half).max(0.0);
            let gap = self.pot.f(-s * v) - self.alpha;
            let dv = (2.0 * gap.max(0.0)).sqrt() / self.eps;
            Ok((-s * v, -s * dir * dv))
        } else {
            Err(Error::DomainError(format!(
                "x = {x} outside the standing-wave sampler range ±{}",
                self.reach()
            )))
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?.0)
    }

    /// sup over a sample of |ε²φ'²/2 - F(φ) + F(m)|.
    pub fn first_integral_residual(&self, samples: usize) -> f64 {
        let reach = self.reach();
        (0..=samples)
            .map(|i| -reach + 2.0 * reach * i as f64 / samples as f64)
            .filter_map(|x| self.eval(x).ok())
            .map(|(p, dp)| {
                (0.5 * self.eps * self.eps * dp * dp - self.pot.f(p) + self.alpha).abs()
            })
            .fold(0.0, f64::max)
    }
}
