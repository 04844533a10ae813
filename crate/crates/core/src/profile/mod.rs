//! Approximate metastable states and the quantities built from them.

mod metastable;
pub(crate) mod standing_wave;

pub use metastable::{
    ac_residual, barrier_psi, build_uh, cutoff, mass, solve_hn1, AcResidual, MetastableState,
};
pub use standing_wave::{alpha_beta, interval_well, solve_phi, AlphaMode, StandingWaveSolution};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Interface width and admissibility parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub eps: f64,
    pub rho: f64,
    pub delta: f64,
    /// N, so that there are N + 1 transitions.
    pub n: usize,
}

impl ProfileParams {
    /// Checks 0 < ε and δ < ε/ρ < 1/(N+1).
    pub fn new(eps: f64, rho: f64, delta: f64, n: usize) -> Result<Self> {
        let p = ProfileParams { eps, rho, delta, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.rho > 0.0 && self.delta > 0.0) {
            return Err(Error::DomainError("eps, rho and delta must be positive".into()));
        }
        let gap = self.eps / self.rho;
        if !(self.delta < gap && gap < 1.0 / (self.n as f64 + 1.0)) {
            return Err(Error::DomainError(format!(
                "need delta < eps/rho < 1/(N+1): delta = {}, eps/rho = {gap}, N = {}",
                self.delta, self.n
            )));
        }
        Ok(())
    }

    /// The collision threshold ε/ρ.
    pub fn min_gap(&self) -> f64 {
        self.eps / self.rho
    }
}

/// Ordered transition positions h₁ < … < h_{N+1} in (0, 1).
///
/// The reflected ghosts h₀ = -h₁ and h_{N+2} = 2 - h_{N+1} close the gap
/// sequence, so that `gaps()[0] = l₁ = 2h₁` and the last gap is
/// l_{N+2} = 2(1 - h_{N+1}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LayerVector(Vec<f64>);

impl TryFrom<Vec<f64>> for LayerVector {
    type Error = Error;
    fn try_from(h: Vec<f64>) -> Result<Self> {
        LayerVector::new(h)
    }
}

impl From<LayerVector> for Vec<f64> {
    fn from(h: LayerVector) -> Vec<f64> {
        h.0
    }
}

impl LayerVector {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::DomainError("at least one transition is required".into()));
        }
        if h.iter().any(|x| !x.is_finite() || *x <= 0.0 || *x >= 1.0) {
            return Err(Error::DomainError(format!("positions must lie in (0, 1): {h:?}")));
        }
        if h.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DomainError(format!("positions must be increasing: {h:?}")));
        }
        Ok(LayerVector(h))
    }

    pub fn positions(&self) -> &[f64] {
        &self.0
    }

    /// Number of transitions, N + 1.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// N (one less than the number of transitions).
    pub fn n(&self) -> usize {
        self.0.len() - 1
    }

    /// h₀, h₁, …, h_{N+1}, h_{N+2}.
    pub fn extended(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.0.len() + 2);
        e.push(-self.0[0]);
        e.extend_from_slice(&self.0);
        e.push(2.0 - self.0[self.0.len() - 1]);
        e
    }

    /// l₁, …, l_{N+2} with l_j = h_j - h_{j-1}.
    pub fn gaps(&self) -> Vec<f64> {
        self.extended().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// r_j = ε / l_j.
    pub fn ratios(&self, eps: f64) -> Vec<f64> {
        self.gaps().into_iter().map(|l| eps / l).collect()
    }

    /// ℓ^h = min_j l_j.
    pub fn min_gap(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Membership in Ω_ρ: every gap (ghosts included) exceeds ε/ρ.
    pub fn in_omega(&self, eps: f64, rho: f64) -> bool {
        self.min_gap() > eps / rho
    }

    pub fn check_omega(&self, params: &ProfileParams) -> Result<()> {
        if self.n() != params.n {
            return Err(Error::DomainError(format!(
                "expected {} transitions, got {}",
                params.n + 1,
                self.len()
            )));
        }
        if !self.in_omega(params.eps, params.rho) {
            return Err(Error::DomainError(format!(
                "minimum gap {} not above eps/rho = {}",
                self.min_gap(),
                params.min_gap()
            )));
        }
        Ok(())
    }

    /// Mirror image under x → 1 - x: h_j → 1 - h_{N+2-j}.
    pub fn reflect(&self) -> LayerVector {
        LayerVector(self.0.iter().rev().map(|x| 1.0 - x).collect())
    }

    /// Positions shifted by `offsets` (no validation of the result beyond ordering).
    pub fn shifted(&self, offsets: &[f64]) -> Result<LayerVector> {
        LayerVector::new(self.0.iter().zip(offsets).map(|(h, d)| h + d).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("f64 vector serializes")
    }

    pub fn from_json(s: &str) -> Result<LayerVector> {
        let v: Vec<f64> =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("layer vector: {e}")))?;
        LayerVector::new(v)
    }
}

/// Samples of a function on the uniform grid x_i = i/n, i = 0..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl Field {
    /// Uniform grid with `n` intervals on [0, 1], filled with zeros.
    pub fn zeros(n: usize) -> Field {
        let x = (0..=n).map(|i| i as f64 / n as f64).collect();
        Field { x, u: vec![0.0; n + 1] }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Field {
        let mut field = Field::zeros(n);
        for (ui, &xi) in field.u.iter_mut().zip(&field.x) {
            *ui = f(xi);
        }
        field
    }

    pub fn intervals(&self) -> usize {
        self.x.len() - 1
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    /// Trapezoid-rule integral over [0, 1].
    pub fn integral(&self) -> f64 {
        trapezoid(&self.u, self.dx())
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,u")?;
        for (x, u) in self.x.iter().zip(&self.u) {
            writeln!(out, "{x:.17e},{u:.17e}")?;
        }
        Ok(())
    }
}

pub(crate) fn trapezoid(u: &[f64], dx: f64) -> f64 {
    let n = u.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = u[1..n - 1].iter().sum();
    dx * (inner + 0.5 * (u[0] + u[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_include_reflected_ghosts() {
        let h = LayerVector::new(vec![0.31, 0.66]).unwrap();
        let l = h.gaps();
        assert_eq!(l.len(), 3);
        assert!((l[0] - 0.62).abs() < 1e-15);
        assert!((l[1] - 0.35).abs() < 1e-15);
        assert!((l[2] - 0.68).abs() < 1e-15);
        assert!((h.min_gap() - 0.35).abs() < 1e-15);
        assert_eq!(h.extended()[0], -0.31);
        let r = h.ratios(0.07);
        assert!((r[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_unordered_or_outside() {
        assert!(LayerVector::new(vec![0.5, 0.4]).is_err());
        assert!(LayerVector::new(vec![0.0, 0.4]).is_err());
        assert!(LayerVector::new(vec![]).is_err());
        assert!(LayerVector::from_json("[0.2, 0.2]").is_err());
    }

    #[test]
    fn omega_membership() {
        let h = LayerVector::new(vec![0.31, 0.66]).unwrap();
        assert!(h.in_omega(0.07, 0.5));
        assert!(!h.in_omega(0.07, 0.19));
        let p = ProfileParams::new(0.07, 0.5, 0.05, 1).unwrap();
        h.check_omega(&p).unwrap();
        let p3 = ProfileParams::new(0.07, 0.5, 0.05, 2).unwrap();
        assert!(h.check_omega(&p3).is_err());
    }

    #[test]
    fn params_triangle_condition() {
        assert!(ProfileParams::new(0.07, 0.5, 0.05, 1).is_ok());
        // eps/rho = 0.7 > 1/2
        assert!(ProfileParams::new(0.07, 0.1, 0.05, 1).is_err());
        // delta above eps/rho
        assert!(ProfileParams::new(0.07, 0.5, 0.2, 1).is_err());
    }

    #[test]
    fn json_round_trip_and_reflection() {
        let h = LayerVector::new(vec![0.18, 0.32, 0.45]).unwrap();
        let back = LayerVector::from_json(&h.to_json()).unwrap();
        assert_eq!(h, back);
        let r = h.reflect();
        assert!((r.positions()[0] - 0.55).abs() < 1e-15);
        for (a, b) in r.reflect().positions().iter().zip(h.positions()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    proptest::proptest! {
        #[test]
        fn half_ghost_gaps_tile_the_interval(mut v in proptest::collection::vec(0.01f64..0.99, 1..8)) {
            v.sort_by(f64::total_cmp);
            v.dedup();
            let h = LayerVector::new(v).unwrap();
            let l = h.gaps();
            let k = l.len();
            let total = 0.5 * (l[0] + l[k - 1]) + l[1..k - 1].iter().sum::<f64>();
            proptest::prop_assert!((total - 1.0).abs() < 1e-12);
            proptest::prop_assert!((h.min_gap() - h.reflect().min_gap()).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_of_linear_is_exact() {
        let f = Field::from_fn(10, |x| 3.0 * x + 1.0);
        assert!((f.integral() - 2.5).abs() < 1e-14);
    }
}
