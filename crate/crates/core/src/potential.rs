//! Double-well potentials F with equal-depth minima at u = -1 and u = +1.
//!
//! Potentials are polynomials. Besides the plain evaluators F, F', F'', F'''
//! every potential keeps its Taylor expansions about both wells, so that
//! F(±(1 - d)) and differences F(±(1 - d)) - F(±(1 - d_m)) can be evaluated to
//! full relative precision when d is far below machine epsilon relative to 1.
//! The standing-wave quadratures rely on this: their interaction coefficients
//! are exponentially small.

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadTol};

/// Which well a quantity refers to; `Plus` is u = +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Well {
    Minus,
    Plus,
}

impl Well {
    pub fn from_sign(sign: i32) -> Well {
        if sign >= 0 {
            Well::Plus
        } else {
            Well::Minus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Well::Plus => 1.0,
            Well::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Well {
        match self {
            Well::Plus => Well::Minus,
            Well::Minus => Well::Plus,
        }
    }
}

/// Well constants: A±² = F''(±1) and the integral constants K±.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WellConstants {
    pub a_plus: f64,
    pub a_minus: f64,
    pub k_plus: f64,
    pub k_minus: f64,
}

impl WellConstants {
    pub fn a(&self, well: Well) -> f64 {
        match well {
            Well::Plus => self.a_plus,
            Well::Minus => self.a_minus,
        }
    }

    pub fn k(&self, well: Well) -> f64 {
        match well {
            Well::Plus => self.k_plus,
            Well::Minus => self.k_minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    /// Coefficients of p(x0 + s*d) as a polynomial in d.
    fn taylor_shift(&self, x0: f64, s: f64) -> Poly {
        let n = self.0.len();
        let mut c = self.0.clone();
        // repeated synthetic division by (x - x0)
        for k in 0..n {
            for j in (k..n - 1).rev() {
                c[j] += x0 * c[j + 1];
            }
        }
        let mut scale = 1.0;
        for ck in c.iter_mut() {
            *ck *= scale;
            scale *= s;
        }
        Poly(c)
    }
}

/// A polynomial double-well potential satisfying F(±1) = F'(±1) = 0,
/// F''(±1) > 0 and F > 0 elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWellPotential {
    f: Poly,
    f1: Poly,
    f2: Poly,
    f3: Poly,
    // expansions in d about each well: u = +1 - d and u = -1 + d
    near_plus: Poly,
    near_minus: Poly,
    constants: WellConstants,
    is_even: bool,
    coefficients: Vec<f64>,
}

/// F(u) = (u² - 1)² / 4, with A± = √2 and K± = 4.
pub fn quartic_potential() -> DoubleWellPotential {
    let mut pot = DoubleWellPotential::from_coefficients(&[0.25, 0.0, -0.5, 0.0, 0.25])
        .expect("the quartic is a valid double well");
    // K = 2 exp(ln 2) in closed form
    pot.constants.k_plus = 4.0;
    pot.constants.k_minus = 4.0;
    pot
}

impl DoubleWellPotential {
    /// Builds a potential from ascending power coefficients, validates it and
    /// computes its well constants.
    pub fn from_coefficients(coeffs: &[f64]) -> Result<Self> {
        let mut c: Vec<f64> = coeffs.to_vec();
        while c.len() > 1 && c.last() == Some(&0.0) {
            c.pop();
        }
        if c.len() < 3 || c.iter().any(|x| !x.is_finite()) {
            return Err(Error::ValidationFailure(
                "need at least a finite quadratic polynomial".into(),
            ));
        }
        let f = Poly(c.clone());
        let f1 = f.derivative();
        let f2 = f1.derivative();
        let f3 = f2.derivative();
        let mut near_plus = f.taylor_shift(1.0, -1.0);
        let mut near_minus = f.taylor_shift(-1.0, 1.0);
        let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (p, name) in [(&near_plus, "+1"), (&near_minus, "-1")] {
            if p.0[0].abs() > 1e-12 * scale || p.0[1].abs() > 1e-12 * scale {
                return Err(Error::ValidationFailure(format!(
                    "F or F' does not vanish at u = {name} (F = {:.3e}, F' = {:.3e})",
                    p.0[0], p.0[1]
                )));
            }
            if p.0[2] <= 0.0 {
                return Err(Error::ValidationFailure(format!("F''({name}) must be positive")));
            }
        }
        near_plus.0[0] = 0.0;
        near_plus.0[1] = 0.0;
        near_minus.0[0] = 0.0;
        near_minus.0[1] = 0.0;
        let is_even = c.iter().skip(1).step_by(2).all(|&x| x == 0.0);
        let mut pot = DoubleWellPotential {
            f,
            f1,
            f2,
            f3,
            near_plus,
            near_minus,
            constants: WellConstants { a_plus: 0.0, a_minus: 0.0, k_plus: 0.0, k_minus: 0.0 },
            is_even,
            coefficients: c,
        };
        pot.validate()?;
        pot.constants = pot.compute_well_constants(QuadTol::default())?;
        Ok(pot)
    }

    /// Sign check of F on a 10⁴-interval grid over [-2, 2].
    fn validate(&self) -> Result<()> {
        let n = 10_000;
        for i in 0..=n {
            let u = -2.0 + 4.0 * i as f64 / n as f64;
            let near = (u - 1.0).abs() <= 1e-12 || (u + 1.0).abs() <= 1e-12;
            let v = self.f(u);
            if near {
                continue;
            }
            if v <= 0.0 {
                return Err(Error::ValidationFailure(format!(
                    "F({u}) = {v:.3e} is not positive away from the wells"
                )));
            }
        }
        Ok(())
    }

    pub fn f(&self, u: f64) -> f64 {
        self.f.eval(u)
    }

    pub fn f1(&self, u: f64) -> f64 {
        self.f1.eval(u)
    }

    pub fn f2(&self, u: f64) -> f64 {
        self.f2.eval(u)
    }

    pub fn f3(&self, u: f64) -> f64 {
        self.f3.eval(u)
    }

    pub fn constants(&self) -> WellConstants {
        self.constants
    }

    pub fn is_even(&self) -> bool {
        self.is_even
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// A = sqrt(min(F''(-1), F''(+1))).
    pub fn a_min(&self) -> f64 {
        self.constants.a_plus.min(self.constants.a_minus)
    }

    fn near(&self, well: Well) -> &Poly {
        match well {
            Well::Plus => &self.near_plus,
            Well::Minus => &self.near_minus,
        }
    }

    /// F evaluated at distance `d` from the well, i.e. F(±(1 - d)).
    pub fn near_well(&self, well: Well, d: f64) -> f64 {
        self.near(well).eval(d)
    }

    /// Divided difference (F̂(d) - F̂(dm)) / (d - dm) of F̂(d) = F(±(1 - d)).
    pub fn near_well_slope(&self, well: Well, d: f64, dm: f64) -> f64 {
        let a = &self.near(well).0;
        let mut total = 0.0;
        for (k, &ak) in a.iter().enumerate().skip(1) {
            // sum_{i<k} d^i dm^(k-1-i)
            let mut s = 0.0;
            let mut dp = 1.0;
            for i in 0..k {
                s += dp * dm.powi((k - 1 - i) as i32);
                dp *= d;
            }
            total += ak * s;
        }
        total
    }

    /// Computes A± from F''(±1) and K± by adaptive quadrature of
    /// ∫₀¹ (A/(2F(±t))^{1/2} - 1/(1-t)) dt, whose integrand is evaluated in
    /// cancellation-free form through the well expansions.
    pub fn compute_well_constants(&self, tol: QuadTol) -> Result<WellConstants> {
        let a_plus = self.f2(1.0).sqrt();
        let a_minus = self.f2(-1.0).sqrt();
        let k_plus = 2.0 * self.k_integral(Well::Plus, tol)?.exp();
        let k_minus = 2.0 * self.k_integral(Well::Minus, tol)?.exp();
        Ok(WellConstants { a_plus, a_minus, k_plus, k_minus })
    }

    fn k_integral(&self, well: Well, tol: QuadTol) -> Result<f64> {
        let a = &self.near(well).0;
        let a2 = a[2];
        // q(d) = F̂(d) / (a2 d²) = 1 + d p(d)
        let p: Vec<f64> = a.iter().skip(3).map(|&c| c / a2).collect();
        let integrand = |d: f64| {
            let pd = p.iter().rev().fold(0.0, |acc, &c| acc * d + c);
            let q = 1.0 + d * pd;
            let sq = q.sqrt();
            -pd / (sq * (1.0 + sq))
        };
        quadrature::integrate(integrand, 0.0, 1.0, tol)
    }
}
