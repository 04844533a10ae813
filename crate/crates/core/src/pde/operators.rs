//! Finite differences on x_i = i/n with even reflection at both ends.
//!
//! Reflecting u about x = 0 and x = 1 enforces u_x = u_xxx = 0. The boundary
//! rows of D₂ read 2(u₁ − u₀)/Δx², and trapezoid weights annihilate the
//! range of D₂, so every update written as D₂(·) conserves the discrete mass.

use super::banded::Pentadiagonal;
use crate::potential::DoubleWellPotential;
use crate::profile::Field;

/// D₂u into `out`.
pub fn apply_d2(u: &[f64], dx: f64, out: &mut [f64]) {
    let n = u.len() - 1;
    let c = 1.0 / (dx * dx);
    out[0] = 2.0 * (u[1] - u[0]) * c;
    for i in 1..n {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * c;
    }
    out[n] = 2.0 * (u[n - 1] - u[n]) * c;
}

/// D₂ as a (tridiagonal) band matrix on `nodes` points.
pub fn d2_matrix(nodes: usize, dx: f64) -> Pentadiagonal {
    let c = 1.0 / (dx * dx);
    let mut m = Pentadiagonal::zeros(nodes);
    let n = nodes - 1;
    m.set(0, 0, -2.0 * c);
    m.set(0, 1, 2.0 * c);
    for i in 1..n {
        m.set(i, i - 1, c);
        m.set(i, i, -2.0 * c);
        m.set(i, i + 1, c);
    }
    m.set(n, n - 1, 2.0 * c);
    m.set(n, n, -2.0 * c);
    m
}

/// D₄ = D₂D₂.
pub fn d4_matrix(nodes: usize, dx: f64) -> Pentadiagonal {
    let d2 = d2_matrix(nodes, dx);
    Pentadiagonal::tri_product(&d2, &d2)
}

/// μ = −ε²D₂u + F'(u).
pub fn chemical_potential(u: &[f64], dx: f64, eps: f64, pot: &DoubleWellPotential) -> Vec<f64> {
    let mut mu = vec![0.0; u.len()];
    apply_d2(u, dx, &mut mu);
    for (m, &ui) in mu.iter_mut().zip(u) {
        *m = -eps * eps * *m + pot.f1(ui);
    }
    mu
}

/// D₂(−ε²D₂u + F'(u)), the right-hand side of the classic equation.
pub fn spatial_operator(u: &Field, pot: &DoubleWellPotential, eps: f64) -> Field {
    let dx = u.dx();
    let mu = chemical_potential(&u.u, dx, eps, pot);
    let mut out = Field { x: u.x.clone(), u: vec![0.0; u.u.len()] };
    apply_d2(&mu, dx, &mut out.u);
    out
}

/// E[u] = ∫ ε²u_x²/2 + F(u): cell differences for the gradient, trapezoid for F.
pub fn energy(u: &Field, pot: &DoubleWellPotential, eps: f64) -> f64 {
    let dx = u.dx();
    let grad: f64 = u.u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / dx;
    let pot_part = Field { x: u.x.clone(), u: u.u.iter().map(|&v| pot.f(v)).collect() }.integral();
    0.5 * eps * eps * grad + pot_part
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::quartic_potential;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_equilibria() {
        let pot = quartic_potential();
        for c in [-1.0, 0.3, 1.0] {
            let u = Field::from_fn(64, |_| c);
            assert!(spatial_operator(&u, &pot, 0.05).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn output_is_conservative() {
        let pot = quartic_potential();
        let u = Field::from_fn(200, |x| (7.0 * x).sin() + 0.3 * (x * x));
        let out = spatial_operator(&u, &pot, 0.05);
        let scale = out.sup_norm();
        assert!(out.integral().abs() < 1e-13 * scale, "{}", out.integral());
    }

    #[test]
    fn linear_symbol_converges_second_order() {
        // D₂(−ε²D₂ − 1)cos(kπx) against −(kπ)²(ε²(kπ)² − 1)cos(kπx)
        let eps = 0.1;
        let k = 3.0 * PI;
        let exact = -k * k * (eps * eps * k * k - 1.0);
        let err = |n: usize| {
            let u = Field::from_fn(n, |x| (k * x).cos());
            let dx = u.dx();
            let mut d2u = vec![0.0; n + 1];
            apply_d2(&u.u, dx, &mut d2u);
            let mu: Vec<f64> = d2u.iter().zip(&u.u).map(|(a, b)| -eps * eps * a - b).collect();
            let mut out = vec![0.0; n + 1];
            apply_d2(&mu, dx, &mut out);
            out.iter().zip(&u.u).map(|(o, c)| (o - exact * c).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(100), err(200));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn d4_matches_repeated_d2() {
        let n = 30;
        let dx = 1.0 / n as f64;
        let u: Vec<f64> = (0..=n).map(|i| ((i * i) as f64 * 0.01).cos()).collect();
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        apply_d2(&u, dx, &mut a);
        apply_d2(&a, dx, &mut b);
        let mut c = vec![0.0; n + 1];
        d4_matrix(n + 1, dx).mul_vec(&u, &mut c);
        for (x, y) in b.iter().zip(&c) {
            assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn energy_of_constants_and_tanh() {
        let pot = quartic_potential();
        assert_eq!(energy(&Field::from_fn(50, |_| 1.0), &pot, 0.05), 0.0);
        // one tanh interface carries 2√2/3·ε
        let eps = 0.02;
        let u = Field::from_fn(4000, |x| ((x - 0.5) / (2f64.sqrt() * eps)).tanh());
        let e = energy(&u, &pot, eps);
        assert!((e / (2.0 * 2f64.sqrt() / 3.0 * eps) - 1.0).abs() < 1e-4);
    }
}
