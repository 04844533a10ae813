//! Banded matrices with two sub- and two super-diagonals.

use crate::error::{Error, Result};

const BW: usize = 2;
const WIDTH: usize = 2 * BW + 1;

/// Row-major band storage: `rows[i][j - i + 2]` holds A[i][j].
#[derive(Debug, Clone, PartialEq)]
pub struct Pentadiagonal {
    rows: Vec<[f64; WIDTH]>,
}

impl Pentadiagonal {
    pub fn zeros(n: usize) -> Self {
        Pentadiagonal { rows: vec![[0.0; WIDTH]; n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for r in &mut m.rows {
            r[BW] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > BW {
            0.0
        } else {
            self.rows[i][j + BW - i]
        }
    }

    /// Panics if (i, j) lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i.abs_diff(j) <= BW, "({i}, {j}) outside the band");
        self.rows[i][j + BW - i] = v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(BW)..(i + BW + 1).min(self.dim())
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.cols(i).map(|j| self.rows[i][j + BW - i] * x[j]).sum();
        }
    }

    /// A ↦ a·A + b·I.
    pub fn scale_shift(&self, a: f64, b: f64) -> Self {
        let mut m = self.clone();
        for r in &mut m.rows {
            r.iter_mut().for_each(|v| *v *= a);
            r[BW] += b;
        }
        m
    }

    /// Product of two tridiagonal matrices stored in this format.
    pub fn tri_product(a: &Self, b: &Self) -> Self {
        let n = a.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in i.saturating_sub(1)..(i + 2).min(n) {
                let aik = a.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in k.saturating_sub(1)..(k + 2).min(n) {
                    let v = m.get(i, j) + aik * b.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    /// LU factorization without pivoting. Suitable for matrices similar to
    /// symmetric positive definite ones, which is the case for every system
    /// the steppers build.
    pub fn factor(&self) -> Result<BandLu> {
        let n = self.dim();
        let mut r = self.rows.clone();
        for k in 0..n {
            let p = r[k][BW];
            if !(p.abs() > 1e-300) || !p.is_finite() {
                return Err(Error::SolveFailure { row: k });
            }
            for i in k + 1..(k + BW + 1).min(n) {
                let l = r[i][k + BW - i] / p;
                r[i][k + BW - i] = l;
                for j in k + 1..(k + BW + 1).min(n) {
                    r[i][j + BW - i] -= l * r[k][j + BW - k];
                }
            }
        }
        Ok(BandLu { rows: r })
    }
}

/// Packed L (unit lower) and U factors.
#[derive(Debug, Clone)]
pub struct BandLu {
    rows: Vec<[f64; WIDTH]>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.rows.len();
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(BW)..i {
                s -= self.rows[i][j + BW - i] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + BW + 1).min(n) {
                s -= self.rows[i][j + BW - i] * b[j];
            }
            b[i] = s / self.rows[i][BW];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(m: &Pentadiagonal, x: &[f64]) -> Vec<f64> {
        let n = m.dim();
        (0..n).map(|i| (0..n).map(|j| m.get(i, j) * x[j]).sum()).collect()
    }

    #[test]
    fn solve_round_trip() {
        let n = 40;
        let mut m = Pentadiagonal::zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                let v = if i == j { 10.0 + i as f64 * 0.1 } else { 1.0 / (1.0 + (i + 2 * j) as f64) };
                m.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut b = dense_mul(&m, &x);
        let mut b2 = vec![0.0; n];
        m.mul_vec(&x, &mut b2);
        assert!(b.iter().zip(&b2).all(|(a, c)| (a - c).abs() < 1e-14));
        m.factor().unwrap().solve(&mut b);
        for (a, c) in b.iter().zip(&x) {
            assert!((a - c).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_is_reported() {
        let m = Pentadiagonal::zeros(3);
        assert!(matches!(m.factor(), Err(Error::SolveFailure { row: 0 })));
    }

    #[test]
    fn tridiagonal_product() {
        let n = 6;
        let mut t = Pentadiagonal::zeros(n);
        for i in 0..n {
            t.set(i, i, -2.0);
            if i > 0 {
                t.set(i, i - 1, 1.0);
            }
            if i + 1 < n {
                t.set(i, i + 1, 1.5);
            }
        }
        let p = Pentadiagonal::tri_product(&t, &t);
        let x: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let tx = dense_mul(&t, &x);
        let ttx = dense_mul(&t, &tx);
        let px = dense_mul(&p, &x);
        assert!(ttx.iter().zip(&px).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
