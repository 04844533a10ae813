//! Adaptive one-step integrators with dense output and a scalar stopping event.
//!
//! `Dopri5` is the Dormand-Prince 5(4) pair with Hairer's continuous
//! extension; `Sdirk2` is a two-stage, L-stable, stiffly accurate SDIRK method
//! of order 2 with a first-order embedded estimate and cubic Hermite dense
//! output, for problems where τ ≪ 1 makes the velocity relaxation stiff.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Right-hand side y' = f(t, y).
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Dopri5,
    Sdirk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { method: Method::Dopri5, rel_tol: 1e-10, abs_tol: 1e-16, max_steps: 5_000_000 }
    }
}

#[derive(Debug, Clone)]
enum Interp {
    // Dopri5 continuous extension coefficients
    Dopri([Vec<f64>; 5]),
    // y0, f0, y1, f1
    Hermite([Vec<f64>; 4]),
}

/// Interpolant valid on one accepted step [t0, t1].
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    /// End of validity; can be shorter than the step when an event truncates it.
    pub t1: f64,
    step: f64,
    interp: Interp,
}

impl DenseSegment {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let h = self.step;
        let th = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        match &self.interp {
            Interp::Dopri(r) => {
                let th1 = 1.0 - th;
                (0..r[0].len())
                    .map(|i| {
                        r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
                    })
                    .collect()
            }
            Interp::Hermite([y0, f0, y1, f1]) => {
                let (t2, t3) = (th * th, th * th * th);
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + th;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                (0..y0.len())
                    .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
                    .collect()
            }
        }
    }
}

/// Accepted steps, their interpolants, and the located event if any.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub segments: Vec<DenseSegment>,
    /// (time, state) at which the event function crossed zero.
    pub event: Option<(f64, Vec<f64>)>,
    pub rhs_evals: usize,
}

impl OdeSolution {
    pub fn t_final(&self) -> f64 {
        *self.t.last().expect("solution holds the initial point")
    }

    /// Dense evaluation; `t` must lie in [t₀, t_final].
    pub fn eval(&self, t: f64) -> Vec<f64> {
        if self.segments.is_empty() || t <= self.t[0] {
            return self.y[0].clone();
        }
        let k = self.segments.partition_point(|s| s.t1 < t).min(self.segments.len() - 1);
        self.segments[k].eval(t)
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &IntegratorOptions) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<R: OdeRhs>(
    rhs: &R,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    order: f64,
    opts: &IntegratorOptions,
) -> Result<f64> {
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| opts.abs_tol + opts.rel_tol * y.abs()).collect();
    let norm = |v: &[f64]| -> f64 {
        (v.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h * f).collect();
    let mut f1 = vec![0.0; n];
    rhs.eval(t0 + h, &y1, &mut f1)?;
    let df: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&df) / h;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / order)
    };
    Ok((100.0 * h).min(h1).min(span))
}

pub type Event<'a> = &'a dyn Fn(&[f64]) -> f64;

/// Integrates from `t0` to `t_end`, stopping early at the first zero of
/// `event(y)` (which must be positive at the start).
pub fn solve<R: OdeRhs>(
    rhs: &R,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
    event: Option<Event<'_>>,
) -> Result<OdeSolution> {
    match opts.method {
        Method::Dopri5 => run(rhs, t0, y0, t_end, opts, event, &mut Dopri5Stepper::new(y0.len())),
        Method::Sdirk2 => run(rhs, t0, y0, t_end, opts, event, &mut Sdirk2Stepper::new(y0.len())),
    }
}

struct StepResult {
    y1: Vec<f64>,
    f1: Vec<f64>,
    err: f64,
    interp: Interp,
}

trait Stepper {
    fn order(&self) -> f64;
    /// Attempts a step; `Ok(None)` means the step must be retried with a smaller h.
    #[allow(clippy::too_many_arguments)]
    fn step<R: OdeRhs>(
        &mut self,
        rhs: &R,
        t: f64,
        y: &[f64],
        f0: &[f64],
        h: f64,
        opts: &IntegratorOptions,
        evals: &mut usize,
    ) -> Result<Option<StepResult>>;
}

fn run<R: OdeRhs, S: Stepper>(
    rhs: &R,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
    event: Option<Event<'_>>,
    stepper: &mut S,
) -> Result<OdeSolution> {
    let n = y0.len();
    if let Some(g) = event {
        let g0 = g(y0);
        if g0 <= 0.0 {
            return Err(Error::EventAtStart { min_gap: g0, threshold: 0.0 });
        }
    }
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0.to_vec()],
        segments: Vec::new(),
        event: None,
        rhs_evals: 0,
    };
    if t_end <= t0 {
        return Ok(sol);
    }
    let mut f0 = vec![0.0; n];
    rhs.eval(t0, y0, &mut f0)?;
    sol.rhs_evals += 1;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = initial_step(rhs, t0, y0, &f0, t_end - t0, stepper.order(), opts)?;
    sol.rhs_evals += 1;
    let expo = 1.0 / stepper.order();
    let mut steps = 0;
    let mut rejected_last = false;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepFailure { t });
        }
        let last = t + h >= t_end;
        let h_try = if last { t_end - t } else { h };
        if h_try <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepFailure { t });
        }
        let attempt = stepper.step(rhs, t, &y, &f0, h_try, opts, &mut sol.rhs_evals)?;
        let Some(res) = attempt else {
            h = 0.25 * h_try;
            rejected_last = true;
            continue;
        };
        if !(res.err.is_finite()) || res.err > 1.0 {
            let fac = if res.err.is_finite() { (0.9 * res.err.powf(-expo)).max(0.2) } else { 0.2 };
            h = h_try * fac.min(1.0);
            rejected_last = true;
            continue;
        }
        let t1 = if last { t_end } else { t + h_try };
        let seg = DenseSegment { t0: t, t1, step: t1 - t, interp: res.interp };
        if let Some(g) = event {
            if g(&res.y1) <= 0.0 {
                let (te, ye) = locate_event(&seg, g, opts.rel_tol);
                sol.segments.push(DenseSegment { t1: te, ..seg });
                sol.t.push(te);
                sol.y.push(ye.clone());
                sol.event = Some((te, ye));
                return Ok(sol);
            }
        }
        sol.segments.push(seg);
        sol.t.push(t1);
        sol.y.push(res.y1.clone());
        t = t1;
        y = res.y1;
        f0 = res.f1;
        let mut fac = if res.err == 0.0 { 5.0 } else { 0.9 * res.err.powf(-expo) };
        fac = fac.clamp(0.2, 5.0);
        if rejected_last {
            fac = fac.min(1.0);
        }
        rejected_last = false;
        h = h_try * fac;
    }
    Ok(sol)
}

/// Bisection on the dense output; returns the last time with g > 0 within
/// the time tolerance, so the stored state stays admissible.
fn locate_event(seg: &DenseSegment, g: &dyn Fn(&[f64]) -> f64, rel_tol: f64) -> (f64, Vec<f64>) {
    let (mut a, mut b) = (seg.t0, seg.t1);
    let tol = (rel_tol * b.abs()).max(1e-14 * b.abs().max(1.0));
    let mut ya = seg.eval(a);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let ym = seg.eval(m);
        if g(&ym) > 0.0 {
            a = m;
            ya = ym;
        } else {
            b = m;
        }
    }
    (a, ya)
}

struct Dopri5Stepper {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Dopri5Stepper {
    fn new(n: usize) -> Self {
        Dopri5Stepper { k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

impl Stepper for Dopri5Stepper {
    fn order(&self) -> f64 {
        5.0
    }

    fn step<R: OdeRhs>(
        &mut self,
        rhs: &R,
        t: f64,
        y: &[f64],
        f0: &[f64],
        h: f64,
        opts: &IntegratorOptions,
        evals: &mut usize,
    ) -> Result<Option<StepResult>> {
        let n = y.len();
        self.k[0].copy_from_slice(f0);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let (done, rest) = self.k.split_at_mut(s);
            let _ = done;
            rhs.eval(t + C[s] * h, &self.tmp, &mut rest[0])?;
            *evals += 1;
        }
        // stage 7 is evaluated at y1 (FSAL)
        let y1 = self.tmp.clone();
        let mut err = vec![0.0; n];
        for i in 0..n {
            err[i] = h * (0..7).map(|s| E[s] * self.k[s][i]).sum::<f64>();
        }
        let en = error_norm(&err, y, &y1, opts);
        let r0 = y.to_vec();
        let r1: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
        let r2: Vec<f64> = (0..n).map(|i| h * self.k[0][i] - r1[i]).collect();
        let r3: Vec<f64> = (0..n).map(|i| r1[i] - h * self.k[6][i] - r2[i]).collect();
        let r4: Vec<f64> =
            (0..n).map(|i| h * (0..7).map(|s| D[s] * self.k[s][i]).sum::<f64>()).collect();
        Ok(Some(StepResult {
            f1: self.k[6].clone(),
            y1,
            err: en,
            interp: Interp::Dopri([r0, r1, r2, r3, r4]),
        }))
    }
}

struct Sdirk2Stepper {
    n: usize,
}

impl Sdirk2Stepper {
    fn new(n: usize) -> Self {
        Sdirk2Stepper { n }
    }
}

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

fn jacobian<R: OdeRhs>(rhs: &R, t: f64, y: &[f64], f0: &[f64], evals: &mut usize) -> Result<Vec<Vec<f64>>> {
    let n = y.len();
    let mut jac = vec![vec![0.0; n]; n];
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    for j in 0..n {
        let dy = 1e-7 * y[j].abs().max(1e-7);
        yp[j] = y[j] + dy;
        rhs.eval(t, &yp, &mut fp)?;
        *evals += 1;
        for i in 0..n {
            jac[i][j] = (fp[i] - f0[i]) / dy;
        }
        yp[j] = y[j];
    }
    Ok(jac)
}

/// Gaussian elimination with partial pivoting; returns `None` if singular.
fn lu_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k] == 0.0 {
            return None;
        }
        m.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * b[j]).sum();
        b[k] = (b[k] - s) / m[k][k];
    }
    Some(b)
}

impl Sdirk2Stepper {
    /// Solves z = base + γh f(t, z) by simplified Newton.
    #[allow(clippy::too_many_arguments)]
    fn stage<R: OdeRhs>(
        &self,
        rhs: &R,
        t: f64,
        base: &[f64],
        guess: &[f64],
        h: f64,
        m: &[Vec<f64>],
        opts: &IntegratorOptions,
        evals: &mut usize,
    ) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let n = self.n;
        let mut z = guess.to_vec();
        let mut fz = vec![0.0; n];
        for _ in 0..12 {
            rhs.eval(t, &z, &mut fz)?;
            *evals += 1;
            let res: Vec<f64> = (0..n).map(|i| base[i] + GAMMA * h * fz[i] - z[i]).collect();
            let Some(dz) = lu_solve(m.to_vec(), res) else { return Ok(None) };
            let mut conv = 0.0f64;
            for i in 0..n {
                z[i] += dz[i];
                let sc = opts.abs_tol + opts.rel_tol * z[i].abs();
                conv = conv.max((dz[i] / sc).abs());
            }
            if conv < 1e-2 {
                rhs.eval(t, &z, &mut fz)?;
                *evals += 1;
                return Ok(Some((z, fz)));
            }
        }
        Ok(None)
    }
}

impl Stepper for Sdirk2Stepper {
    fn order(&self) -> f64 {
        2.0
    }

    fn step<R: OdeRhs>(
        &mut self,
        rhs: &R,
        t: f64,
        y: &[f64],
        f0: &[f64],
        h: f64,
        opts: &IntegratorOptions,
        evals: &mut usize,
    ) -> Result<Option<StepResult>> {
        let n = self.n;
        let jac = jacobian(rhs, t, y, f0, evals)?;
        // iteration matrix I − γhJ
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = -GAMMA * h * jac[i][j];
            }
            m[i][i] += 1.0;
        }
        // stage 1: Y1 = y + γh f(Y1)
        let guess: Vec<f64> = (0..n).map(|i| y[i] + GAMMA * h * f0[i]).collect();
        let Some((_, k1)) = self.stage(rhs, t + GAMMA * h, y, &guess, h, &m, opts, evals)? else {
            return Ok(None);
        };
        // stage 2: Y2 = y + (1-γ)h k1 + γh f(Y2); Y2 is the new solution
        let base: Vec<f64> = (0..n).map(|i| y[i] + (1.0 - GAMMA) * h * k1[i]).collect();
        let guess2: Vec<f64> = (0..n).map(|i| base[i] + GAMMA * h * k1[i]).collect();
        let Some((y2, k2)) = self.stage(rhs, t + h, &base, &guess2, h, &m, opts, evals)? else {
            return Ok(None);
        };
        // embedded first-order solution y + h k2; the raw difference is
        // filtered through (I − γhJ)⁻¹ so stiff components do not dominate
        let raw: Vec<f64> = (0..n).map(|i| (1.0 - GAMMA) * h * (k1[i] - k2[i])).collect();
        let Some(err) = lu_solve(m, raw) else { return Ok(None) };
        let en = error_norm(&err, y, &y2, opts);
        Ok(Some(StepResult {
            interp: Interp::Hermite([y.to_vec(), f0.to_vec(), y2.clone(), k2.clone()]),
            y1: y2,
            f1: k2,
            err: en,
        }))
    }
}
