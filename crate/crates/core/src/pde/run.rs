use super::layers::extract_layers;
use super::operators::{energy, spatial_operator};
use super::{PdeParams, PdeState, Stepper, VelocityLift};
use crate::error::{Error, Result};
use crate::layer_ode::{rhs_classic, OdeParams, VelocityMode};
use crate::potential::DoubleWellPotential;
use crate::profile::{build_uh, solve_hn1, Field, LayerVector, ProfileParams};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Starting point of a PDE run.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// u₀ = u^{h⁰}; u₁ from the classic right-hand side, its negative, or zero.
    Layers { h0: LayerVector, velocity: Option<VelocityMode> },
    Fields { u0: Field, u1: Field },
}

/// u₀ = u^{h⁰} on the grid and u₁ per `params.lift` (`None` gives u₁ ≡ 0).
pub fn initial_data(
    h0: &LayerVector,
    velocity: Option<VelocityMode>,
    params: &PdeParams,
    pot: &DoubleWellPotential,
) -> Result<(Field, Field)> {
    let profile = profile_params(params, h0.n())?;
    h0.check_omega(&profile)?;
    let u0 = build_uh(h0, &profile, pot, params.n)?;
    let u1 = match velocity {
        None => Field::zeros(params.n),
        Some(mode) => {
            let mut f = match params.lift {
                VelocityLift::Operator => spatial_operator(&u0, pot, params.eps),
                VelocityLift::Tangent => tangent_lift(h0, &profile, params, pot)?,
            };
            if mode == VelocityMode::Reversed {
                f.u.iter_mut().for_each(|v| *v = -*v);
            }
            f
        }
    };
    Ok((u0, u1))
}

/// Σⱼ Pⱼ(h) ∂u^h/∂hⱼ by central differences, with its trapezoid mean
/// removed so that mass is conserved exactly.
fn tangent_lift(
    h0: &LayerVector,
    profile: &ProfileParams,
    params: &PdeParams,
    pot: &DoubleWellPotential,
) -> Result<Field> {
    let ode = OdeParams { rho: params.rho, ..OdeParams::new(params.eps, params.tau, 0.0) };
    let eta = rhs_classic(h0, &ode, pot)?;
    let d = 1e-6 * params.eps;
    let mut u1 = Field::zeros(params.n);
    for (j, e) in eta.iter().enumerate() {
        let shifted = |s: f64| {
            let mut h = h0.positions().to_vec();
            h[j] += s;
            build_uh(&LayerVector::new(h)?, profile, pot, params.n)
        };
        // one-sided next to the smallest admissible gap
        let (up, dn, width) = match (shifted(d), shifted(-d)) {
            (Ok(a), Ok(b)) => (a, b, 2.0 * d),
            (Ok(a), Err(_)) => (a, shifted(0.0)?, d),
            (Err(_), Ok(b)) => (shifted(0.0)?, b, d),
            (Err(e), Err(_)) => return Err(e),
        };
        for i in 0..u1.u.len() {
            u1.u[i] += e * (up.u[i] - dn.u[i]) / width;
        }
    }
    let mean = u1.integral();
    u1.u.iter_mut().for_each(|v| *v -= mean);
    Ok(u1)
}

fn profile_params(params: &PdeParams, n: usize) -> Result<ProfileParams> {
    let gap = params.eps / params.rho;
    ProfileParams::new(params.eps, params.rho, 0.5 * gap, n)
}

/// One stored time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// Zero crossings of u; empty if u has no sign change.
    pub layers: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
}

impl Snapshot {
    fn of(state: &PdeState, pot: &DoubleWellPotential, eps: f64, keep_fields: bool) -> Snapshot {
        Snapshot {
            t: state.t,
            mass: state.mass(),
            energy: energy(&state.u, pot, eps),
            layers: extract_layers(&state.u).unwrap_or_default(),
            u: if keep_fields { state.u.u.clone() } else { Vec::new() },
            v: if keep_fields { state.v.u.clone() } else { Vec::new() },
        }
    }

    /// CSV `x,u,v` (requires the fields to have been kept).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if self.u.is_empty() {
            return Err(Error::Io("snapshot was stored without fields".into()));
        }
        let n = self.u.len() - 1;
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x,u,v")?;
        for i in 0..=n {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", i as f64 / n as f64, self.u[i], self.v[i])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Snapshots every `stride` steps plus the final state.
#[derive(Debug, Clone)]
pub struct PdeRun {
    pub snapshots: Vec<Snapshot>,
    pub final_state: PdeState,
}

impl PdeRun {
    /// CSV `t,h1..hK` with K the number of layers at t = 0; rows with a
    /// different count are skipped.
    pub fn write_layers_csv(&self, path: &Path) -> Result<()> {
        let k = self.snapshots.first().map_or(0, |s| s.layers.len());
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["t".to_string()];
        header.extend((1..=k).map(|i| format!("h{i}")));
        writeln!(w, "{}", header.join(","))?;
        for s in self.snapshots.iter().filter(|s| s.layers.len() == k) {
            let row: Vec<String> =
                std::iter::once(s.t).chain(s.layers.iter().copied()).map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes one `x,u,v` CSV per snapshot and a JSON manifest of (t, mass, energy).
    pub fn write_snapshots(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut index = Vec::new();
        for (k, s) in self.snapshots.iter().enumerate() {
            let name = format!("snapshot_{k:05}.csv");
            s.write_csv(&dir.join(&name))?;
            index.push(serde_json::json!({ "file": name, "t": s.t, "mass": s.mass, "energy": s.energy }));
        }
        let text = serde_json::to_string_pretty(&index).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("snapshots.json"), text)?;
        Ok(())
    }
}

/// Writes snapshots on a background thread fed through a bounded queue, so
/// that file output overlaps with stepping. File layout matches
/// [`PdeRun::write_snapshots`].
pub struct SnapshotWriter {
    tx: Option<std::sync::mpsc::SyncSender<Snapshot>>,
    handle: Option<std::thread::JoinHandle<Result<()>>>,
}

impl SnapshotWriter {
    pub fn spawn(dir: &Path, capacity: usize) -> Result<SnapshotWriter> {
        std::fs::create_dir_all(dir)?;
        let dir = dir.to_path_buf();
        let (tx, rx) = std::sync::mpsc::sync_channel::<Snapshot>(capacity.max(1));
        let handle = std::thread::spawn(move || -> Result<()> {
            let mut index = Vec::new();
            for (k, s) in rx.into_iter().enumerate() {
                let name = format!("snapshot_{k:05}.csv");
                s.write_csv(&dir.join(&name))?;
                index.push(serde_json::json!({ "file": name, "t": s.t, "mass": s.mass, "energy": s.energy }));
            }
            let text = serde_json::to_string_pretty(&index).map_err(|e| Error::Io(e.to_string()))?;
            std::fs::write(dir.join("snapshots.json"), text)?;
            Ok(())
        });
        Ok(SnapshotWriter { tx: Some(tx), handle: Some(handle) })
    }

    /// Queues a snapshot carrying the fields of `state`.
    pub fn send(&self, snap: &Snapshot, state: &PdeState) -> Result<()> {
        let full = Snapshot { u: state.u.u.clone(), v: state.v.u.clone(), ..snap.clone() };
        let tx = self.tx.as_ref().expect("sender lives until finish");
        tx.send(full).map_err(|_| Error::Io("snapshot writer stopped".into()))
    }

    /// Closes the queue and waits for the writer.
    pub fn finish(mut self) -> Result<()> {
        self.tx.take();
        match self.handle.take().expect("joined once").join() {
            Ok(r) => r,
            Err(_) => Err(Error::Io("snapshot writer panicked".into())),
        }
    }
}

/// Steps from the initial data to `t_end`, calling `observe` on every
/// stored snapshot as it is produced.
pub fn integrate_pde(
    init: &InitialData,
    params: &PdeParams,
    pot: &DoubleWellPotential,
    keep_fields: bool,
    mut observe: impl FnMut(&Snapshot, &PdeState) -> Result<()>,
) -> Result<PdeRun> {
    let (u0, u1) = match init {
        InitialData::Layers { h0, velocity } => initial_data(h0, *velocity, params, pot)?,
        InitialData::Fields { u0, u1 } => (u0.clone(), u1.clone()),
    };
    if u0.intervals() != params.n {
        return Err(Error::ValidationFailure(format!(
            "initial data has {} intervals, params say {}",
            u0.intervals(),
            params.n
        )));
    }
    let mut stepper = Stepper::new(params, pot)?;
    let mut state = PdeState::new(u0, u1, 0.0)?;
    let mut snapshots = Vec::new();
    let first = Snapshot::of(&state, pot, params.eps, keep_fields);
    observe(&first, &state)?;
    snapshots.push(first);
    let total = params.steps();
    for k in 1..=total {
        stepper.step(&mut state)?;
        if k % params.stride as u64 == 0 || k == total {
            let s = Snapshot::of(&state, pot, params.eps, keep_fields);
            observe(&s, &state)?;
            snapshots.push(s);
        }
    }
    Ok(PdeRun { snapshots, final_state: state })
}

/// Distance of a PDE state to the nearest approximate metastable state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub layers: Vec<f64>,
    /// Extracted layers with the last one moved so that u^h carries the
    /// state's mass (the extracted layers themselves if that fails).
    pub h_ref: Vec<f64>,
    /// ‖u − u^{h_ref}‖∞ on the grid; `None` if u^{h_ref} cannot be built.
    pub distance: Option<f64>,
    /// ℓ^h = min_j (h_j − h_{j−1}) including the reflected ends.
    pub min_gap: f64,
    /// ‖u − u^h‖∞ · ε^{5/2} · exp(Aℓ^h/ε).
    pub ratio: Option<f64>,
    pub note: Option<String>,
}

pub fn diagnostics(state: &PdeState, params: &PdeParams, pot: &DoubleWellPotential) -> Result<Diagnostics> {
    let eps = params.eps;
    let layers = extract_layers(&state.u)?;
    let mass = state.mass();
    let mut note = None;
    let h_ext = LayerVector::new(layers.clone())?;
    let profile = profile_params(params, h_ext.n())?;
    let h_ref = {
        let xi = &layers[..layers.len() - 1];
        match solve_hn1(xi, mass, &profile, pot) {
            Ok(last) => LayerVector::new(xi.iter().copied().chain([last]).collect())?,
            Err(e) => {
                note = Some(format!("mass matching failed ({e}); using extracted layers"));
                h_ext
            }
        }
    };
    let distance = match build_uh(&h_ref, &profile, pot, params.n) {
        Ok(uh) => Some(uh.u.iter().zip(&state.u.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)),
        Err(e) => {
            note = Some(format!("no reference profile: {e}"));
            None
        }
    };
    let min_gap = h_ref.min_gap();
    let a = pot.a_min();
    let ratio = distance.map(|d| d * eps.powf(2.5) * (a * min_gap / eps).exp());
    Ok(Diagnostics {
        t: state.t,
        mass,
        energy: energy(&state.u, pot, eps),
        layers,
        h_ref: h_ref.positions().to_vec(),
        distance,
        min_gap,
        ratio,
        note,
    })
}
