//! The CLI subcommands as library calls: each writes its CSV outputs and a
//! `manifest.json` into the output directory and returns a verdict.

use super::compare::{compare_pde_ode, DEFAULT_GAP_TOL};
use super::config::{Mode, RunConfig};
use super::sweep::{sweep_tau, DEFAULT_RATE_TOL};
use super::tables::{reproduce_table, table_params, TableRef, DEFAULT_REL_TOL};
use crate::error::{Error, Result};
use crate::layer_ode::{initial_velocities, integrate, l_pm, Termination};
use crate::pde::{diagnostics, integrate_pde, InitialData, SnapshotWriter};
use crate::potential::quartic_potential;
use crate::profile::LayerVector;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Default bound on the PDE mass drift over a run.
pub const DEFAULT_MASS_TOL: f64 = 1e-10;
const SNAPSHOT_QUEUE: usize = 4;
/// Samples per Figure 1 series.
const FIGURE_POINTS: usize = 1001;

/// Result of a completed subcommand. Solver failures are returned as `Err`
/// by the command itself; `verdict` carries tolerance failures only.
#[derive(Debug)]
pub struct Outcome {
    pub verdict: Result<()>,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: String,
    config: Option<&'a RunConfig>,
    tolerances: Tolerances,
    solvers: Solvers,
    outputs: Vec<String>,
    verdict: String,
    summary: &'a str,
}

#[derive(Debug, Serialize)]
struct Tolerances {
    rel_tol: f64,
    abs_tol: f64,
    threshold: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Solvers {
    ode: String,
    pde: Option<String>,
}

fn write_manifest(
    out: &Path,
    command: &str,
    cfg: Option<&RunConfig>,
    threshold: Option<f64>,
    outcome: &mut Outcome,
) -> Result<()> {
    let (rel_tol, abs_tol, ode, pde) = match cfg {
        Some(c) => (
            c.solver.rel_tol,
            c.solver.abs_tol,
            format!("{:?}", c.solver.method).to_lowercase(),
            c.pde.as_ref().map(|p| format!("{:?}", p.scheme)),
        ),
        None => (1e-11, 1e-16, "dopri5".into(), None),
    };
    let hash = cfg.map(RunConfig::hash).unwrap_or_default();
    let path = out.join("manifest.json");
    outcome.files.push(path.clone());
    let m = Manifest {
        tool: "metastable",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_hash: hash,
        config: cfg,
        tolerances: Tolerances { rel_tol, abs_tol, threshold },
        solvers: Solvers { ode, pde },
        outputs: outcome.files.iter().filter_map(|f| f.strip_prefix(out).ok()).map(|f| f.display().to_string()).collect(),
        verdict: match &outcome.verdict {
            Ok(()) => "pass".into(),
            Err(e) => e.to_string(),
        },
        summary: &outcome.summary,
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn expect_mode(cfg: &RunConfig, mode: Mode) -> Result<()> {
    if cfg.mode != mode {
        return Err(Error::Config(format!("config mode is {:?}, command needs {mode:?}", cfg.mode)));
    }
    Ok(())
}

/// Reduced layer dynamics: `trajectory.csv` (t, h, η) and `lengths.csv`
/// (t, L₋, L₊) at the sample times.
pub fn run_ode(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    expect_mode(cfg, Mode::Ode)?;
    std::fs::create_dir_all(out)?;
    let pot = cfg.potential()?;
    let m = cfg.model()?;
    let h0 = cfg.layers()?;
    let params = cfg.ode_params()?;
    let eta0 = match m.velocity.mode() {
        Some(mode) => initial_velocities(&h0, mode, &params, &pot)?,
        None => vec![0.0; h0.len()],
    };
    let eta = if params.tau > 0.0 { Some(eta0.as_slice()) } else { None };
    let tr = integrate(params.system(), &h0, eta, &params, &pot)?;
    let times: Vec<f64> = m.sample_times.iter().copied().filter(|&t| t <= tr.t_final()).collect();
    let states = if m.sample_times.is_empty() {
        tr.states()?
    } else {
        times.iter().map(|&t| tr.state_at(t)).collect::<Result<Vec<_>>>()?
    };
    let traj = out.join("trajectory.csv");
    tr.write_csv(&traj, if m.sample_times.is_empty() { None } else { Some(&times) })?;
    let lengths = out.join("lengths.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&lengths)?);
    writeln!(w, "t,l_minus,l_plus")?;
    for s in &states {
        let b = l_pm(s);
        writeln!(w, "{:.17e},{:.17e},{:.17e}", s.t, b.l_minus, b.l_plus)?;
    }
    w.flush()?;
    let summary = format!("{:?} after t = {}", tr.termination, tr.t_final());
    let mut outcome = Outcome { verdict: Ok(()), summary, files: vec![traj, lengths] };
    write_manifest(out, "run-ode", Some(cfg), None, &mut outcome)?;
    Ok(outcome)
}

/// Full PDE: `layers.csv`, `diagnostics.csv` and optionally per-sample
/// field snapshots. Fails the tolerance check if the mass drifts.
pub fn run_pde(cfg: &RunConfig, out: &Path, tol_override: Option<f64>) -> Result<Outcome> {
    expect_mode(cfg, Mode::Pde)?;
    std::fs::create_dir_all(out)?;
    let pot = cfg.potential()?;
    let params = cfg.pde_params()?;
    let m = cfg.model()?;
    let init = InitialData::Layers { h0: cfg.layers()?, velocity: m.velocity.mode() };
    let writer = match cfg.pde_section()?.snapshots {
        true => Some(SnapshotWriter::spawn(&out.join("snapshots"), SNAPSHOT_QUEUE)?),
        false => None,
    };
    let mut diag = Vec::new();
    let start = Instant::now();
    let run = integrate_pde(&init, &params, &pot, false, |snap, state| {
        if let Some(w) = &writer {
            w.send(snap, state)?;
        }
        diag.push(diagnostics(state, &params, &pot));
        Ok(())
    });
    if let Some(w) = writer {
        w.finish()?;
    }
    let run = run?;
    let mut files = Vec::new();
    let layers = out.join("layers.csv");
    run.write_layers_csv(&layers)?;
    files.push(layers);
    let dpath = out.join("diagnostics.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&dpath)?);
    writeln!(w, "t,mass,energy,distance,min_gap,ratio")?;
    for (snap, d) in run.snapshots.iter().zip(&diag) {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        match d {
            Ok(d) => writeln!(w, "{:e},{:.17e},{:e},{},{:e},{}", d.t, d.mass, d.energy, opt(d.distance), d.min_gap, opt(d.ratio))?,
            Err(_) => writeln!(w, "{:e},{:.17e},{:e},,,", snap.t, snap.mass, snap.energy)?,
        }
    }
    w.flush()?;
    files.push(dpath);
    if cfg.pde_section()?.snapshots {
        files.push(out.join("snapshots/snapshots.json"));
    }
    let tol = tol_override.or(cfg.tolerance).unwrap_or(DEFAULT_MASS_TOL);
    let drift = run.snapshots.iter().map(|s| (s.mass - run.final_state.m0).abs()).fold(0.0, f64::max);
    let verdict = if drift <= tol { Ok(()) } else { Err(Error::ToleranceFailure { failed: 1 }) };
    let summary = format!(
        "{} steps in {:.1} s, max mass drift {drift:.3e}",
        params.steps(),
        start.elapsed().as_secs_f64()
    );
    let mut outcome = Outcome { verdict, summary, files };
    write_manifest(out, "run-pde", Some(cfg), Some(tol), &mut outcome)?;
    Ok(outcome)
}

pub fn compare(cfg: &RunConfig, out: &Path, tol_override: Option<f64>) -> Result<Outcome> {
    expect_mode(cfg, Mode::Compare)?;
    std::fs::create_dir_all(out)?;
    let report = compare_pde_ode(cfg)?;
    let tol = tol_override.or(cfg.tolerance).unwrap_or(DEFAULT_GAP_TOL);
    let csv = out.join("compare.csv");
    report.write_csv(&csv)?;
    let summary = format!(
        "sup gap {:.3e}, terminal gap {:.3e}, signs agree: {}, ratio growth {:?}",
        report.sup_gap,
        report.terminal_gap,
        report.signs_agree,
        report.ratio_growth()
    );
    let mut outcome = Outcome { verdict: report.verdict(tol), summary, files: vec![csv] };
    write_manifest(out, "compare", Some(cfg), Some(tol), &mut outcome)?;
    Ok(outcome)
}

pub fn sweep(cfg: &RunConfig, out: &Path, tol_override: Option<f64>) -> Result<Outcome> {
    expect_mode(cfg, Mode::SweepTau)?;
    std::fs::create_dir_all(out)?;
    let report = sweep_tau(cfg)?;
    let tol = tol_override.or(cfg.tolerance).unwrap_or(DEFAULT_RATE_TOL);
    let csv = out.join("sweep.csv");
    report.write_csv(&csv)?;
    let summary = format!("fitted rate {:?}, monotone: {}", report.slope, report.monotone);
    let mut outcome = Outcome { verdict: report.verdict(tol), summary, files: vec![csv] };
    write_manifest(out, "sweep-tau", Some(cfg), Some(tol), &mut outcome)?;
    Ok(outcome)
}

/// h₁(t) for the two-layer reference setup, sampled uniformly until the
/// first layer reaches the boundary threshold (or t = 2000).
pub fn figure1_series(tau: f64) -> Result<Vec<(f64, f64)>> {
    let table = TableRef::load(1)?;
    let pot = quartic_potential();
    let params = crate::layer_ode::OdeParams { t_end: 2000.0, ..table_params(&table, tau) };
    let h0 = LayerVector::new(table.h0.clone())?;
    let eta0 = initial_velocities(&h0, table.velocity, &params, &pot)?;
    let eta = if tau > 0.0 { Some(eta0.as_slice()) } else { None };
    let tr = integrate(params.system(), &h0, eta, &params, &pot)?;
    if let Termination::Collision { gap } = tr.termination {
        return Err(Error::DomainError(format!("layers collided at gap {gap}")));
    }
    let t_last = tr.t_final();
    (0..FIGURE_POINTS)
        .map(|i| {
            let t = t_last * i as f64 / (FIGURE_POINTS - 1) as f64;
            Ok((t, tr.state_at(t)?.h.positions()[0]))
        })
        .collect()
}

fn write_series(path: &Path, series: &[(f64, f64)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,h1")?;
    for (t, h) in series {
        writeln!(w, "{t:.17e},{h:.17e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reference table `id`; table 1 also emits the Figure 1 series for τ = 0
/// and τ = 50.
pub fn table(id: u8, out: &Path, tol_override: Option<f64>) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let tol = tol_override.unwrap_or(DEFAULT_REL_TOL);
    let report = reproduce_table(id, Some(tol))?;
    let csv = out.join(format!("table{id}.csv"));
    report.write_csv(&csv)?;
    let mut files = vec![csv];
    if id == 1 {
        for tau in [0.0, 50.0] {
            let path = out.join(format!("figure1_tau{tau}.csv"));
            write_series(&path, &figure1_series(tau)?)?;
            files.push(path);
        }
    }
    let failed = report.failures().len();
    let summary = format!("{} entries, {failed} outside tolerance, {:.2} s", report.entries.len(), report.seconds);
    let mut cfg = RunConfig::from_toml(&format!("mode = \"table\"\n[table]\nid = {id}"))?;
    cfg.tolerance = Some(tol);
    let mut outcome = Outcome { verdict: report.verdict(), summary, files };
    write_manifest(out, "reproduce-table", Some(&cfg), Some(tol), &mut outcome)?;
    Ok(outcome)
}
