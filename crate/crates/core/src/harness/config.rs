//! Run configuration: one TOML file, validated before any run, with
//! `section.key=value` overrides applied on top of the file.

use crate::error::{Error, Result};
use crate::layer_ode::{Method, OdeParams, VelocityMode};
use crate::pde::{PdeParams, Scheme, VelocityLift};
use crate::potential::{quartic_potential, DoubleWellPotential};
use crate::profile::{AlphaMode, LayerVector, ProfileParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Ode,
    Pde,
    Compare,
    Table,
    SweepTau,
}

/// Initial layer velocities; `Zero` starts from rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Velocity {
    #[default]
    Forward,
    Reversed,
    Zero,
}

impl Velocity {
    pub fn mode(self) -> Option<VelocityMode> {
        match self {
            Velocity::Forward => Some(VelocityMode::Forward),
            Velocity::Reversed => Some(VelocityMode::Reversed),
            Velocity::Zero => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// Polynomial coefficients of F in increasing degree; the quartic
    /// (u² − 1)²/4 when absent.
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
}

impl PotentialConfig {
    pub fn build(&self) -> Result<DoubleWellPotential> {
        match &self.coefficients {
            None => Ok(quartic_potential()),
            Some(c) => DoubleWellPotential::from_coefficients(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub eps: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Defaults to ε/(2ρ).
    #[serde(default)]
    pub delta: Option<f64>,
    pub h0: Vec<f64>,
    #[serde(default)]
    pub velocity: Velocity,
    pub t_end: f64,
    /// Output times; the integrator's own steps when empty.
    #[serde(default)]
    pub sample_times: Vec<f64>,
}

fn default_rho() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub alpha: AlphaMode,
}

fn default_rel_tol() -> f64 {
    1e-11
}

fn default_abs_tol() -> f64 {
    1e-16
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            method: Method::default(),
            alpha: AlphaMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    /// Grid intervals.
    pub n: usize,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Output interval in model time units.
    #[serde(default = "default_every")]
    pub sample_every: f64,
    #[serde(default = "default_lift")]
    pub lift: VelocityLift,
    /// Write u, v at every sample (run-pde only).
    #[serde(default)]
    pub snapshots: bool,
}

fn default_every() -> f64 {
    10.0
}

fn default_lift() -> VelocityLift {
    VelocityLift::Tangent
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Strictly decreasing; τ = 0 runs the classic system against itself.
    pub taus: Vec<f64>,
    /// Start of the window for the late-time velocity error.
    #[serde(default)]
    pub t1: f64,
    /// Re-solve the last layer so that the profile carries this mass.
    #[serde(default)]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub id: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Pass/fail threshold of the run; each mode has its own default.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "default_potential")]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub pde: Option<PdeConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub table: Option<TableConfig>,
}

fn default_potential() -> PotentialConfig {
    PotentialConfig { coefficients: None }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        Self::from_toml_with(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides (dotted keys, TOML
    /// values) and validates the result.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = doc.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_with(&text, overrides)
    }

    pub fn model(&self) -> Result<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| Error::Config("missing [model] section".into()))
    }

    pub fn pde_section(&self) -> Result<&PdeConfig> {
        self.pde.as_ref().ok_or_else(|| Error::Config("missing [pde] section".into()))
    }

    pub fn sweep_section(&self) -> Result<&SweepConfig> {
        self.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))
    }

    pub fn potential(&self) -> Result<DoubleWellPotential> {
        self.potential.build()
    }

    pub fn layers(&self) -> Result<LayerVector> {
        LayerVector::new(self.model()?.h0.clone())
    }

    pub fn ode_params(&self) -> Result<OdeParams> {
        let m = self.model()?;
        let mut p = OdeParams::new(m.eps, m.tau, m.t_end).with_tolerances(self.solver.rel_tol, self.solver.abs_tol);
        p.rho = m.rho;
        p.delta = m.delta.unwrap_or(0.5 * m.eps / m.rho);
        p.alpha_mode = self.solver.alpha;
        p.method = self.solver.method;
        Ok(p)
    }

    pub fn pde_params(&self) -> Result<PdeParams> {
        let m = self.model()?;
        let s = self.pde_section()?;
        let stride = (s.sample_every / s.dt).round().max(1.0) as usize;
        Ok(PdeParams {
            scheme: s.scheme,
            stride,
            rho: m.rho,
            lift: s.lift,
            ..PdeParams::new(m.eps, m.tau, s.n, s.dt, m.t_end)
        })
    }

    /// Cross-field checks; called by every constructor.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let pot = self.potential()?;
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tolerance must be positive, got {t}"));
            }
        }
        if self.mode == Mode::Table {
            let id = self.table.as_ref().map(|t| t.id);
            if !matches!(id, Some(1..=4)) {
                return bad("mode = table needs [table] id in 1..=4".into());
            }
            return Ok(());
        }
        let m = self.model()?;
        if !(m.eps > 0.0 && m.tau >= 0.0 && m.t_end > 0.0 && m.rho > 0.0) {
            return bad("need eps > 0, tau >= 0, t_end > 0, rho > 0".into());
        }
        if m.sample_times.iter().any(|&t| !(0.0..=m.t_end).contains(&t)) {
            return bad("sample times must lie in [0, t_end]".into());
        }
        if m.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sample times must increase".into());
        }
        let h = self.layers()?;
        // δ < ε/ρ < 1/(N+1) and h⁰ ∈ Ω_ρ
        let profile = ProfileParams::new(m.eps, m.rho, m.delta.unwrap_or(0.5 * m.eps / m.rho), h.n())?;
        h.check_omega(&profile)?;
        self.ode_params()?.validate()?;
        match self.mode {
            Mode::Pde | Mode::Compare => {
                let p = self.pde_params()?;
                p.validate(&pot)?;
                let s = self.pde_section()?;
                if !(s.sample_every >= s.dt) {
                    return bad("pde.sample_every must be at least one step".into());
                }
            }
            Mode::SweepTau => {
                let s = self.sweep_section()?;
                if s.taus.is_empty() {
                    return bad("sweep.taus is empty".into());
                }
                if s.taus.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
                    return bad("sweep.taus must be non-negative".into());
                }
                if s.taus.windows(2).any(|w| w[1] >= w[0]) {
                    return bad("sweep.taus must be strictly decreasing".into());
                }
                if !(0.0..m.t_end).contains(&s.t1) {
                    return bad("sweep.t1 must lie in [0, t_end)".into());
                }
            }
            Mode::Ode | Mode::Table => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        // bare words are strings
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut table = doc;
    for p in path {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const COMPARE: &str = r#"
mode = "compare"

[model]
eps = 0.07
tau = 50.0
h0 = [0.31, 0.66]
t_end = 300.0

[pde]
n = 1024
dt = 1e-3
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_toml(COMPARE).unwrap();
        assert_eq!(c.mode, Mode::Compare);
        let m = c.model().unwrap();
        assert_eq!(m.velocity, Velocity::Forward);
        assert_eq!(m.rho, 0.5);
        let p = c.ode_params().unwrap();
        assert_eq!(p.delta, 0.07);
        assert_eq!(p.rel_tol, 1e-11);
        let pde = c.pde_params().unwrap();
        assert_eq!(pde.stride, 10_000);
        assert_eq!(pde.lift, VelocityLift::Tangent);
    }

    #[test]
    fn overrides_replace_file_keys() {
        let o = vec!["model.tau=5".to_string(), "model.velocity=reversed".into(), "pde.scheme=imex_cn".into()];
        let c = RunConfig::from_toml_with(COMPARE, &o).unwrap();
        assert_eq!(c.model().unwrap().tau, 5.0);
        assert_eq!(c.model().unwrap().velocity, Velocity::Reversed);
        assert_eq!(c.pde_params().unwrap().scheme, Scheme::ImexCn);
        assert!(RunConfig::from_toml_with(COMPARE, &["model".into()]).is_err());
        assert!(RunConfig::from_toml_with(COMPARE, &["model.eps.x=1".into()]).is_err());
    }

    #[test]
    fn cross_field_validation() {
        let with = |o: &str| RunConfig::from_toml_with(COMPARE, &[o.to_string()]);
        // interface under-resolved
        assert!(with("pde.n=64").is_err());
        // explicit reaction step too large
        assert!(with("pde.dt=0.05").is_err());
        // layers closer than ε/ρ
        assert!(with("model.h0=[0.31, 0.4]").is_err());
        // ε/ρ ≥ 1/(N+1)
        assert!(with("model.rho=0.1").is_err());
        assert!(with("model.sample_times=[10.0, 5.0]").is_err());
        assert!(with("unknown_key=1").is_err());
        // the ODE mode does not need a grid
        assert!(with("mode=\"ode\"").is_ok());
        let no_grid = COMPARE.replace("[pde]\nn = 1024\ndt = 1e-3\n", "");
        assert!(RunConfig::from_toml(&no_grid).is_err());
        assert!(RunConfig::from_toml_with(&no_grid, &["mode=ode".into()]).is_ok());
    }

    #[test]
    fn sweep_validation() {
        let base = "mode = \"sweep-tau\"\n[model]\neps = 0.07\nh0 = [0.31, 0.66]\nt_end = 300.0\n[sweep]\n";
        assert!(RunConfig::from_toml(&format!("{base}taus = [0.1, 0.01, 0.0]")).is_ok());
        assert!(RunConfig::from_toml(&format!("{base}taus = [0.01, 0.1]")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}taus = []")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}taus = [0.1]\nt1 = 400.0")).is_err());
    }

    #[test]
    fn table_mode_needs_only_an_id() {
        assert!(RunConfig::from_toml("mode = \"table\"\n[table]\nid = 3").is_ok());
        assert!(RunConfig::from_toml("mode = \"table\"\n[table]\nid = 5").is_err());
        assert!(RunConfig::from_toml("mode = \"table\"").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::from_toml(COMPARE).unwrap();
        let b = RunConfig::from_toml(COMPARE).unwrap();
        let c = RunConfig::from_toml_with(COMPARE, &["model.tau=49.0".into()]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
