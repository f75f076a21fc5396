//! Configuration document parsing and validation.
//!
//! Configs are TOML (comments supported, round-trippable); unknown keys are
//! rejected and the seed is mandatory so every run is reproducible by
//! construction.

use dualist_core::dynamics::{BoundaryPolicy, IntegratorConfig};
use dualist_core::ensemble::{EnsembleInit, EnsembleSpec};
use dualist_core::macro_limit::GaussianPacketSpec;
use dualist_core::spectral::{build_model, ModelSpec, NodePolicy, PhaseVector, SpectralSystem};
use dualist_core::ste::RateModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    /// hbar = m = 1 scale used by the desk-size experiments.
    Natural,
    /// SI constants; only the arithmetic checks use this.
    Physical,
}

fn default_units() -> UnitSystem {
    UnitSystem::Natural
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryPolicy,
}

fn default_boundary() -> BoundaryPolicy {
    BoundaryPolicy::Reflect
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub members: usize,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_init")]
    pub init: EnsembleInit,
    /// Initial inter-level phases; defaults to the phases implied by the
    /// declared model coefficients.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
}

fn default_stride() -> usize {
    1
}

fn default_init() -> EnsembleInit {
    EnsembleInit::Equilibrium
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub eps_node: Option<f64>,
    pub b_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub significance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleInit {
    Uniform,
    Equilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Final time of the density evolution.
    pub t1: f64,
    #[serde(default = "default_oracle_steps")]
    pub steps: usize,
    #[serde(default = "default_oracle_init")]
    pub init: OracleInit,
}

fn default_oracle_steps() -> usize {
    200
}

fn default_oracle_init() -> OracleInit {
    OracleInit::Uniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteTestSection {
    /// Number of seeded (position, time) evaluation points.
    pub points: usize,
    pub draws: usize,
    pub bins: usize,
    /// Failures tolerated across all points at the configured significance.
    pub allowed_failures: usize,
}

impl Default for SteTestSection {
    fn default() -> Self {
        SteTestSection { points: 5, draws: 20_000, bins: 32, allowed_failures: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqeSection {
    pub members: usize,
    /// Event time applied to every member.
    pub time: f64,
    pub phase_bins: usize,
}

impl Default for DqeSection {
    fn default() -> Self {
        DqeSection { members: 2000, time: 0.3, phase_bins: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrwSection {
    pub alpha: f64,
    pub rate: f64,
    /// Initial Gaussian width of |psi|^2.
    pub sigma0: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    #[serde(default = "default_grw_grid")]
    pub grid_n: usize,
    #[serde(default = "default_hits")]
    pub hits: usize,
}

fn default_grw_grid() -> usize {
    2001
}

fn default_hits() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroSection {
    pub packet: GaussianPacketSpec,
    pub n_particles: u64,
    pub particle_mass: f64,
    pub lambda: f64,
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "default_r_count")]
    pub r_count: usize,
    /// Monte Carlo draws per scan point (0 disables the MC column).
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
}

fn default_r_count() -> usize {
    41
}

fn default_mc_draws() -> usize {
    2000
}

/// Top-level experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default = "default_units")]
    pub units: UnitSystem,
    pub model: ModelSpec,
    pub integrator: IntegratorSection,
    #[serde(default = "default_rate")]
    pub rate: RateModel,
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub ste_test: Option<SteTestSection>,
    #[serde(default)]
    pub dqe: Option<DqeSection>,
    #[serde(default)]
    pub grw: Option<GrwSection>,
    #[serde(default, rename = "macro")]
    pub macro_scan: Option<MacroSection>,
}

fn default_rate() -> RateModel {
    RateModel::Constant { lambda: 0.0 }
}

impl SimConfig {
    pub fn significance(&self) -> f64 {
        self.overrides.significance.unwrap_or(0.01)
    }
}

/// Parses and validates a configuration document; on failure returns the
/// full list of field-level errors.
pub fn parse_config(text: &str) -> Result<SimConfig, Vec<String>> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| vec![e.to_string()])?;
    let errors = validate(&cfg);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Exhaustive validation; returns every problem found, not just the first.
pub fn validate(cfg: &SimConfig) -> Vec<String> {
    let mut errors = Vec::new();
    if !(cfg.integrator.dt > 0.0) || !cfg.integrator.dt.is_finite() {
        errors.push(format!("integrator.dt: must be finite and > 0, got {}", cfg.integrator.dt));
    }
    if cfg.ensemble.members == 0 {
        errors.push("ensemble.members: must be >= 1".into());
    }
    if !(cfg.ensemble.horizon > 0.0) || !cfg.ensemble.horizon.is_finite() {
        errors.push(format!(
            "ensemble.horizon: must be finite and > 0, got {}",
            cfg.ensemble.horizon
        ));
    }
    if cfg.ensemble.stride == 0 {
        errors.push("ensemble.stride: must be >= 1".into());
    }
    if let Err(e) = cfg.rate.validate() {
        errors.push(format!("rate: {e}"));
    }
    if let Some(e) = cfg.overrides.eps_node.filter(|v| !(*v > 0.0)) {
        errors.push(format!("overrides.eps_node: must be > 0, got {e}"));
    }
    if let Some(b) = cfg.overrides.b_max.filter(|v| !(*v > 0.0)) {
        errors.push(format!("overrides.b_max: must be > 0, got {b}"));
    }
    if let Some(s) = cfg
        .overrides
        .significance
        .filter(|v| !(*v > 0.0 && *v < 1.0))
    {
        errors.push(format!("overrides.significance: must lie in (0, 1), got {s}"));
    }
    let mut model = cfg.model.clone();
    if let Some(gp) = cfg.overrides.grid_points {
        model.grid_points = Some(gp);
    }
    match build_model(&model) {
        Err(e) => errors.push(format!("model: {e}")),
        Ok((sys, _)) => {
            if let Some(theta0) = &cfg.ensemble.theta0 {
                if theta0.len() != sys.k() {
                    errors.push(format!(
                        "ensemble.theta0: has {} phases, model has K = {}",
                        theta0.len(),
                        sys.k()
                    ));
                }
            }
            if let EnsembleInit::Point { q } = &cfg.ensemble.init {
                if q.len() != sys.dim() || !sys.domain.contains(q) {
                    errors.push("ensemble.init: point lies outside the model domain".into());
                }
            }
        }
    }
    if let Some(g) = &cfg.grw {
        if !(g.alpha > 0.0) {
            errors.push(format!("grw.alpha: must be > 0, got {}", g.alpha));
        }
        if !(g.rate >= 0.0) {
            errors.push(format!("grw.rate: must be >= 0, got {}", g.rate));
        }
        if !(g.sigma0 > 0.0) {
            errors.push(format!("grw.sigma0: must be > 0, got {}", g.sigma0));
        }
        if !(g.grid_hi > g.grid_lo) || g.grid_n < 2 {
            errors.push("grw: grid must satisfy grid_hi > grid_lo and grid_n >= 2".into());
        }
    }
    if let Some(m) = &cfg.macro_scan {
        if m.n_particles == 0 {
            errors.push("macro.n_particles: must be >= 1".into());
        }
        if !(m.lambda >= 0.0) {
            errors.push(format!("macro.lambda: must be >= 0, got {}", m.lambda));
        }
        if !(m.r_max >= m.r_min) || m.r_count < 2 {
            errors.push("macro: scan needs r_max >= r_min and r_count >= 2".into());
        }
    }
    errors
}

/// A validated, fully assembled experiment ready to run.
pub struct Experiment {
    pub system: SpectralSystem,
    pub theta0: PhaseVector,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleSpec,
    pub rate: f64,
}

/// Builds the model and run specs from a validated config, applying
/// overrides.
pub fn build_experiment(cfg: &SimConfig) -> dualist_core::Result<Experiment> {
    let mut model = cfg.model.clone();
    if let Some(gp) = cfg.overrides.grid_points {
        model.grid_points = Some(gp);
    }
    let (system, theta_model) = build_model(&model)?;
    let theta0 = match &cfg.ensemble.theta0 {
        Some(v) => PhaseVector(v.clone()),
        None => theta_model,
    };
    let node = NodePolicy {
        eps_node: cfg.overrides.eps_node.unwrap_or(NodePolicy::default().eps_node),
        b_max: cfg.overrides.b_max.unwrap_or(NodePolicy::default().b_max),
    };
    let integrator = IntegratorConfig {
        dt: cfg.integrator.dt,
        deterministic: cfg.integrator.deterministic,
        boundary: cfg.integrator.boundary,
        node,
    };
    let rate = cfg.rate.rate(&system);
    let ensemble = EnsembleSpec {
        members: cfg.ensemble.members,
        horizon: cfg.ensemble.horizon,
        rate,
        integrator,
        stride: cfg.ensemble.stride,
        init: cfg.ensemble.init.clone(),
        theta0: theta0.clone(),
    };
    Ok(Experiment { system, theta0, integrator, ensemble, rate })
}
