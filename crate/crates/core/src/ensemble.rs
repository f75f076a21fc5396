//! Parallel ensembles of independent trajectories with deterministic
//! per-member random streams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_path, IntegratorConfig, ParticleState, TrajectoryRecord};
use crate::error::{CoreError, Result};
use crate::rng::stream;
use crate::spectral::{PhaseVector, SpectralSystem};
use crate::stats::Estimate;

/// How ensemble members are initialized at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleInit {
    /// Every member starts at the same configuration point.
    Point { q: Vec<f64> },
    /// Positions drawn from |psi(.; theta0, 0)|^2 (d = 1 systems).
    Equilibrium,
    /// Positions drawn uniformly over the domain (d = 1 systems).
    Uniform,
}

/// Ensemble run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub members: usize,
    pub horizon: f64,
    /// Transition-event rate applied to every member.
    pub rate: f64,
    pub integrator: IntegratorConfig,
    /// Record every `stride`-th step of each trajectory.
    pub stride: usize,
    pub init: EnsembleInit,
    pub theta0: PhaseVector,
}

/// Records of all members, index-aligned with the member stream ids.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub records: Vec<TrajectoryRecord>,
}

/// Runs the ensemble. Member `i` uses the dedicated random stream
/// `(master_seed, i)`, so the result is independent of thread scheduling and
/// bit-reproducible for a fixed seed.
pub fn run_ensemble(
    sys: &SpectralSystem,
    spec: &EnsembleSpec,
    master_seed: u64,
) -> Result<EnsembleResult> {
    if spec.members == 0 {
        return Err(CoreError::InvalidSpec("ensemble needs at least one member".into()));
    }
    spec.integrator.validate()?;
    if !(spec.rate >= 0.0) || !spec.rate.is_finite() {
        return Err(CoreError::InvalidSpec(format!("rate {} must be finite and >= 0", spec.rate)));
    }
    if spec.theta0.len() != sys.k() {
        return Err(CoreError::InvalidSpec(format!(
            "theta0 has {} phases, system has K = {}",
            spec.theta0.len(),
            sys.k()
        )));
    }
    // Tabulated once for equilibrium initialization.
    let init_field = match &spec.init {
        EnsembleInit::Equilibrium => {
            let f = sys.density_field(&spec.theta0, 0.0)?;
            let cdf = f.cdf();
            Some((f, cdf))
        }
        EnsembleInit::Uniform => {
            if sys.dim() != 1 {
                return Err(CoreError::Unsupported("uniform init requires d = 1".into()));
            }
            None
        }
        EnsembleInit::Point { q } => {
            if q.len() != sys.dim() {
                return Err(CoreError::InvalidSpec("init point dimension mismatch".into()));
            }
            if !sys.domain.contains(q) {
                return Err(CoreError::OutOfDomain { point: q.clone() });
            }
            None
        }
    };

    let records: Result<Vec<TrajectoryRecord>> = (0..spec.members)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master_seed, i as u64);
            let q = match (&spec.init, &init_field) {
                (EnsembleInit::Point { q }, _) => q.clone(),
                (EnsembleInit::Equilibrium, Some((f, cdf))) => {
                    vec![f.inverse_cdf(cdf, rand::Rng::random::<f64>(&mut rng))]
                }
                (EnsembleInit::Uniform, _) => {
                    let (lo, hi) = sys.domain.bounds[0];
                    vec![lo + (hi - lo) * rand::Rng::random::<f64>(&mut rng)]
                }
                _ => unreachable!(),
            };
            let state = ParticleState { q, theta: spec.theta0.clone(), t: 0.0 };
            simulate_path(
                sys,
                state,
                spec.horizon,
                spec.rate,
                &spec.integrator,
                spec.stride,
                &mut rng,
            )
        })
        .collect();
    Ok(EnsembleResult { records: records? })
}

impl EnsembleResult {
    /// First-coordinate positions at recorded index `idx` across members.
    pub fn positions_at(&self, idx: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.positions[idx][0]).collect()
    }

    /// Final first-coordinate positions.
    pub fn final_positions(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.final_state.q[0]).collect()
    }

    /// Final phase component `j` (0-based among the stored K phases).
    pub fn final_phases(&self, j: usize) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.final_state.theta.0[j].rem_euclid(std::f64::consts::TAU))
            .collect()
    }

    /// Ensemble mean position at each recorded index.
    pub fn mean_trajectory(&self) -> Vec<Estimate> {
        let n_rec = self.records[0].times.len();
        (0..n_rec)
            .map(|idx| Estimate::from_samples(&self.positions_at(idx)))
            .collect()
    }

    pub fn total_events(&self) -> usize {
        self.records.iter().map(|r| r.events.len()).sum()
    }
}
