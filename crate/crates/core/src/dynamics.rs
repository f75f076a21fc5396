//! Particle dynamics: the Langevin integrator for single trajectories and an
//! independent Fokker-Planck grid solver used as a distributional oracle.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::DensityField;
use crate::spectral::{NodePolicy, PhaseVector, SpectralSystem};
use crate::ste::{sample_ste, schedule_events, SteEvent};

/// What to do when a step lands outside a hard-walled domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Fold the overshoot back into the domain (default).
    Reflect,
    /// Clamp to the nearest wall.
    Clamp,
}

/// Integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Suppress the noise term: integrate dx = b dt only.
    pub deterministic: bool,
    pub boundary: BoundaryPolicy,
    pub node: NodePolicy,
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Self {
        IntegratorConfig {
            dt,
            deterministic: false,
            boundary: BoundaryPolicy::Reflect,
            node: NodePolicy::default(),
        }
    }

    /// Default step: 1e-3 of the system's diffusion timescale m L^2 / hbar,
    /// with L the extent of the first coordinate.
    pub fn default_for(sys: &SpectralSystem) -> Self {
        let (lo, hi) = sys.domain.bounds[0];
        let l = hi - lo;
        Self::new(1e-3 * sys.masses[0] * l * l / sys.hbar)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CoreError::InvalidSpec(format!("dt {} must be finite and > 0", self.dt)));
        }
        Ok(())
    }
}

/// Instantaneous particle state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticleState {
    pub q: Vec<f64>,
    pub theta: PhaseVector,
    pub t: f64,
}

fn apply_boundary(x: f64, lo: f64, hi: f64, policy: BoundaryPolicy) -> f64 {
    match policy {
        BoundaryPolicy::Clamp => x.clamp(lo, hi),
        BoundaryPolicy::Reflect => {
            let span = hi - lo;
            // Fold into a period of 2 span, then mirror the upper half.
            let mut y = (x - lo).rem_euclid(2.0 * span);
            if y > span {
                y = 2.0 * span - y;
            }
            lo + y
        }
    }
}

/// One Euler-Maruyama step with per-coordinate diffusion D_k = hbar / m_k;
/// advances `state.q` and `state.t` in place.
pub fn em_step<R: Rng>(
    sys: &SpectralSystem,
    state: &mut ParticleState,
    dt: f64,
    cfg: &IntegratorConfig,
    rng: &mut R,
) -> Result<()> {
    let b = sys.drift(&state.theta, state.t, &state.q, &cfg.node)?;
    for (k, x) in state.q.iter_mut().enumerate() {
        let mut next = *x + b[k] * dt;
        if !cfg.deterministic {
            let w: f64 = StandardNormal.sample(rng);
            let d = sys.hbar / sys.masses[k];
            next += (d * dt).sqrt() * w;
        }
        if !next.is_finite() {
            return Err(CoreError::DivergedPath { t: state.t, last: vec![*x] });
        }
        let (lo, hi) = sys.domain.bounds[k];
        *x = if sys.domain.periodic {
            lo + (next - lo).rem_euclid(hi - lo)
        } else {
            apply_boundary(next, lo, hi, cfg.boundary)
        };
    }
    state.t += dt;
    Ok(())
}

/// A simulated trajectory: states recorded every `stride` steps plus the full
/// event log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub thetas: Vec<PhaseVector>,
    pub events: Vec<SteEvent>,
    pub final_state: ParticleState,
}

/// Integrates one trajectory over `[state.t, state.t + horizon]`, firing
/// Poisson transition events at rate `rate` that resample the phase vector
/// conditioned on the instantaneous position.
pub fn simulate_path<R: Rng>(
    sys: &SpectralSystem,
    mut state: ParticleState,
    horizon: f64,
    rate: f64,
    cfg: &IntegratorConfig,
    stride: usize,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(CoreError::Invalid("horizon must be > 0".into()));
    }
    let t0 = state.t;
    let stride = stride.max(1);
    let mut event_times: std::collections::VecDeque<f64> =
        schedule_events(rate, horizon, rng).into_iter().map(|s| t0 + s).collect();
    let n_steps = (horizon / cfg.dt).ceil() as u64;

    let mut rec = TrajectoryRecord {
        times: vec![state.t],
        positions: vec![state.q.clone()],
        thetas: vec![state.theta.clone()],
        events: Vec::new(),
        final_state: state.clone(),
    };

    for step in 1..=n_steps {
        let target = t0 + (step as f64 / n_steps as f64) * horizon;
        // Split the step at any scheduled events inside it.
        while event_times.front().is_some_and(|&te| te <= target) {
            let te = event_times.pop_front().unwrap();
            let dt = te - state.t;
            if dt > 0.0 {
                em_step(sys, &mut state, dt, cfg, rng)?;
            }
            state.t = te;
            let before = state.theta.clone();
            state.theta = sample_ste(sys, &state.q, te, rng)?;
            rec.events.push(SteEvent {
                time: te,
                position: state.q.clone(),
                theta_before: before,
                theta_after: state.theta.clone(),
            });
        }
        let dt = target - state.t;
        if dt > 0.0 {
            em_step(sys, &mut state, dt, cfg, rng)?;
        }
        state.t = target;
        if step % stride as u64 == 0 || step == n_steps {
            rec.times.push(state.t);
            rec.positions.push(state.q.clone());
            rec.thetas.push(state.theta.clone());
        }
    }
    rec.final_state = state;
    Ok(rec)
}

/// Drift source for the Fokker-Planck oracle.
pub enum FpDrift<'a> {
    /// Full pilot-wave drift of a system at fixed phases: current velocity
    /// plus the osmotic term tied to |psi|^2.
    System(&'a SpectralSystem, &'a PhaseVector),
    /// No drift: pure diffusion with reflecting walls.
    Zero,
}

/// Evolves a density under the Fokker-Planck equation
/// d rho/dt = -d(b rho)/dx + (D/2) d2 rho/dx2 on the field's grid.
///
/// The drift is split as b = v + (D/2) d ln(rho_psi)/dx, and the equation is
/// advanced in flux form: explicit upwind advection by the current velocity v
/// (with CFL substeps), then an implicit step of the combined
/// osmotic-plus-diffusion flux (D/2) rho_psi d(rho/rho_psi)/dx. Writing the
/// face coefficient as the logarithmic mean of rho_psi makes the grid-sampled
/// |psi|^2 an exact fixed point for real stationary states, and the implicit
/// matrix an M-matrix, so mass and positivity are preserved.
pub fn fp_evolve(
    drift: FpDrift<'_>,
    diffusion: f64,
    rho0: &DensityField,
    t1: f64,
    steps: usize,
) -> Result<DensityField> {
    if steps == 0 || t1 <= rho0.time {
        return Err(CoreError::Invalid("fp_evolve needs steps > 0 and t1 > t0".into()));
    }
    let grid = rho0.grid.clone();
    let n = grid.n;
    let dx = grid.dx();
    let dt = (t1 - rho0.time) / steps as f64;
    // Finite-volume cell widths: trapezoid weights, so the discrete mass is
    // exactly the trapezoid integral.
    let vol: Vec<f64> = (0..n).map(|i| grid.weight(i)).collect();
    let mut rho: Vec<f64> = rho0.values.clone();
    let mut t = rho0.time;

    for _ in 0..steps {
        let t_mid = t + 0.5 * dt;
        let t_next = t + dt;

        // Reference density rho_psi and current velocity v at cell centers.
        let (rho_psi, v): (Vec<f64>, Vec<f64>) = match &drift {
            FpDrift::Zero => (vec![1.0; n], vec![0.0; n]),
            FpDrift::System(sys, theta) => {
                let mut rp = Vec::with_capacity(n);
                let mut vv = Vec::with_capacity(n);
                for i in 0..n {
                    let x = grid.x(i);
                    // Reference density at the end of the step (implicit
                    // stage), current velocity at the midpoint.
                    rp.push(sys.eval(theta, t_next, &[x]).psi.norm_sqr());
                    let em = sys.eval(theta, t_mid, &[x]);
                    let p2m = em.psi.norm_sqr();
                    vv.push(if p2m > 0.0 {
                        sys.hbar / sys.masses[0] * (em.grad[0] / em.psi).im
                    } else {
                        0.0
                    });
                }
                (rp, vv)
            }
        };

        // Explicit upwind advection with CFL substeps.
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let nsub = ((vmax * dt / (0.4 * dx)).ceil() as usize).max(1);
        let dts = dt / nsub as f64;
        for _ in 0..nsub {
            let mut flux = vec![0.0; n + 1]; // face i+1/2 at index i+1
            for i in 0..n - 1 {
                let vf = 0.5 * (v[i] + v[i + 1]);
                flux[i + 1] = if vf >= 0.0 { vf * rho[i] } else { vf * rho[i + 1] };
            }
            for i in 0..n {
                rho[i] -= dts / vol[i] * (flux[i + 1] - flux[i]);
            }
        }

        // Implicit osmotic + diffusion step: solve the tridiagonal system
        // rho' - (dt / V_i) [F_{i+1/2} - F_{i-1/2}] = rho,
        // F_{i+1/2} = (D/2) L_{i+1/2} (r_{i+1} - r_i) / dx, r = rho' / rho_psi.
        let floor = 1e-30 * rho_psi.iter().cloned().fold(1e-300, f64::max);
        let rp: Vec<f64> = rho_psi.iter().map(|&p| p.max(floor)).collect();
        let logmean = |a: f64, b: f64| {
            if (a - b).abs() < 1e-12 * a.max(b) {
                0.5 * (a + b)
            } else {
                (b - a) / (b.ln() - a.ln())
            }
        };
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n {
            let a_lo = if i > 0 {
                diffusion / 2.0 * logmean(rp[i - 1], rp[i]) / dx
            } else {
                0.0
            };
            let a_hi = if i < n - 1 {
                diffusion / 2.0 * logmean(rp[i], rp[i + 1]) / dx
            } else {
                0.0
            };
            let c = dt / vol[i];
            diag[i] = 1.0 + c * (a_lo + a_hi) / rp[i];
            if i > 0 {
                sub[i] = -c * a_lo / rp[i - 1];
            }
            if i < n - 1 {
                sup[i] = -c * a_hi / rp[i + 1];
            }
        }
        rho = solve_tridiagonal(&sub, &diag, &sup, &rho)?;
        t = t_next;
    }

    if rho.iter().any(|r| !r.is_finite()) {
        return Err(CoreError::SolverUnstable {
            mass: rho.iter().zip(&vol).map(|(r, w)| r * w).sum(),
        });
    }
    DensityField::from_raw(grid, rho, t1)
}

/// Thomas algorithm for a diagonally dominant tridiagonal system.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(CoreError::SolverUnstable { mass: f64::NAN });
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 {
            return Err(CoreError::SolverUnstable { mass: f64::NAN });
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// L1 distance between an empirical sample and the state density |psi|^2,
/// via a histogram on the system grid coarsened to `bins`.
pub fn qe_distance(
    samples: &[f64],
    sys: &SpectralSystem,
    theta: &PhaseVector,
    t: f64,
    bins: usize,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(CoreError::EmptySamples);
    }
    let field = sys.density_field(theta, t)?;
    crate::stats::histogram_l1(samples, &field, bins)
}
