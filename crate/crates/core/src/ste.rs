//! Spontaneous transition events: Poisson timing, the position-conditioned
//! phase transition law, and decoherent-equilibrium ensembles.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::DensityField;
use crate::spectral::{PhaseVector, SpectralSystem};

/// Hard cap on rejection trials per draw; exceeding it is an error, not a
/// silent fallback.
pub const TRIAL_CAP: u64 = 10_000_000;

/// Transition-rate models. The rate is a free parameter of the theory; the
/// catalog exposes a desk-scale constant, the per-particle extensive form,
/// and an energy-spread-proportional form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RateModel {
    /// Fixed rate lambda, independent of the system.
    Constant { lambda: f64 },
    /// N lambda for an N-particle body with per-particle rate lambda.
    PerParticle { lambda: f64, n: u64 },
    /// scale * dE / hbar, tied to the energy spread of the state.
    EnergySpread { scale: f64 },
}

impl RateModel {
    pub fn rate(&self, sys: &SpectralSystem) -> f64 {
        match *self {
            RateModel::Constant { lambda } => lambda,
            RateModel::PerParticle { lambda, n } => n as f64 * lambda,
            RateModel::EnergySpread { scale } => scale * sys.delta_e() / sys.hbar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = match *self {
            RateModel::Constant { lambda } => lambda,
            RateModel::PerParticle { lambda, .. } => lambda,
            RateModel::EnergySpread { scale } => scale,
        };
        if !(r >= 0.0) || !r.is_finite() {
            return Err(CoreError::InvalidSpec(format!("transition rate {r} must be finite and >= 0")));
        }
        Ok(())
    }
}

/// One recorded transition event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteEvent {
    pub time: f64,
    pub position: Vec<f64>,
    pub theta_before: PhaseVector,
    pub theta_after: PhaseVector,
}

/// Transition normalization Gamma(q) = (2 pi)^K sum_i |C_i|^2 |Phi_i(q)|^2;
/// time-independent.
pub fn gamma(sys: &SpectralSystem, q: &[f64]) -> Result<f64> {
    if !sys.domain.contains(q) {
        return Err(CoreError::OutOfDomain { point: q.to_vec() });
    }
    let sum: f64 = sys
        .levels
        .iter()
        .map(|l| l.c_mag * l.c_mag * l.value(q).norm_sqr())
        .sum();
    let g = std::f64::consts::TAU.powi(sys.k() as i32) * sum;
    if g <= 0.0 {
        return Err(CoreError::GammaZero { point: q.to_vec() });
    }
    Ok(g)
}

/// Transition density f(Theta' | q) = |psi(q, Theta', t)|^2 / Gamma(q) on
/// [0, 2 pi)^K.
pub fn ste_density(sys: &SpectralSystem, q: &[f64], theta: &PhaseVector, t: f64) -> Result<f64> {
    let g = gamma(sys, q)?;
    let p2 = sys.eval(theta, t, q).psi.norm_sqr();
    Ok(p2 / g)
}

/// Probability of at least one event in a window dt at rate lambda.
pub fn event_probability(rate: f64, dt: f64) -> f64 {
    -(-rate * dt).exp_m1()
}

/// Homogeneous Poisson event times on (0, horizon].
pub fn schedule_events<R: Rng>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    if rate <= 0.0 {
        return times;
    }
    let mut t = 0.0;
    loop {
        t += -rng.random::<f64>().ln() / rate;
        if t > horizon {
            return times;
        }
        times.push(t);
    }
}

/// Rejection sampler for the transition law at a fixed point and time.
///
/// Precomputes a_i = |C_i| Phi_i(q) exp(-i E_i t / hbar), so each trial costs
/// O(K). The envelope (sum_i |a_i|)^2 bounds |psi|^2 pointwise; mean
/// acceptance is sum |a_i|^2 / (sum |a_i|)^2 >= 1 / (number of levels).
#[derive(Debug, Clone)]
pub struct SteSampler {
    amps: Vec<Complex64>,
    envelope: f64,
    k: usize,
}

impl SteSampler {
    pub fn at_point(sys: &SpectralSystem, t: f64, q: &[f64]) -> Result<Self> {
        gamma(sys, q)?; // domain + degeneracy-at-node check
        let amps = sys.point_amplitudes(q, t);
        let envelope: f64 = amps.iter().map(|a| a.norm()).sum::<f64>().powi(2);
        Ok(SteSampler { amps, envelope, k: sys.k() })
    }

    /// |psi(q, Theta, t)|^2 from the cached amplitudes.
    pub fn psi_sq(&self, theta: &PhaseVector) -> f64 {
        let mut psi = Complex64::ZERO;
        for (i, a) in self.amps.iter().enumerate() {
            psi += a * Complex64::from_polar(1.0, theta.phase(i));
        }
        psi.norm_sqr()
    }

    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    /// Draws Theta' ~ f(. | q) by rejection against the flat envelope.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<PhaseVector> {
        if self.k == 0 {
            return Ok(PhaseVector::zeros(0));
        }
        for _ in 0..TRIAL_CAP {
            let theta = PhaseVector(
                (0..self.k)
                    .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
                    .collect(),
            );
            if rng.random::<f64>() * self.envelope < self.psi_sq(&theta) {
                return Ok(theta);
            }
        }
        Err(CoreError::TrialCapExceeded { cap: TRIAL_CAP })
    }
}

/// Draws the post-event phase vector for a particle at `q` at time `t`.
pub fn sample_ste<R: Rng>(
    sys: &SpectralSystem,
    q: &[f64],
    t: f64,
    rng: &mut R,
) -> Result<PhaseVector> {
    SteSampler::at_point(sys, t, q)?.sample(rng)
}

/// Tabulated transition kernel over a phase grid, for K <= 2 only: the
/// normalized density f(Theta' | q) sampled at cell centers.
pub fn transition_kernel(
    sys: &SpectralSystem,
    q: &[f64],
    t: f64,
    bins: usize,
) -> Result<Vec<f64>> {
    let k = sys.k();
    if k > 2 {
        return Err(CoreError::Unsupported(
            "tabulated kernel is limited to K <= 2".into(),
        ));
    }
    let sampler = SteSampler::at_point(sys, t, q)?;
    let total_sq: f64 = sampler.amps.iter().map(|a| a.norm_sqr()).sum();
    let cells = bins.pow(k as u32);
    let step = std::f64::consts::TAU / bins as f64;
    let mut out = Vec::with_capacity(cells);
    for c in 0..cells {
        let theta = PhaseVector(
            (0..k)
                .map(|d| ((c / bins.pow(d as u32)) % bins) as f64 * step + step / 2.0)
                .collect(),
        );
        out.push(sampler.psi_sq(&theta) / (std::f64::consts::TAU.powi(k as i32) * total_sq));
    }
    Ok(out)
}

/// One ensemble member: configuration point plus phase vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Member {
    pub q: Vec<f64>,
    pub theta: PhaseVector,
}

/// Samples a decoherent-quantum-equilibrium ensemble: phases i.i.d. uniform,
/// position drawn from |psi_Theta|^2 per member (d = 1 systems).
pub fn make_dqe<R: Rng>(sys: &SpectralSystem, n: usize, rng: &mut R) -> Result<Vec<Member>> {
    if n == 0 {
        return Err(CoreError::EmptySamples);
    }
    let k = sys.k();
    let mut members = Vec::with_capacity(n);
    for _ in 0..n {
        let theta = PhaseVector(
            (0..k)
                .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
                .collect(),
        );
        let field = sys.density_field(&theta, 0.0)?;
        let cdf = field.cdf();
        let x = field.inverse_cdf(&cdf, rng.random::<f64>());
        members.push(Member { q: vec![x], theta });
    }
    Ok(members)
}

/// Position marginal of the decoherent equilibrium: Gamma(q) / (2 pi)^K,
/// tabulated on the quadrature grid. Normalized by construction when the
/// level weights are.
pub fn dqe_marginal(sys: &SpectralSystem) -> Result<DensityField> {
    if sys.dim() != 1 {
        return Err(CoreError::Unsupported("dqe_marginal requires d = 1".into()));
    }
    let grid = sys.grid();
    let values = grid.sample(|x| {
        sys.levels
            .iter()
            .map(|l| l.c_mag * l.c_mag * l.value(&[x]).norm_sqr())
            .sum()
    });
    DensityField::from_samples(grid, values, 0.0)
}

/// Applies one transition event to each member at its current position,
/// resampling the phases conditioned on where the member sits.
pub fn apply_ste_to_ensemble<R: Rng>(
    sys: &SpectralSystem,
    members: &mut [Member],
    t: f64,
    rng: &mut R,
) -> Result<()> {
    for m in members.iter_mut() {
        m.theta = sample_ste(sys, &m.q, t, rng)?;
    }
    Ok(())
}
