//! Macroscopic-limit analysis: center-of-mass reduction, the discretized
//! free Gaussian packet, phase-averaged drift, and N-scaling relations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::spectral::{
    compose_degenerate, BasisFn, Domain, Level, SpectralSystem,
};
use crate::stats::Estimate;

/// Physical constants for unit-carrying arithmetic checks (SI).
pub mod constants {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const PROTON_MASS: f64 = 1.672_621_924e-27;
    pub const ELECTRON_MASS: f64 = 9.109_383_702e-31;
    /// Localization-rate value quoted as an inverse lifetime of ~1e16 s.
    pub const GRW_LAMBDA_PER_S: f64 = 1e-16;
    /// The same rate quoted as ~1e-8 per year; differs from the inverse-
    /// lifetime figure by a factor of ~3, carried as-is.
    pub const GRW_LAMBDA_PER_YR: f64 = 1e-8;
    pub const SECONDS_PER_YEAR: f64 = 3.155_76e7;
    /// Characteristic length scale 1e-5 cm, in meters.
    pub const L1: f64 = 1e-7;
}

/// Free Gaussian wavepacket parameters (position std sigma, mean velocity U,
/// total mass M) plus its momentum discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacketSpec {
    pub sigma: f64,
    pub mean_velocity: f64,
    pub mass: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    /// Number of non-zero momentum magnitudes in the grid.
    #[serde(default = "default_p_levels")]
    pub p_levels: usize,
    /// Half-width of the covered momentum band, in units of the momentum
    /// amplitude width hbar/(sqrt(2) sigma).
    #[serde(default = "default_coverage")]
    pub coverage_sigmas: f64,
}

fn default_hbar() -> f64 {
    1.0
}

fn default_p_levels() -> usize {
    128
}

fn default_coverage() -> f64 {
    6.0
}

impl GaussianPacketSpec {
    pub fn new(sigma: f64, mean_velocity: f64, mass: f64) -> Self {
        GaussianPacketSpec {
            sigma,
            mean_velocity,
            mass,
            hbar: 1.0,
            p_levels: 128,
            coverage_sigmas: 6.0,
        }
    }
}

/// Center-of-mass reduction of an N-particle rigid body.
#[derive(Debug, Clone)]
pub struct ComSystem {
    pub system: SpectralSystem,
    pub n_particles: u64,
    pub total_mass: f64,
    /// Effective transition rate N * lambda.
    pub rate: f64,
    /// Effective diffusion constant hbar / M.
    pub diffusion: f64,
}

/// Reduces an N-particle body to its 1-D center-of-mass system: mass Nm,
/// diffusion hbar/(Nm), transition rate N lambda. The internal coordinates
/// cancel upon renormalization and never appear.
pub fn com_reduce(
    n: u64,
    particle_mass: f64,
    packet: &GaussianPacketSpec,
    lambda: f64,
) -> Result<ComSystem> {
    if n < 1 {
        return Err(CoreError::Invalid("particle count must be >= 1".into()));
    }
    let total_mass = n as f64 * particle_mass;
    let mut spec = packet.clone();
    spec.mass = total_mass;
    let system = build_gaussian_packet(&spec)?;
    Ok(ComSystem {
        system,
        n_particles: n,
        total_mass,
        rate: n as f64 * lambda,
        diffusion: packet.hbar / total_mass,
    })
}

/// Discretizes the free Gaussian packet onto a uniform momentum grid.
///
/// Each momentum magnitude P_k > 0 is one energy level E_k = P_k^2/(2M) with
/// the degenerate plane-wave pair exp(+-i P_k R / hbar), carrying Gaussian
/// amplitudes exp(-sigma^2 (P -+ MU)^2 / hbar^2); P = 0, when covered,
/// contributes a single constant member. The quadrature window is the
/// periodicity box 2 pi hbar / dP, which keeps the plane waves orthonormal.
pub fn build_gaussian_packet(spec: &GaussianPacketSpec) -> Result<SpectralSystem> {
    if spec.sigma <= 0.0 || spec.mass <= 0.0 || spec.hbar <= 0.0 {
        return Err(CoreError::InvalidSpec("sigma, mass, hbar must be positive".into()));
    }
    if spec.p_levels < 2 {
        return Err(CoreError::InvalidSpec("p_levels must be >= 2".into()));
    }
    // Momentum amplitude width; the momentum density std is s_a / sqrt(2).
    let s_a = spec.hbar / (std::f64::consts::SQRT_2 * spec.sigma);
    // 99.99% two-sided mass of the density needs ~3.9 density sigmas.
    if spec.coverage_sigmas * std::f64::consts::SQRT_2 < 3.9 {
        return Err(CoreError::InvalidSpec(
            "p_grid covers less than 99.99% of the momentum mass".into(),
        ));
    }
    let p0 = spec.mass * spec.mean_velocity;
    let p_needed = (p0.abs() + spec.coverage_sigmas * s_a).max(spec.coverage_sigmas * s_a);
    let dp = p_needed / spec.p_levels as f64;
    let extent = std::f64::consts::TAU * spec.hbar / dp;

    let weight = |p: f64| (-spec.sigma * spec.sigma * (p - p0) * (p - p0)
        / (spec.hbar * spec.hbar))
        .exp();

    let mut raw_levels: Vec<(f64, Vec<(Complex64, BasisFn)>)> = Vec::new();
    // P = 0 level: single member, constant function.
    let w0 = weight(0.0);
    if w0 > 1e-300 {
        raw_levels.push((
            0.0,
            vec![(
                Complex64::new(w0, 0.0),
                BasisFn::PlaneWave { p: 0.0, extent, hbar: spec.hbar },
            )],
        ));
    }
    for k in 1..=spec.p_levels {
        let p = k as f64 * dp;
        let members = vec![
            (
                Complex64::new(weight(p), 0.0),
                BasisFn::PlaneWave { p, extent, hbar: spec.hbar },
            ),
            (
                Complex64::new(weight(-p), 0.0),
                BasisFn::PlaneWave { p: -p, extent, hbar: spec.hbar },
            ),
        ];
        raw_levels.push((p, members));
    }

    let total: f64 = raw_levels
        .iter()
        .flat_map(|(_, m)| m.iter())
        .map(|(c, _)| c.norm_sqr())
        .sum();
    if total <= 0.0 {
        return Err(CoreError::InvalidSpec("momentum weights vanished".into()));
    }
    let scale = total.sqrt();

    let mut levels = Vec::with_capacity(raw_levels.len());
    for (p, members) in raw_levels {
        let scaled: Vec<(Complex64, BasisFn)> =
            members.into_iter().map(|(c, f)| (c / scale, f)).collect();
        let (c_level, normalized) = match compose_degenerate(&scaled) {
            Ok(v) => v,
            Err(_) => continue, // both branches negligible at this P
        };
        levels.push(Level {
            energy: p * p / (2.0 * spec.mass),
            c_mag: c_level.norm(),
            members: normalized,
        });
    }
    levels.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());

    let mut sys = SpectralSystem {
        levels,
        domain: Domain {
            bounds: vec![(-extent / 2.0, extent / 2.0)],
            periodic: true,
        },
        masses: vec![spec.mass],
        hbar: spec.hbar,
        grid_points: 4096,
        psi_sq_scale: 1.0,
    };
    sys.psi_sq_scale = crate::spectral::envelope_scale(&sys);
    Ok(sys)
}

/// Closed-form phase-averaged drift of the continuous-spectrum Gaussian
/// packet at center-of-mass position `r_p`; time-independent.
pub fn mean_drift_closed(spec: &GaussianPacketSpec, r_p: f64) -> f64 {
    let u = spec.mean_velocity;
    let m = spec.mass;
    let sigma = spec.sigma;
    let hbar = spec.hbar;
    let expo = (-2.0 * (sigma * m * u / hbar).powi(2) - r_p * r_p / (2.0 * sigma * sigma)).exp();
    (u - hbar * r_p / (2.0 * m * sigma * sigma) * expo) / (1.0 + expo)
}

/// Deterministic phase-averaged drift of a discretized packet: the
/// stationary-state-weighted sum sum_i |C_i|^2 |Phi_i|^2 b_i / sum_i |C_i|^2 |Phi_i|^2.
pub fn mean_drift_weighted_sum(sys: &SpectralSystem, r_p: f64) -> f64 {
    let m = sys.masses[0];
    let mut num = 0.0;
    let mut den = 0.0;
    for lv in &sys.levels {
        let e = lv.eval(&[r_p]);
        let w = lv.c_mag * lv.c_mag;
        // b_i |Phi_i|^2 = (hbar/m) [Re + Im](Phi_i^* Phi_i'), finite at nodes.
        let cross = e.value.conj() * e.grad[0];
        num += w * sys.hbar / m * (cross.re + cross.im);
        den += w * e.value.norm_sqr();
    }
    num / den
}

/// Monte Carlo phase-averaged drift: draws Theta' from the transition law at
/// `r_p` and averages the full drift there.
pub fn mean_drift_mc<R: rand::Rng>(
    sys: &SpectralSystem,
    r_p: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let sampler = crate::ste::SteSampler::at_point(sys, 0.0, &[r_p])?;
    let amps = sys.point_amplitudes_with_grad(&[r_p], 0.0);
    let m = sys.masses[0];
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let theta = sampler.sample(rng)?;
        let mut psi = Complex64::ZERO;
        let mut dpsi = Complex64::ZERO;
        for (i, (a, g)) in amps.iter().enumerate() {
            let rot = Complex64::from_polar(1.0, theta.phase(i));
            psi += rot * a;
            dpsi += rot * g[0];
        }
        let r = dpsi / psi;
        draws.push(sys.hbar / m * (r.re + r.im));
    }
    Ok(Estimate::from_samples(&draws))
}

/// Quantum-equilibrium timescale tau(N) = N m L^2(N) / hbar.
pub fn tau(n: u64, particle_mass: f64, l_of_n: f64, hbar: f64) -> f64 {
    n as f64 * particle_mass * l_of_n * l_of_n / hbar
}

/// Characteristic length scaling L(N) = N^(-chi) L(1); chi = 1/2 is the
/// independent-particle reading, exposed as a parameter.
pub fn length_scale(l1: f64, n: u64, chi: f64) -> f64 {
    l1 * (n as f64).powf(-chi)
}

/// Conditional position variance accumulated between consecutive transition
/// events: hbar / (N^2 m lambda).
pub fn spread_between_events(n: u64, particle_mass: f64, lambda: f64, hbar: f64) -> f64 {
    hbar / ((n as f64) * (n as f64) * particle_mass * lambda)
}

/// Whether the inter-event spread is negligible against L^2(1)/N.
pub fn spread_is_negligible(spread: f64, l1: f64, n: u64) -> bool {
    spread < 0.01 * l1 * l1 / n as f64
}

/// Expected center-of-mass position one mean inter-event time ahead:
/// r0 + b / (N lambda), with b = U in the large-N limit.
pub fn mean_step(r_p0: f64, drift: f64, n: u64, lambda: f64) -> f64 {
    r_p0 + drift / (n as f64 * lambda)
}
