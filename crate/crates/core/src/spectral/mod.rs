//! Energy-eigenbasis representation of closed-system wavefunctions.
//!
//! A wavefunction is a finite list of energy levels, each a coherent
//! superposition of degenerate eigenfunctions composed at construction time.
//! Unitary evolution is exact phase rotation of the level amplitudes; only the
//! inter-level phase vector ever changes after construction.

pub mod basis;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::{DensityField, Grid1d};

pub use basis::{BasisFn, FnEval};

pub const DEFAULT_GRID_POINTS: usize = 2048;
pub const DEFAULT_GRID_POINTS_2D: usize = 256;

/// Inter-level phases (Theta_1, ..., Theta_K); Theta_0 is pinned to zero and
/// not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn zeros(k: usize) -> Self {
        PhaseVector(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Phase of level `i`, including the implicit Theta_0 = 0.
    pub fn phase(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.0[i - 1]
        }
    }

    pub fn wrapped(mut self) -> Self {
        for p in &mut self.0 {
            *p = p.rem_euclid(std::f64::consts::TAU);
        }
        self
    }
}

/// One energy level: magnitude |C_i| and the composed eigenfunction
/// Phi_i = sum_j a_ij phi_ij with sum_j |a_ij|^2 = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub c_mag: f64,
    pub members: Vec<(Complex64, BasisFn)>,
}

impl Level {
    pub fn eval(&self, q: &[f64]) -> FnEval {
        let dim = self.members[0].1.dim();
        let mut value = Complex64::ZERO;
        let mut grad = vec![Complex64::ZERO; dim];
        let mut lap = Complex64::ZERO;
        for (a, f) in &self.members {
            let e = f.eval(q);
            value += a * e.value;
            lap += a * e.lap;
            for (g, ge) in grad.iter_mut().zip(&e.grad) {
                *g += a * ge;
            }
        }
        FnEval { value, grad, lap }
    }

    pub fn value(&self, q: &[f64]) -> Complex64 {
        self.members
            .iter()
            .map(|(a, f)| a * f.eval(q).value)
            .sum()
    }
}

/// Configuration-space domain; `periodic` marks the free-packet case where
/// evaluation outside the quadrature window wraps naturally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub bounds: Vec<(f64, f64)>,
    pub periodic: bool,
}

impl Domain {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.periodic
            || q.iter()
                .zip(&self.bounds)
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }
}

/// Node-handling policy for the drift singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePolicy {
    /// Relative |psi|^2 threshold below which the drift magnitude is clamped.
    pub eps_node: f64,
    /// Drift magnitude cap applied near nodes.
    pub b_max: f64,
}

impl Default for NodePolicy {
    fn default() -> Self {
        NodePolicy { eps_node: 1e-12, b_max: 1e6 }
    }
}

/// A closed quantum system expanded over its energy eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSystem {
    pub levels: Vec<Level>,
    pub domain: Domain,
    /// Mass per configuration coordinate.
    pub masses: Vec<f64>,
    pub hbar: f64,
    pub grid_points: usize,
    /// Grid maximum of the amplitude envelope (sum_i |C_i Phi_i|)^2; scales
    /// the node threshold.
    pub psi_sq_scale: f64,
}

/// Full wavefunction evaluation at one configuration point.
#[derive(Debug, Clone)]
pub struct PsiEval {
    pub psi: Complex64,
    pub grad: Vec<Complex64>,
    pub lap: Complex64,
}

/// Expectation values of a wavefunction state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSet {
    pub mu: Vec<f64>,
    pub var: f64,
    pub p_mean: Vec<f64>,
    pub h_mean: f64,
    pub delta_e: f64,
    pub norm: f64,
}

impl SpectralSystem {
    pub fn k(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn check_theta(&self, theta: &PhaseVector) {
        assert_eq!(theta.len(), self.k(), "phase vector length must equal K");
    }

    /// Level amplitudes a_i = |C_i| Phi_i(q) exp(-i E_i t / hbar).
    ///
    /// psi(q, Theta, t) = sum_i a_i exp(i Theta_i); this is the hot path for
    /// transition sampling, where q and t are fixed and Theta varies.
    pub fn point_amplitudes(&self, q: &[f64], t: f64) -> Vec<Complex64> {
        self.levels
            .iter()
            .map(|lv| {
                lv.c_mag
                    * lv.value(q)
                    * Complex64::from_polar(1.0, -lv.energy * t / self.hbar)
            })
            .collect()
    }

    /// Like [`point_amplitudes`](Self::point_amplitudes) but also returns the
    /// amplitude gradients, for phase-averaged drift estimation.
    pub fn point_amplitudes_with_grad(
        &self,
        q: &[f64],
        t: f64,
    ) -> Vec<(Complex64, Vec<Complex64>)> {
        self.levels
            .iter()
            .map(|lv| {
                let e = lv.eval(q);
                let rot = lv.c_mag * Complex64::from_polar(1.0, -lv.energy * t / self.hbar);
                (rot * e.value, e.grad.iter().map(|g| rot * g).collect())
            })
            .collect()
    }

    /// Evaluates psi together with its gradient and Laplacian.
    pub fn eval(&self, theta: &PhaseVector, t: f64, q: &[f64]) -> PsiEval {
        self.check_theta(theta);
        let dim = self.dim();
        let mut psi = Complex64::ZERO;
        let mut grad = vec![Complex64::ZERO; dim];
        let mut lap = Complex64::ZERO;
        for (i, lv) in self.levels.iter().enumerate() {
            let e = lv.eval(q);
            let phase = theta.phase(i) - lv.energy * t / self.hbar;
            let a = lv.c_mag * Complex64::from_polar(1.0, phase);
            psi += a * e.value;
            lap += a * e.lap;
            for (g, ge) in grad.iter_mut().zip(&e.grad) {
                *g += a * ge;
            }
        }
        PsiEval { psi, grad, lap }
    }

    /// psi(q, Theta, t); errors if q lies outside the domain.
    pub fn psi(&self, theta: &PhaseVector, t: f64, q: &[f64]) -> Result<Complex64> {
        if !self.domain.contains(q) {
            return Err(CoreError::OutOfDomain { point: q.to_vec() });
        }
        Ok(self.eval(theta, t, q).psi)
    }

    /// Langevin drift b = grad(S)/m + (hbar/m) grad(R)/R, clamped near nodes.
    pub fn drift(
        &self,
        theta: &PhaseVector,
        t: f64,
        q: &[f64],
        node: &NodePolicy,
    ) -> Result<Vec<f64>> {
        let e = self.eval(theta, t, q);
        drift_from_eval(&e, &self.masses, self.hbar, node, self.psi_sq_scale).ok_or_else(|| {
            CoreError::NonFinite {
                context: "drift".into(),
                point: q.to_vec(),
                t,
            }
        })
    }

    /// Quantum potential Q = -(hbar^2/2m) lap(R)/R (diagnostic).
    ///
    /// Uses lap(R)/R = Re(lap(psi)/psi) + |Im(grad(psi)/psi)|^2, valid away
    /// from nodes.
    pub fn quantum_potential(&self, theta: &PhaseVector, t: f64, q: &[f64]) -> Result<f64> {
        let e = self.eval(theta, t, q);
        let p2 = e.psi.norm_sqr();
        if p2 <= 0.0 {
            return Err(CoreError::NonFinite {
                context: "quantum potential at node".into(),
                point: q.to_vec(),
                t,
            });
        }
        let mut q_val = 0.0;
        // Per-coordinate masses: Q = -sum_k (hbar^2 / 2 m_k) (d2_k R)/R. The
        // catalog systems have equal masses so the Laplacian splits uniformly.
        let m = self.masses[0];
        let mut grad_s_sq = 0.0;
        for g in &e.grad {
            let r = g / e.psi;
            grad_s_sq += r.im * r.im;
        }
        let lap_r_over_r = (e.lap / e.psi).re + grad_s_sq;
        q_val += -self.hbar * self.hbar / (2.0 * m) * lap_r_over_r;
        if !q_val.is_finite() {
            return Err(CoreError::NonFinite {
                context: "quantum potential".into(),
                point: q.to_vec(),
                t,
            });
        }
        Ok(q_val)
    }

    /// Energy expectation from the coefficients alone (Theta-independent).
    pub fn h_mean(&self) -> f64 {
        self.levels.iter().map(|l| l.c_mag * l.c_mag * l.energy).sum()
    }

    /// Energy standard deviation from the coefficients alone.
    pub fn delta_e(&self) -> f64 {
        let h = self.h_mean();
        let h2: f64 = self
            .levels
            .iter()
            .map(|l| l.c_mag * l.c_mag * l.energy * l.energy)
            .sum();
        (h2 - h * h).max(0.0).sqrt()
    }

    /// Default quadrature grid over the first coordinate (d = 1 systems).
    pub fn grid(&self) -> Grid1d {
        let (lo, hi) = self.domain.bounds[0];
        Grid1d::new(lo, hi, self.grid_points)
    }

    /// |psi|^2 tabulated on the quadrature grid (d = 1 only).
    pub fn density_field(&self, theta: &PhaseVector, t: f64) -> Result<DensityField> {
        if self.dim() != 1 {
            return Err(CoreError::Unsupported("density_field requires d = 1".into()));
        }
        let grid = self.grid();
        let values = grid.sample(|x| self.eval(theta, t, &[x]).psi.norm_sqr());
        DensityField::from_samples(grid, values, t)
    }

    /// Position, momentum and energy observables by quadrature on the domain
    /// grid; <H> and dE come exactly from the coefficients.
    pub fn observables(&self, theta: &PhaseVector, t: f64) -> Result<ObservableSet> {
        self.check_theta(theta);
        let (norm, mu, x2, p_mean) = match self.dim() {
            1 => self.quadrature_moments_1d(theta, t),
            2 => self.quadrature_moments_2d(theta, t),
            d => return Err(CoreError::Unsupported(format!("dimension {d}"))),
        };
        if (norm - 1.0).abs() > 1e-6 {
            return Err(CoreError::QuadratureFailure(format!(
                "norm quadrature gave {norm}; grid too coarse"
            )));
        }
        let mu: Vec<f64> = mu.iter().map(|m| m / norm).collect();
        let var = x2 / norm - mu.iter().map(|m| m * m).sum::<f64>();
        Ok(ObservableSet {
            mu,
            var: var.max(0.0),
            p_mean: p_mean.iter().map(|p| p / norm).collect(),
            h_mean: self.h_mean(),
            delta_e: self.delta_e(),
            norm,
        })
    }

    fn quadrature_moments_1d(&self, theta: &PhaseVector, t: f64) -> (f64, Vec<f64>, f64, Vec<f64>) {
        let grid = self.grid();
        let (mut norm, mut mu, mut x2, mut p) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..grid.n {
            let x = grid.x(i);
            let w = grid.weight(i);
            let e = self.eval(theta, t, &[x]);
            let rho = e.psi.norm_sqr();
            norm += w * rho;
            mu += w * rho * x;
            x2 += w * rho * x * x;
            // psi^* (-i hbar d/dx) psi
            p += w * (e.psi.conj() * Complex64::new(0.0, -self.hbar) * e.grad[0]).re;
        }
        (norm, vec![mu], x2, vec![p])
    }

    fn quadrature_moments_2d(&self, theta: &PhaseVector, t: f64) -> (f64, Vec<f64>, f64, Vec<f64>) {
        let (lo0, hi0) = self.domain.bounds[0];
        let (lo1, hi1) = self.domain.bounds[1];
        let n = self.grid_points;
        let ga = Grid1d::new(lo0, hi0, n);
        let gb = Grid1d::new(lo1, hi1, n);
        let mut norm = 0.0;
        let mut mu = [0.0; 2];
        let mut x2 = 0.0;
        let mut p = [0.0; 2];
        for i in 0..n {
            let wa = ga.weight(i);
            let xa = ga.x(i);
            for j in 0..n {
                let w = wa * gb.weight(j);
                let xb = gb.x(j);
                let e = self.eval(theta, t, &[xa, xb]);
                let rho = e.psi.norm_sqr();
                norm += w * rho;
                mu[0] += w * rho * xa;
                mu[1] += w * rho * xb;
                x2 += w * rho * (xa * xa + xb * xb);
                for d in 0..2 {
                    p[d] += w * (e.psi.conj() * Complex64::new(0.0, -self.hbar) * e.grad[d]).re;
                }
            }
        }
        (norm, mu.to_vec(), x2, p.to_vec())
    }
}

/// Drift from a completed evaluation; `None` on non-finite intermediates.
pub fn drift_from_eval(
    e: &PsiEval,
    masses: &[f64],
    hbar: f64,
    node: &NodePolicy,
    psi_sq_scale: f64,
) -> Option<Vec<f64>> {
    let p2 = e.psi.norm_sqr();
    let clamping = p2 < node.eps_node * psi_sq_scale;
    let mut b: Vec<f64> = Vec::with_capacity(e.grad.len());
    for (g, m) in e.grad.iter().zip(masses) {
        let v = if p2 > 0.0 {
            let r = g / e.psi;
            // grad(S)/m = (hbar/m) Im, osmotic = (hbar/m) Re.
            hbar / m * (r.im + r.re)
        } else {
            f64::INFINITY
        };
        b.push(v);
    }
    let mag: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if clamping || !mag.is_finite() {
        if mag > node.b_max || !mag.is_finite() {
            if mag.is_finite() && mag > 0.0 {
                let s = node.b_max / mag;
                for v in &mut b {
                    *v *= s;
                }
            } else {
                // Direction undefined exactly at the node; stall for this step.
                for v in &mut b {
                    *v = 0.0;
                }
            }
        }
        return Some(b);
    }
    if b.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(b)
}

/// Model catalog entry kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Box,
    Oscillator,
    FreePacket,
    TwoParticleBox,
}

/// One selected energy level: quantum numbers and degeneracy coefficients.
///
/// `index` holds one quantum number for the 1-D systems, or the canonical
/// (na, nb) pair with na <= nb for the two-particle box. `coeffs` has one
/// entry per degenerate member; the two-particle pair (na, nb) with na < nb
/// carries members [(na, nb), (nb, na)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub index: Vec<u32>,
    pub coeffs: Vec<Complex64>,
}

/// Declarative model specification for [`build_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Box length (box kinds).
    pub length: Option<f64>,
    /// Oscillator angular frequency.
    pub omega: Option<f64>,
    pub mass: f64,
    pub hbar: f64,
    #[serde(default)]
    pub levels: Vec<LevelSpec>,
    /// Free-packet parameters; required for `kind = free_packet`.
    pub packet: Option<crate::macro_limit::GaussianPacketSpec>,
    pub grid_points: Option<usize>,
}

impl ModelSpec {
    fn validate(&self) -> Result<()> {
        if self.mass <= 0.0 || self.hbar <= 0.0 {
            return Err(CoreError::InvalidSpec("mass and hbar must be positive".into()));
        }
        if self.kind != ModelKind::FreePacket && self.levels.is_empty() {
            return Err(CoreError::InvalidSpec("empty level selection".into()));
        }
        Ok(())
    }
}

/// Composes degenerate members into (C_i, normalized member coefficients).
///
/// C_i = (sum_j |c_ij|^2)^(1/2) exp(i theta_i0), with theta_i0 the phase of
/// the first coefficient; the returned members a_ij = c_ij / C_i satisfy
/// sum |a_ij|^2 = 1.
pub fn compose_degenerate(
    members: &[(Complex64, BasisFn)],
) -> Result<(Complex64, Vec<(Complex64, BasisFn)>)> {
    let mag_sq: f64 = members.iter().map(|(c, _)| c.norm_sqr()).sum();
    if mag_sq <= 0.0 {
        return Err(CoreError::InvalidSpec("all degeneracy coefficients are zero".into()));
    }
    let theta_i0 = members[0].0.arg();
    let c_level = Complex64::from_polar(mag_sq.sqrt(), theta_i0);
    let normalized = members
        .iter()
        .map(|(c, f)| (c / c_level, f.clone()))
        .collect();
    Ok((c_level, normalized))
}

/// Builds a catalog system; returns it together with the initial phase vector
/// Theta_i = theta_i0 - theta_00 implied by the declared coefficients.
pub fn build_model(spec: &ModelSpec) -> Result<(SpectralSystem, PhaseVector)> {
    spec.validate()?;
    match spec.kind {
        ModelKind::FreePacket => {
            let packet = spec
                .packet
                .as_ref()
                .ok_or_else(|| CoreError::InvalidSpec("free_packet requires packet parameters".into()))?;
            let sys = crate::macro_limit::build_gaussian_packet(packet)?;
            let k = sys.k();
            return Ok((sys, PhaseVector::zeros(k)));
        }
        ModelKind::Box | ModelKind::Oscillator | ModelKind::TwoParticleBox => {}
    }

    // Global normalization of the declared coefficients.
    let total: f64 = spec
        .levels
        .iter()
        .flat_map(|l| l.coeffs.iter())
        .map(|c| c.norm_sqr())
        .sum();
    if total <= 0.0 {
        return Err(CoreError::InvalidSpec("all coefficients are zero".into()));
    }
    let scale = total.sqrt();

    let mut composed: Vec<(Complex64, Level)> = Vec::with_capacity(spec.levels.len());
    for lv in &spec.levels {
        let raw: Vec<(Complex64, BasisFn)> = member_basis(spec, lv)?
            .into_iter()
            .zip(lv.coeffs.iter())
            .map(|(f, c)| (c / scale, f))
            .collect();
        let (c_level, members) = compose_degenerate(&raw)?;
        let energy = members[0].1.energy(spec.mass, spec.hbar);
        composed.push((
            c_level,
            Level { energy, c_mag: c_level.norm(), members },
        ));
    }
    composed.sort_by(|a, b| a.1.energy.partial_cmp(&b.1.energy).unwrap());
    for w in composed.windows(2) {
        if w[1].1.energy - w[0].1.energy <= 1e-12 * w[1].1.energy.abs().max(1.0) {
            return Err(CoreError::InvalidSpec(
                "levels with equal energy must be merged into one degenerate level".into(),
            ));
        }
    }

    let theta0 = composed[0].0.arg();
    let initial = PhaseVector(
        composed[1..]
            .iter()
            .map(|(c, _)| (c.arg() - theta0).rem_euclid(std::f64::consts::TAU))
            .collect(),
    );
    let levels: Vec<Level> = composed.into_iter().map(|(_, l)| l).collect();

    let (domain, masses) = match spec.kind {
        ModelKind::Box => {
            let length = spec
                .length
                .ok_or_else(|| CoreError::InvalidSpec("box requires length".into()))?;
            (
                Domain { bounds: vec![(0.0, length)], periodic: false },
                vec![spec.mass],
            )
        }
        ModelKind::Oscillator => {
            let omega = spec
                .omega
                .ok_or_else(|| CoreError::InvalidSpec("oscillator requires omega".into()))?;
            let n_max = levels
                .iter()
                .flat_map(|l| l.members.iter())
                .map(|(_, f)| match f {
                    BasisFn::OscillatorMode { n, .. } => *n,
                    _ => 0,
                })
                .max()
                .unwrap_or(0) as f64;
            // Classical turning point of the highest mode plus an 8-sigma margin.
            let s = (spec.hbar / (spec.mass * omega)).sqrt();
            let extent = s * ((2.0 * n_max + 1.0).sqrt() + 8.0);
            (
                Domain { bounds: vec![(-extent, extent)], periodic: false },
                vec![spec.mass],
            )
        }
        ModelKind::TwoParticleBox => {
            let length = spec
                .length
                .ok_or_else(|| CoreError::InvalidSpec("two_particle_box requires length".into()))?;
            (
                Domain { bounds: vec![(0.0, length), (0.0, length)], periodic: false },
                vec![spec.mass, spec.mass],
            )
        }
        ModelKind::FreePacket => unreachable!(),
    };

    let grid_points = spec.grid_points.unwrap_or(match spec.kind {
        ModelKind::TwoParticleBox => DEFAULT_GRID_POINTS_2D,
        _ => DEFAULT_GRID_POINTS,
    });

    let mut sys = SpectralSystem {
        levels,
        domain,
        masses,
        hbar: spec.hbar,
        grid_points,
        psi_sq_scale: 1.0,
    };
    sys.psi_sq_scale = envelope_scale(&sys);
    Ok((sys, initial))
}

fn member_basis(spec: &ModelSpec, lv: &LevelSpec) -> Result<Vec<BasisFn>> {
    match spec.kind {
        ModelKind::Box => {
            let length = spec
                .length
                .ok_or_else(|| CoreError::InvalidSpec("box requires length".into()))?;
            let [n] = lv.index[..] else {
                return Err(CoreError::InvalidSpec("box level needs one quantum number".into()));
            };
            if n == 0 {
                return Err(CoreError::InvalidSpec("box quantum number starts at 1".into()));
            }
            if lv.coeffs.len() != 1 {
                return Err(CoreError::InvalidSpec("box levels are non-degenerate".into()));
            }
            Ok(vec![BasisFn::BoxMode { n, length }])
        }
        ModelKind::Oscillator => {
            let omega = spec
                .omega
                .ok_or_else(|| CoreError::InvalidSpec("oscillator requires omega".into()))?;
            let [n] = lv.index[..] else {
                return Err(CoreError::InvalidSpec("oscillator level needs one quantum number".into()));
            };
            if lv.coeffs.len() != 1 {
                return Err(CoreError::InvalidSpec("oscillator levels are non-degenerate".into()));
            }
            Ok(vec![BasisFn::OscillatorMode {
                n,
                omega,
                mass: spec.mass,
                hbar: spec.hbar,
            }])
        }
        ModelKind::TwoParticleBox => {
            let length = spec
                .length
                .ok_or_else(|| CoreError::InvalidSpec("two_particle_box requires length".into()))?;
            let [na, nb] = lv.index[..] else {
                return Err(CoreError::InvalidSpec("two-particle level needs a pair (na, nb)".into()));
            };
            if na == 0 || nb == 0 {
                return Err(CoreError::InvalidSpec("box quantum numbers start at 1".into()));
            }
            if na > nb {
                return Err(CoreError::InvalidSpec("declare the pair with na <= nb".into()));
            }
            let expected = if na == nb { 1 } else { 2 };
            if lv.coeffs.len() != expected {
                return Err(CoreError::InvalidSpec(format!(
                    "pair ({na}, {nb}) has multiplicity {expected}, got {} coefficients",
                    lv.coeffs.len()
                )));
            }
            let mut fns = vec![BasisFn::BoxMode2d { na, nb, length }];
            if na != nb {
                fns.push(BasisFn::BoxMode2d { na: nb, nb: na, length });
            }
            Ok(fns)
        }
        ModelKind::FreePacket => unreachable!(),
    }
}

/// Grid maximum of (sum_i |C_i Phi_i(q)|)^2, the Theta-independent amplitude
/// envelope used for node detection and rejection sampling.
pub fn envelope_scale(sys: &SpectralSystem) -> f64 {
    let mut max = 0.0f64;
    match sys.dim() {
        1 => {
            let grid = sys.grid();
            for x in grid.points() {
                let s: f64 = sys.levels.iter().map(|l| l.c_mag * l.value(&[x]).norm()).sum();
                max = max.max(s * s);
            }
        }
        2 => {
            let n = 128;
            let (lo0, hi0) = sys.domain.bounds[0];
            let (lo1, hi1) = sys.domain.bounds[1];
            let ga = Grid1d::new(lo0, hi0, n);
            let gb = Grid1d::new(lo1, hi1, n);
            for xa in ga.points() {
                for xb in gb.points() {
                    let s: f64 = sys
                        .levels
                        .iter()
                        .map(|l| l.c_mag * l.value(&[xa, xb]).norm())
                        .sum();
                    max = max.max(s * s);
                }
            }
        }
        _ => unreachable!(),
    }
    max
}

/// Cross-moment matrices between composed levels, for O(K^2) observable
/// evaluation along ensemble runs.
#[derive(Debug, Clone)]
pub struct MomentTable {
    /// X[d][i][k] = <Phi_i | x_d | Phi_k>
    pub x: Vec<Vec<Vec<Complex64>>>,
    /// XX[i][k] = <Phi_i | |x|^2 | Phi_k>
    pub xx: Vec<Vec<Complex64>>,
    /// P[d][i][k] = <Phi_i | -i hbar d_d | Phi_k>
    pub p: Vec<Vec<Vec<Complex64>>>,
    energies: Vec<f64>,
    c_mag: Vec<f64>,
    hbar: f64,
}

impl MomentTable {
    pub fn build(sys: &SpectralSystem) -> Result<Self> {
        if sys.dim() != 1 {
            return Err(CoreError::Unsupported("moment table requires d = 1".into()));
        }
        let n = sys.levels.len();
        let grid = sys.grid();
        // Tabulate member evaluations once per grid point.
        let evals: Vec<Vec<FnEval>> = grid
            .points()
            .map(|x| sys.levels.iter().map(|l| l.eval(&[x])).collect())
            .collect();
        let mut x_mat = vec![vec![Complex64::ZERO; n]; n];
        let mut xx_mat = vec![vec![Complex64::ZERO; n]; n];
        let mut p_mat = vec![vec![Complex64::ZERO; n]; n];
        for (gi, row) in evals.iter().enumerate() {
            let xg = grid.x(gi);
            let w = grid.weight(gi);
            for i in 0..n {
                let vi = row[i].value.conj();
                for k in 0..n {
                    let vk = row[k].value;
                    x_mat[i][k] += w * xg * vi * vk;
                    xx_mat[i][k] += w * xg * xg * vi * vk;
                    p_mat[i][k] += w * vi * Complex64::new(0.0, -sys.hbar) * row[k].grad[0];
                }
            }
        }
        Ok(MomentTable {
            x: vec![x_mat],
            xx: xx_mat,
            p: vec![p_mat],
            energies: sys.levels.iter().map(|l| l.energy).collect(),
            c_mag: sys.levels.iter().map(|l| l.c_mag).collect(),
            hbar: sys.hbar,
        })
    }

    fn bilinear(&self, mat: &[Vec<Complex64>], theta: &PhaseVector, t: f64) -> f64 {
        let n = self.energies.len();
        let phases: Vec<Complex64> = (0..n)
            .map(|i| {
                Complex64::from_polar(
                    self.c_mag[i],
                    theta.phase(i) - self.energies[i] * t / self.hbar,
                )
            })
            .collect();
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += phases[i].conj() * phases[k] * mat[i][k];
            }
        }
        acc.re
    }

    pub fn mu(&self, theta: &PhaseVector, t: f64) -> f64 {
        self.bilinear(&self.x[0], theta, t)
    }

    pub fn p_mean(&self, theta: &PhaseVector, t: f64) -> f64 {
        self.bilinear(&self.p[0], theta, t)
    }

    pub fn variance(&self, theta: &PhaseVector, t: f64) -> f64 {
        let m = self.mu(theta, t);
        (self.bilinear(&self.xx, theta, t) - m * m).max(0.0)
    }
}
