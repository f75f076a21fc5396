//! Analytic eigenfunctions for the catalog systems.
//!
//! Values, gradients and Laplacians are closed-form; no PDE eigensolver is
//! involved anywhere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One orthonormal basis eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BasisFn {
    /// sqrt(2/L) sin(n pi x / L) on [0, L], n >= 1.
    BoxMode { n: u32, length: f64 },
    /// Harmonic-oscillator Hermite function, n >= 0.
    OscillatorMode { n: u32, omega: f64, mass: f64, hbar: f64 },
    /// exp(i p x / hbar) / sqrt(extent) on [-extent/2, extent/2], periodic.
    PlaneWave { p: f64, extent: f64, hbar: f64 },
    /// Product of two box modes on [0, L]^2 (two particles in one box).
    BoxMode2d { na: u32, nb: u32, length: f64 },
}

/// Value, gradient and Laplacian of a complex-valued function at one point.
#[derive(Debug, Clone)]
pub struct FnEval {
    pub value: Complex64,
    pub grad: Vec<Complex64>,
    pub lap: Complex64,
}

fn box_mode_1d(n: u32, length: f64, x: f64) -> (f64, f64, f64) {
    let k = n as f64 * std::f64::consts::PI / length;
    let a = (2.0 / length).sqrt();
    let v = a * (k * x).sin();
    (v, a * k * (k * x).cos(), -k * k * v)
}

/// Normalized Hermite function h_n(xi) together with dh/dxi.
fn hermite_fn(n: u32, xi: f64) -> (f64, f64) {
    let mut h_prev = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    if n == 0 {
        return (h_prev, -xi * h_prev);
    }
    let mut h = std::f64::consts::SQRT_2 * xi * h_prev;
    for m in 2..=n {
        let m = m as f64;
        let next = (2.0 / m).sqrt() * xi * h - ((m - 1.0) / m).sqrt() * h_prev;
        h_prev = h;
        h = next;
    }
    let dh = (2.0 * n as f64).sqrt() * h_prev - xi * h;
    (h, dh)
}

impl BasisFn {
    pub fn dim(&self) -> usize {
        match self {
            BasisFn::BoxMode2d { .. } => 2,
            _ => 1,
        }
    }

    /// Eigenenergy of the mode for the given mass parameter.
    pub fn energy(&self, mass: f64, hbar: f64) -> f64 {
        match *self {
            BasisFn::BoxMode { n, length } => {
                let k = n as f64 * std::f64::consts::PI / length;
                hbar * hbar * k * k / (2.0 * mass)
            }
            BasisFn::OscillatorMode { n, omega, .. } => hbar * omega * (n as f64 + 0.5),
            BasisFn::PlaneWave { p, .. } => p * p / (2.0 * mass),
            BasisFn::BoxMode2d { na, nb, length } => {
                let k = std::f64::consts::PI / length;
                hbar * hbar * k * k * ((na * na + nb * nb) as f64) / (2.0 * mass)
            }
        }
    }

    pub fn eval(&self, q: &[f64]) -> FnEval {
        match *self {
            BasisFn::BoxMode { n, length } => {
                let (v, g, l) = box_mode_1d(n, length, q[0]);
                FnEval {
                    value: Complex64::new(v, 0.0),
                    grad: vec![Complex64::new(g, 0.0)],
                    lap: Complex64::new(l, 0.0),
                }
            }
            BasisFn::OscillatorMode { n, omega, mass, hbar } => {
                let s = (mass * omega / hbar).sqrt();
                let xi = s * q[0];
                let (h, dh) = hermite_fn(n, xi);
                let norm = s.sqrt();
                // h'' = (xi^2 - 2n - 1) h from the eigenvalue equation.
                let d2h = (xi * xi - 2.0 * n as f64 - 1.0) * h;
                FnEval {
                    value: Complex64::new(norm * h, 0.0),
                    grad: vec![Complex64::new(norm * s * dh, 0.0)],
                    lap: Complex64::new(norm * s * s * d2h, 0.0),
                }
            }
            BasisFn::PlaneWave { p, extent, hbar } => {
                let k = p / hbar;
                let v = Complex64::from_polar(extent.powf(-0.5), k * q[0]);
                FnEval {
                    value: v,
                    grad: vec![Complex64::new(0.0, k) * v],
                    lap: Complex64::new(-k * k, 0.0) * v,
                }
            }
            BasisFn::BoxMode2d { na, nb, length } => {
                let (va, ga, la) = box_mode_1d(na, length, q[0]);
                let (vb, gb, lb) = box_mode_1d(nb, length, q[1]);
                FnEval {
                    value: Complex64::new(va * vb, 0.0),
                    grad: vec![Complex64::new(ga * vb, 0.0), Complex64::new(va * gb, 0.0)],
                    lap: Complex64::new(la * vb + va * lb, 0.0),
                }
            }
        }
    }
}
