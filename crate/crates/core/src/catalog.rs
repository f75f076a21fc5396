//! Convenience constructors for the catalog systems used throughout the
//! test and experiment suites.

use num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{build_model, LevelSpec, ModelKind, ModelSpec, PhaseVector, SpectralSystem};

/// Unit box (L = m = hbar = 1) with the given levels and complex weights.
pub fn box_system(levels: &[(u32, Complex64)]) -> Result<(SpectralSystem, PhaseVector)> {
    build_model(&ModelSpec {
        kind: ModelKind::Box,
        length: Some(1.0),
        omega: None,
        mass: 1.0,
        hbar: 1.0,
        levels: levels
            .iter()
            .map(|(n, c)| LevelSpec { index: vec![*n], coeffs: vec![*c] })
            .collect(),
        packet: None,
        grid_points: None,
    })
}

/// Unit box ground state (K = 0).
pub fn ground_box() -> SpectralSystem {
    box_system(&[(1, Complex64::ONE)]).expect("ground box").0
}

/// Unit box, levels n = 1, 2 with equal real weights (K = 1).
pub fn equal_two_level_box() -> SpectralSystem {
    box_system(&[(1, Complex64::ONE), (2, Complex64::ONE)])
        .expect("two-level box")
        .0
}

/// Unit box, levels n = 1, 2, 3 with equal real weights (K = 2).
pub fn equal_three_level_box() -> SpectralSystem {
    box_system(&[(1, Complex64::ONE), (2, Complex64::ONE), (3, Complex64::ONE)])
        .expect("three-level box")
        .0
}

/// Unit box, levels n = 1, 2 with weights proportional to (2, 1).
pub fn uneven_two_level_box() -> SpectralSystem {
    box_system(&[(1, Complex64::new(2.0, 0.0)), (2, Complex64::ONE)])
        .expect("uneven two-level box")
        .0
}

/// Harmonic oscillator (omega = m = hbar = 1) with equal weights on `levels`.
pub fn oscillator_system(levels: &[u32]) -> Result<(SpectralSystem, PhaseVector)> {
    build_model(&ModelSpec {
        kind: ModelKind::Oscillator,
        length: None,
        omega: Some(1.0),
        mass: 1.0,
        hbar: 1.0,
        levels: levels
            .iter()
            .map(|n| LevelSpec { index: vec![*n], coeffs: vec![Complex64::ONE] })
            .collect(),
        packet: None,
        grid_points: None,
    })
}

/// Two particles in a unit box occupying the degenerate pair (1, 2) with
/// equal weights: a K = 0 system with a two-member level.
pub fn degenerate_pair_box() -> SpectralSystem {
    build_model(&ModelSpec {
        kind: ModelKind::TwoParticleBox,
        length: Some(1.0),
        omega: None,
        mass: 1.0,
        hbar: 1.0,
        levels: vec![LevelSpec {
            index: vec![1, 2],
            coeffs: vec![Complex64::ONE, Complex64::ONE],
        }],
        packet: None,
        grid_points: None,
    })
    .expect("degenerate pair box")
    .0
}
