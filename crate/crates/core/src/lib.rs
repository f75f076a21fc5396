//! Stochastic pilot-wave dynamics with position-conditioned phase
//! transitions.
//!
//! The library simulates point particles guided by energy-eigenbasis
//! wavefunctions: a Langevin integrator for the particle, a Poisson-timed
//! transition process that resamples inter-level phases conditioned on the
//! particle position, a spontaneous-localization comparison model, and
//! macroscopic-limit analysis of the center-of-mass motion. Statistical
//! oracles (a Fokker-Planck grid solver and goodness-of-fit tests) are part
//! of the crate so every stochastic component can be validated independently.

pub mod catalog;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod grw;
pub mod macro_limit;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod ste;

pub use error::{CoreError, Result};
pub use grid::{DensityField, Grid1d};
pub use spectral::{
    build_model, BasisFn, Level, ModelKind, ModelSpec, NodePolicy, PhaseVector, SpectralSystem,
};
