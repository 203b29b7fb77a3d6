//! Bath-assisted cooling of a spin under pure dephasing.
//!
//! The spin couples to a bosonic bath through `σ̂z`, so populations are
//! conserved between pulses. Instantaneous rotations convert bath-induced
//! phase correlations into polarization. This crate evaluates the bath
//! kernels, propagates the spin exactly through arbitrary pulse sequences,
//! averages over inhomogeneous ensembles and optimizes pulse parameters.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod kernels;
pub mod optimize;
pub mod oracle;
pub mod pulses;
pub mod quadrature;
pub mod reproduce;
pub mod special;

pub use dynamics::{evolve_sequence, ModelConfig, SpinState};
pub use error::{Error, Result};
pub use kernels::{Backend, BathKernels, Kernel, Mode, SpectralDensity};
pub use pulses::{named_pulse, NamedPulse, Preparation, Pulse, PulseSequence, Step};
