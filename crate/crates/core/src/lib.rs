//! Simulator for a heralded non-local CNOT gate between two remote
//! atom-cavity modules mediated by a single ancilla photon.
//!
//! A photon is reflected successively from two single-sided cavities, each
//! holding one atomic qubit, and the atom-state-dependent reflection phase
//! turns a final polarization measurement of the photon into a herald for a
//! controlled-PHASE gate between the two atoms (a CNOT when the second qubit
//! is read in the x basis). The crate models both the ideal protocol algebra
//! and the physically imperfect one: weak-coherent-state sources, cavity
//! reflection amplitudes from input-output theory, optical losses, mode
//! matching, polarization misalignment, detuning jitter, atomic dephasing,
//! SPAM errors and detector dark counts.
//!
//! Module map:
//! - [`hilbert`] — labeled tensor-product states, operators and channels;
//! - [`optics`] — waveplates, qubit rotations and cavity reflections;
//! - [`protocol`] — the heralded two-qubit gate, ideal and physical;
//! - [`imperfections`] — error channels, shot-noise sampling, error budget;
//! - [`tomography`] — finite-shot measurement, state reconstruction and the
//!   truth-table / Bell-state experiments.

pub mod hilbert;
pub mod imperfections;
pub mod optics;
pub mod protocol;
pub mod rng;
pub mod tomography;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("subsystem name collision: {0}")]
    NameCollision(String),
    #[error("unknown subsystem: {0}")]
    UnknownSubsystem(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("projector is not idempotent (max |P^2 - P| = {0:.3e})")]
    NonIdempotentProjector(f64),
    #[error("state is not physical: {0}")]
    NonPhysical(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("neglected Poisson weight {weight:.3e} above the fock_cutoff={cutoff} exceeds 1e-9")]
    TruncationWeight { cutoff: usize, weight: f64 },
    #[error("herald starvation: success probability {p:.3e} needs ~{needed:.1e} attempts for {target} heralds (cap {cap:.1e})")]
    HeraldStarvation {
        p: f64,
        target: usize,
        needed: f64,
        cap: f64,
    },
    #[error("under-sampled Monte Carlo cell: {0}")]
    UnderSampled(String),
    #[error("missing measurement settings: {0}")]
    MissingSettings(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
