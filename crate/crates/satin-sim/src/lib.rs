//! Exact simulator and analysis toolkit for collective-spin echo metrology.
//!
//! A cloud of N spin-1/2 atoms in the fully symmetric manifold is an
//! (N+1)-dimensional system (the Dicke ladder). This crate evolves that
//! state vector exactly under rotations and one-axis-twisting shear, models
//! the cavity physics that generates the shear (transmission, shearing
//! strength, light-induced broadening, photon scattering), overlays the
//! algebraic decoherence budget on the exact moments, and analyses the
//! resulting metrology: signal amplification, gain over the standard
//! quantum limit, Heisenberg scaling, Ramsey spin-echo interferometry,
//! Allan deviation, and spherical Wigner quasiprobability maps.
//!
//! Layout:
//! - [`dicke`]: state vector, rotations (stable Wigner-d), twist, moments,
//!   measurement distributions, seeded shot sampling
//! - [`cavity`]: closed-form cavity formulas and the detuning optimizer
//! - [`noise`]: phase-variance / contrast-mixture decoherence overlay
//! - [`satin`]: protocol sequencing, amplification, gain, Ramsey echo,
//!   scaling sweeps, Allan deviation, bootstrap intervals
//! - [`wigner`]: multipole expansion and sphere-grid evaluation
//! - [`cli`]: config-driven experiment runner used by the `satin` binary

pub mod cavity;
pub mod cli;
pub mod dicke;
pub mod noise;
pub mod satin;
pub mod wigner;

pub use cavity::{CavityConfig, TwistBudget};
pub use dicke::{DickeState, RotationAxis, RotationSpec, SpinMoments};
pub use noise::{NoiseBudget, VariancePrediction};
pub use satin::{ProtocolSequence, RunResult, ScalingResult, Step};
pub use wigner::SphereGrid;

use thiserror::Error;

/// Errors surfaced by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// SplitMix64 step; the documented rule for deriving per-task seeds from a
/// root seed so sweep results are independent of worker count.
pub fn task_seed(root: u64, task_index: u64) -> u64 {
    let mut z = root
        .wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(task_index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
