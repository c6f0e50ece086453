//! Simulator and metrology toolkit for large correlated spin clusters in
//! multiple-quantum solid-state NMR.
//!
//! The engine works entirely inside the permutation-symmetric operator
//! subspace, whose dimension grows only cubically with the number of spins.
//! That makes 40-spin cluster dynamics tractable on a laptop while every
//! observable of interest (coherence-order distributions, Fisher
//! information, distortion variance) stays exactly representable.
//!
//! Main pieces:
//!
//! - [`symbasis`]: the symmetric operator basis, its product algebra and
//!   superoperator matrices.
//! - [`states`]: model cluster states and coherence-order spectra.
//! - [`dynamics`]: double-quantum evolution, dephasing, the pulse-width
//!   jitter dissipator, and the phase-scan readout pipeline.
//! - [`metrology`]: distortion variance, Gaussian cluster-size fits,
//!   classical and quantum Fisher information.
//! - [`oracle`]: an exact full-Hilbert-space simulator (up to 12 spins)
//!   used to validate every engine operation, plus the eight-pulse cycle
//!   analysis that grounds the jitter master equation.
//! - [`runner`]: configuration-driven pipelines behind the `mqsense` CLI.
//!
//! See the `examples/` directory for one runnable program per capability.

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod linalg;
pub mod symbasis;
pub mod states;
pub mod dynamics;
pub mod metrology;
pub mod oracle;
pub mod runner;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spin count {0} outside supported range 1..={1}")]
    SizeError(u32, u32),
    #[error("label ({0}, {1}, {2}) is not a valid basis label")]
    LabelError(u32, u32, u32),
    #[error("operators live on different bases ({0} vs {1} spins)")]
    BasisMismatch(u32, u32),
    #[error("invalid cluster spec: {0}")]
    SpecError(String),
    #[error("parameter out of range: {0}")]
    ParameterError(String),
    #[error("phase grid invalid: {0}")]
    GridError(String),
    #[error("scan cannot resolve requested order: {0}")]
    ResolutionError(String),
    #[error("order {0} exceeds available orders (max {1})")]
    RangeError(i64, i64),
    #[error("fit failed: {0}")]
    FitError(String),
    #[error("no sensitivity: {0}")]
    NoSensitivity(String),
    #[error("invalid input: {0}")]
    InputError(String),
    #[error("dimension cap exceeded: {0} spins (oracle limit {1})")]
    DimensionCap(u32, u32),
    #[error("config error: {0}")]
    ConfigError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use symbasis::{Label, SuperOperatorMatrix, SymOperator, SymmetricBasis};
pub use states::{build_cluster, coherence_spectrum, ghz_state, maximally_mixed, thermal_state};
pub use states::{ClusterSpec, CoherenceSpectrum, WeightMode};
pub use dynamics::{dephase, dq_hamiltonian, phase_scan, propagate, rotate_z, spectrum_from_scan, v_operator};
pub use dynamics::{EvolutionConfig, Propagation, RunPlan};
pub use metrology::{cfi, distortion_variance, estimate_threshold, gaussian_fit, qfi, qfi_vs_max_order};
pub use metrology::{ClusterFit, DistortionReport, QfiResult};
