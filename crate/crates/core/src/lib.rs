//! Quantized compressive sensing with dithered uniform scalar quantization.
//!
//! Signals from a structured low-complexity set (k-sparse vectors or rank-r
//! matrices) are observed through `y = Q(Φx + ξ)`, where `Φ` is a random
//! Gaussian, Bernoulli or partial-DCT sensing operator, `Q(t) = δ⌊t/δ⌋` is the
//! uniform scalar quantizer and `ξ` a uniform dither on `[0, δ)`. The signal is
//! recovered by projected back projection, `x̂ = P_K(Φᵀy / m)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`sensing`]: random measurement operators with forward and adjoint action.
//! * [`quantize`]: the quantizer, dither draws and the observation map.
//! * [`models`]: signal sets, their projectors and seeded generators.
//! * [`pbp`]: the projected back projection estimator.
//! * [`analysis`]: empirical RIP / LPD estimators, decay fits and trial aggregation.
//! * [`harness`]: experiment configuration, sweeps, CSV and SVG output, property checks.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod models;
pub mod pbp;
pub mod quantize;
pub mod rng;
pub mod sensing;

pub use analysis::{
    aggregate_trials, fit_decay_exponent, DecayFit, DistortionEstimate, DistortionKind, PointStats,
    SeriesFit, SweepAxis, SweepResult,
};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentKind, TrialRecord};
pub use models::{Signal, SignalModel};
pub use pbp::{back_project, reconstruct, reconstruction_error};
pub use quantize::{quantize_scalar, DitherMode, QuantizedMap};
pub use sensing::{OperatorKind, SensingOperator};
