//! Training sequence design for MIMO channel estimation when the estimate
//! feeds a specific application (equalization, precoding, weighted error).
//!
//! Channel and noise statistics are Kronecker structured. The crate provides
//! the matrix toolbox, channel/noise models, MVU and MMSE estimators,
//! application weightings, the training designs, and a Monte Carlo harness.

pub mod admissibility;
pub mod channel_model;
pub mod designs;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod matalg;

pub use admissibility::{Admissibility, Application, NoiseSpectrum, SnrRegime};
pub use channel_model::{ChannelDraw, KroneckerCov, StreamTag};
pub use designs::{AsgppCase, AvgMmseMode, DesignStatus, GuaranteedSpec, OrderingResult, TrainingMatrix};
pub use error::{Error, Result};
pub use estimators::{EstimateResult, LinearEstimator};
pub use experiments::{CurvePoint, ExperimentConfig, ExperimentKind, ExperimentOutput, SchemeStat};
pub use matalg::{c64, CMatrix, CVector, HermEig, Svd};
