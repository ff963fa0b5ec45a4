//! Monte Carlo studies comparing training designs at equal training energy,
//! with CSV output.
//!
//! Every trial draws its randomness from streams keyed by `(seed, point,
//! trial, purpose)`, and per-trial results are reduced in trial order, so
//! output is identical for any number of worker threads.

mod config;
mod curves;
mod qpsk;
mod runners;

pub use config::{db_to_linear, parse_grid, EstimatorKind, ExperimentConfig, ExperimentKind, WeightKind};
pub use curves::{emit_csv, parse_csv, parse_csv_str, to_csv_string, CurvePoint, SchemeStat, CSV_HEADER};
pub use qpsk::{qpsk_detect, qpsk_modulate, qpsk_roundtrip};
pub use runners::{
    data_noise_spectrum, design_schemes, l_weights, run_equalization, run_experiment, run_l_optimality,
    run_nmse_vs_gamma, run_outage, run_zf, schemes_for, ExperimentOutput, Scheme, SchemeDesigns, Statistics,
    CLAIRVOYANT,
};
