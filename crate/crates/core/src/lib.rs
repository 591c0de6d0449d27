//! Outage probability, long-term average throughput and rate optimization
//! for variable-rate HARQ with incremental redundancy over correlated
//! Beckmann fading channels.
//!
//! - [`channel`]: the non-circular complex Gaussian channel model, its real
//!   Gaussian form, sampling and density.
//! - [`outage`]: the rate kernel `g_K`, asymptotic and Monte Carlo outage,
//!   and the LTAT.
//! - [`optimizer`]: LTAT maximization under an outage constraint.

pub mod channel;
pub mod error;
pub mod optimizer;
pub mod outage;
pub mod rng;

pub use channel::{ChannelModel, RealGaussianForm, ValidityReport};
pub use error::{Error, Result};
pub use nalgebra;
pub use num_complex::Complex64;
pub use optimizer::{RateOptProblem, RateOptResult};
pub use outage::{
    g, g_closed, g_numeric, ltat, ltat_from_outages, outage_asymptotic, AsymptoticOutage, GKernel,
    HarqConfig, LtatMode, MonteCarlo, OutageEstimate,
};

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log₁₀(x)`.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
