//! Link-level Monte Carlo engine for single-cell downlink massive MU-MIMO.
//!
//! The pipeline synthesizes a spatially correlated, cross-polarized, Rician
//! block channel for `N` distributed antenna clusters jointly serving `K`
//! single-antenna users, applies MF or ZF linear precoding under imperfect
//! CSI, and aggregates per-user expected SINR / SNR samples into empirical
//! CDFs over many random user drops.
//!
//! Modules map onto the pipeline stages:
//! - [`array_geometry`]: element layouts (URA / cylindrical), cluster
//!   placement, user drops.
//! - [`channel`]: AOD sampling, spatial correlation synthesis, link gains,
//!   Rician fading, CSI corruption.
//! - [`precoding`]: MF / ZF precoders, closed-form expected SINR / SNR, and
//!   an independent link-level oracle.
//! - [`montecarlo`]: scenario orchestration, seed discipline, sweeps, CDFs.

pub mod array_geometry;
pub mod channel;
pub mod montecarlo;
pub mod precoding;
pub mod seed;

use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("rank-deficient Gram matrix: condition number {cond:.3e} exceeds {limit:.1e}")]
    RankDeficient { cond: f64, limit: f64 },
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;

/// Power ratio in dB to linear scale.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB. Zero maps to -inf.
#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}
