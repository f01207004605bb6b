//! Numerical toolkit for 1D quasiperiodic Schrödinger operators:
//! transfer-matrix cocycles, Lyapunov exponents, integrated density of
//! states, Green's-function localization diagnostics, and mobility-edge
//! detection for the AMO / GAA / mosaic / long-range-dual / peaky families.

pub mod arithmetic;
pub mod cocycle;
pub mod config;
pub mod greens;
pub mod models;
pub mod phase;
pub mod spectrum;

/// Golden mean (√5 − 1)/2, the default frequency everywhere.
pub fn golden_mean() -> f64 {
    (5.0_f64.sqrt() - 1.0) / 2.0
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
