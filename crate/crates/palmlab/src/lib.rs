//! Numerical laboratory for channel coding over stationary point processes.
//!
//! A codebook is a realization of a stationary point process in R^n (Poisson,
//! hard-core thinned, or a cubic grid).  A codeword is displaced by stationary
//! additive noise and the decoder maps the displaced point back to a codeword.
//! Everything of interest — error probability under maximum-likelihood or
//! typicality decoding, its exponential decay rate in the dimension, and the
//! associated capacity — can be written as a Palm expectation over the process
//! and, for the tractable families, reduced to one-dimensional integrals.
//!
//! The crate is organised accordingly:
//!
//! * [`numerics`]  — log-domain special functions and adaptive quadrature,
//! * [`geometry`]  — ball/ellipsoid/lune volumes and radial noise densities,
//! * [`noise`]     — the noise families (white Gaussian, symmetric exponential,
//!   uniform, colored Gaussian, Gauss–Markov) with their entropy machinery,
//! * [`pointprocess`] — codebook samplers and Palm scenarios,
//! * [`decoding`]  — per-trial decoding verdicts,
//! * [`exact`]     — error probabilities by quadrature,
//! * [`exponents`] — closed-form and numerically minimised error exponents,
//! * [`montecarlo`] — deterministic parallel Monte Carlo estimators,
//! * [`acceptance`] — the executable validation suite behind `validate`.
//!
//! Throughout, `alpha >= 1` parametrises the codebook intensity as
//! `lambda_n = alpha^{-n} e^{-n h}` where `h` is the differential entropy rate
//! of the noise: `alpha = 1` puts the rate exactly at capacity and larger
//! `alpha` backs the rate off, so error probabilities decay and the exponents
//! grow in `alpha`.

/// Crate version, surfaced so downstream tools can stamp their outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod acceptance;
pub mod decoding;
pub mod exact;
pub mod exponents;
pub mod geometry;
pub mod montecarlo;
pub mod noise;
pub mod numerics;
pub mod pointprocess;
