//! Bit-interleaved coded modulation (BICM) link-level simulation with
//! generalized-mutual-information (GMI) analysis of detector LLRs.
//!
//! The crate covers the full receiver chain needed to study LLR correction:
//!
//! - [`constellation`]: Gray-labeled square QAM and its bit channels.
//! - [`channel`]: AWGN and fast Rayleigh fading, plus a parametric receiver
//!   mismatch model (noise-variance bias, CSI error).
//! - [`detector`]: exact MAP and max-log soft demappers.
//! - [`turbo`]: rate-1/3 turbo code with LogMAP and scaled max-LogMAP decoding.
//! - [`gmi`]: I-curves, critical points, histogram LUT scaling, uniform scaling
//!   and consistency diagnostics.
//! - [`online_scaling`]: decision-aided I-curve estimation and the multiplicative
//!   scaling-factor search, including sign-split (2-level) factors.
//! - [`harness`]: experiment configuration, Monte Carlo loops and artifact output.
//!
//! LLRs follow the convention `ln p(b=1|y) / p(b=0|y)`: positive values favor a one.

pub mod channel;
pub mod constellation;
pub mod dataset;
pub mod detector;
mod error;
pub mod gmi;
pub mod harness;
pub mod online_scaling;
pub mod rng;
pub mod turbo;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
