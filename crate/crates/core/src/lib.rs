//! Distortion/delay analysis for a Gaussian source transmitted through a
//! buffer over i.i.d. block-fading channels.
//!
//! The library is organized around the pipeline quantizer → buffer →
//! fading channel:
//!
//! * [`specfun`]: gamma family, E₁, ₁F₁/Ψ, and semi-infinite quadrature.
//! * [`channel`]: Rayleigh MIMO channel model: eigenvalue sampling,
//!   Wishart densities, and per-frame mutual information.
//! * [`effcap`]: effective capacity (log-MGF of the instantaneous
//!   capacity), QoS-exponent/delay bookkeeping, and the end-to-end
//!   distortion bound with balanced exponents.
//! * [`distortion`]: closed-form distortion: the no-delay and
//!   infinite-delay extremes, finite-delay SISO/SIMO/MIMO bounds, and the
//!   asymptotic upper bound with its expansion constants.
//! * [`exponent`]: distortion SNR exponents, analytic and fitted.
//! * [`gaussapprox`]: large-antenna Gaussian approximations.
//! * [`queuesim`]: Monte Carlo queue oracle (Lindley recursion) for
//!   overflow probabilities and empirical end-to-end distortion.
//!
//! All rates are in nats; dB/bit conversions belong to callers.

// `!(x > 0.0)` guards reject NaN along with the out-of-domain values;
// rewriting them as `x <= 0.0` would silently admit NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod distortion;
pub mod effcap;
pub mod exponent;
pub mod gaussapprox;
pub mod queuesim;
pub mod specfun;

pub use channel::{
    mutual_information, sample_channel_gain, trial_rng, ChannelError, ChannelSpec, EigenSample,
};
pub use distortion::{DistortionCurve, DistortionError, DistortionMethod, DistortionPoint};
pub use effcap::{EffCapError, QosSpec};
pub use exponent::{ExponentError, ExponentFit, ExponentProfile};
pub use gaussapprox::{GaussApproxError, GaussRegime};
pub use queuesim::{SimConfig, SimError, SimResult};
pub use specfun::{QuadratureKind, QuadratureSpec, SpecFunError};

/// Crate-wide error type aggregating the per-module failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    EffCap(#[from] EffCapError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    GaussApprox(#[from] GaussApproxError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T> = std::result::Result<T, Error>;
