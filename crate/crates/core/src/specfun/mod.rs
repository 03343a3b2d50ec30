//! Special-function kernels and semi-infinite quadrature.
//!
//! Everything downstream (effective capacity, distortion bounds, SNR
//! exponents) reduces to a handful of classical functions: the gamma
//! family, the exponential integral E₁, the confluent hypergeometric
//! ₁F₁ and its Tricomi companion Ψ, plus numerical integration of
//! exponentially decaying integrands on [0, ∞).
//!
//! All functions here are pure and thread-safe.

use std::fmt;

mod expint;
mod gamma;
mod hyper;
mod quad;

pub use expint::{exp_e1_product, exp_integral_e1};
pub use gamma::{gamma, gamma_lower_incomplete, gamma_upper_incomplete, lgamma, recip_gamma};
pub use hyper::{hyp1f1, tricomi_psi};
pub use quad::{integrate_semiinfinite, laguerre_rule, LaguerreRule};

/// Euler-Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Errors from special-function evaluation and quadrature.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecFunError {
    /// Argument hit a pole (e.g. gamma at a nonpositive integer).
    #[error("pole: {0}")]
    Pole(String),
    /// Argument outside the function's domain.
    #[error("domain: {0}")]
    Domain(String),
    /// A series, continued fraction, or quadrature refinement failed to
    /// converge to the requested tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

/// How a semi-infinite integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    /// Fixed-order Gauss-Laguerre with node doubling as the error check.
    GaussLaguerre,
    /// Adaptive subdivision on the compactified domain.
    AdaptiveSemiInfinite,
}

/// Quadrature configuration for integrals over [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub kind: QuadratureKind,
    pub rel_tol: f64,
}

impl QuadratureSpec {
    /// Validated constructor: `node_count >= 2`, `rel_tol` in (0, 1e-2].
    pub fn new(node_count: usize, kind: QuadratureKind, rel_tol: f64) -> Result<Self, SpecFunError> {
        if node_count < 2 {
            return Err(SpecFunError::Domain(format!(
                "node_count must be >= 2, got {node_count}"
            )));
        }
        if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
            return Err(SpecFunError::Domain(format!(
                "rel_tol must be in (0, 1e-2], got {rel_tol}"
            )));
        }
        Ok(Self { node_count, kind, rel_tol })
    }
}

impl Default for QuadratureSpec {
    /// 128-node Gauss-Laguerre with adaptive fallback at rel_tol 1e-9.
    ///
    /// The tolerance can be overridden globally through the `DD_QUAD_TOL`
    /// environment variable (read once per process).
    fn default() -> Self {
        static TOL: once_cell::sync::Lazy<f64> = once_cell::sync::Lazy::new(|| {
            std::env::var("DD_QUAD_TOL")
                .ok()
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|t| *t > 0.0 && *t <= 1e-2)
                .unwrap_or(1e-9)
        });
        Self {
            node_count: 128,
            kind: QuadratureKind::GaussLaguerre,
            rel_tol: *TOL,
        }
    }
}

impl fmt::Display for QuadratureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} n={} rel_tol={:.1e}",
            self.kind, self.node_count, self.rel_tol
        )
    }
}
