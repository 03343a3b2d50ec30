//! Distortion SNR exponents: α(η) = -lim_{ρ→∞} log D(ρ,η)/log ρ.
//!
//! Analytic formulas for the no-buffer and buffered cases, and an
//! ordinary-least-squares slope fit that validates them against any
//! distortion curve at finite SNR.

use crate::channel::ChannelSpec;
use crate::Error;

/// Errors from exponent fitting.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExponentError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid fit request: {0}")]
    InvalidFit(String),
}

/// No-buffer distortion exponent,
/// α(η) = Σ_{i=1}^{M_*} min(η, 2i-1+|M_t-M_r|).
///
/// Rate-limited (slope η per eigenmode) at small η, diversity-limited at
/// large η with ceiling M_t·M_r.
pub fn exponent_no_buffer(channel: &ChannelSpec, eta: f64) -> f64 {
    let d = channel.diversity_gap() as f64;
    (1..=channel.m_star())
        .map(|i| eta.min(2.0 * i as f64 - 1.0 + d))
        .sum()
}

/// Buffered distortion exponent for normalized delay τ_n,
/// α(η) = τ_n·Σ_{i=1}^{M_*} min(η/τ_n, 2i-1+|M_r-M_t|).
///
/// τ_n = 1 recovers the no-buffer exponent; a 1×M array collapses to
/// min(η, τ_n·M); the ceiling grows to τ_n·M_t·M_r.
pub fn exponent_buffered(channel: &ChannelSpec, eta: f64, tau_n: f64) -> f64 {
    let d = channel.diversity_gap() as f64;
    let scaled = eta / tau_n;
    tau_n
        * (1..=channel.m_star())
            .map(|i| scaled.min(2.0 * i as f64 - 1.0 + d))
            .sum::<f64>()
}

/// Least-squares slope of -log₁₀ D against log₁₀ ρ.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ExponentFit {
    /// Fitted SNR exponent (the regression slope).
    pub slope: f64,
    /// Regression intercept in -log₁₀ D.
    pub intercept: f64,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
}

/// Fit the SNR exponent of `curve` over `snr_db_range` sampled at
/// `points` equally spaced dB values.
///
/// `drop_lowest` discards that many of the lowest-SNR points before
/// regressing; pre-asymptotic curvature at the bottom of the range
/// biases the slope otherwise.
pub fn fit_exponent<F>(
    curve: F,
    snr_db_range: (f64, f64),
    points: usize,
    drop_lowest: usize,
) -> Result<ExponentFit, Error>
where
    F: Fn(f64) -> Result<f64, Error>,
{
    let (lo, hi) = snr_db_range;
    if !(hi > lo) {
        return Err(ExponentError::InvalidFit(format!("need hi > lo, got {lo}..{hi}")).into());
    }
    if points < 4 {
        return Err(ExponentError::InvalidFit(format!("need at least 4 points, got {points}")).into());
    }
    if points - drop_lowest < 2 {
        return Err(ExponentError::InvalidFit(
            "dropping the lowest points leaves fewer than 2".into(),
        )
        .into());
    }
    let step = (hi - lo) / (points - 1) as f64;
    let mut xs = Vec::with_capacity(points - drop_lowest);
    let mut ys = Vec::with_capacity(points - drop_lowest);
    for i in drop_lowest..points {
        let snr_db = lo + step * i as f64;
        let rho = 10f64.powf(snr_db / 10.0);
        let d = curve(rho)?;
        if !(d > 0.0) || !d.is_finite() {
            return Err(ExponentError::InvalidFit(format!(
                "curve must be positive and finite, got {d} at {snr_db} dB"
            ))
            .into());
        }
        xs.push(snr_db / 10.0); // log10 rho
        ys.push(-d.log10());
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    if syy <= 1e-24 {
        return Err(ExponentError::DegenerateFit("distortion curve is constant over the range".into()).into());
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(ExponentFit { slope, intercept, r_squared: 1.0 - ss_res / syy })
}

/// Analytic (and optionally fitted) exponent profile over a bandwidth
/// ratio grid for one channel geometry and delay.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExponentProfile {
    pub mt: usize,
    pub mr: usize,
    /// Normalized delay in frames; `None` marks the no-buffer profile.
    pub tau_n: Option<f64>,
    pub eta_grid: Vec<f64>,
    pub analytic: Vec<f64>,
    pub fitted: Option<Vec<f64>>,
}

impl ExponentProfile {
    /// Evaluate the analytic exponent over an ascending η grid.
    pub fn analytic(channel: &ChannelSpec, tau_n: Option<f64>, eta_grid: Vec<f64>) -> Result<Self, Error> {
        if eta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExponentError::InvalidFit("eta grid must be strictly ascending".into()).into());
        }
        if eta_grid.iter().any(|e| *e < 0.0) {
            return Err(ExponentError::InvalidFit("eta must be nonnegative".into()).into());
        }
        let analytic = eta_grid
            .iter()
            .map(|&eta| match tau_n {
                Some(t) => exponent_buffered(channel, eta, t),
                None => exponent_no_buffer(channel, eta),
            })
            .collect();
        Ok(Self {
            mt: channel.mt(),
            mr: channel.mr(),
            tau_n,
            eta_grid,
            analytic,
            fitted: None,
        })
    }

    /// Saturation ceiling of the profile: τ_n·Σ(2i-1+d), the full
    /// time-space diversity; M_t·M_r in the no-buffer case.
    pub fn ceiling(&self) -> f64 {
        let m = self.mt.min(self.mr) as f64;
        let d = (self.mt.max(self.mr) - self.mt.min(self.mr)) as f64;
        let full = m * m + m * d; // Σ_{i=1}^{m} (2i-1+d)
        self.tau_n.unwrap_or(1.0) * full
    }
}
