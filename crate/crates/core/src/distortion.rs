//! Closed-form end-to-end distortion of a unit-variance complex Gaussian
//! source over the buffered fading channel.
//!
//! The two delay extremes are
//!
//!   D_0(ρ)  = E[ det(I + (ρ/M_t)HH^H)^{-η} ]          (no buffer),
//!   D_∞(ρ)  = exp(-η·E[ ln det(I + (ρ/M_t)HH^H) ])    (infinite delay),
//!
//! with D_∞ <= D_0 by Jensen. Between them, a buffer of normalized delay
//! τ_n frames admits the bound
//!
//!   D(τ_n) <= [ B^{-1}·det G(λη) ]^{τ_n},   λ = 1/τ_n,
//!
//! where G is the M_*×M_* Hankel matrix of weighted eigenvalue moments
//!
//!   g_{ij}(s) = ∫₀^∞ (1 + (ρ/M_t)u)^{-s} u^{i+j+d} e^{-u} du
//!
//! and B normalizes so that s = 0 gives exactly 1. The SISO and SIMO
//! specializations have incomplete-gamma and ₁F₁ closed forms, and an
//! elementary upper bound captures the τ_n → ∞ approach to D_∞.

use nalgebra::DMatrix;

use crate::channel::{eigen_linear_statistic, wishart_log_norm, ChannelSpec};
use crate::specfun::{
    exp_e1_product, exp_integral_e1, gamma, gamma_upper_incomplete, hyp1f1, integrate_semiinfinite,
    lgamma, QuadratureSpec, EULER_GAMMA,
};
use crate::Error;

/// Errors from the distortion closed forms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistortionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("closed form hits a gamma pole ({0}); use the quadrature path")]
    ClosedFormPole(String),
    #[error("outside validity region: {0}")]
    OutsideValidity(String),
}

// ---------------------------------------------------------------------------
// Wishart determinant moments (Hankel route)
// ---------------------------------------------------------------------------

/// ln E[ det(I + (ρ/M_t)HH^H)^{-s} ] for s >= 0.
///
/// By the Andreief identity the expectation over the Wishart ensemble is
/// det[g_{ij}(s)] / det[g_{ij}(0)]; the s = 0 determinant has the closed
/// form Π_{i=1}^{M_*} Γ(i)Γ(d+i). The determinant is taken on the
/// max-scaled matrix with full pivoting because the entries span many
/// orders of magnitude at high SNR.
pub fn log_det_moment(channel: &ChannelSpec, s: f64) -> Result<f64, Error> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(DistortionError::InvalidParameter(format!(
            "moment order must be >= 0, got {s}"
        ))
        .into());
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let m = channel.m_star();
    let d = channel.diversity_gap();
    // Highest raw moment is Γ(2(m-1)+d+1); beyond f64 range the matrix
    // would need log-domain assembly, which nothing here requires.
    if 2 * (m - 1) + d + 1 > 169 {
        return Err(DistortionError::InvalidParameter(format!(
            "diversity gap d={d} too large for the Hankel moment route"
        ))
        .into());
    }
    let a = channel.snr_per_tx();
    let quad = QuadratureSpec::default();
    let entry = |i: usize, j: usize| -> Result<f64, Error> {
        let p = (i + j + d) as i32;
        Ok(integrate_semiinfinite(
            |u: f64| (-s * (a * u).ln_1p()).exp() * u.powi(p) * (-u).exp(),
            quad,
        )?)
    };
    if m == 1 {
        let g00 = entry(0, 0)?;
        return Ok(g00.ln() - lgamma((d + 1) as f64)?);
    }
    let mut g = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = entry(i, j)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let g_max = g.iter().cloned().fold(0.0f64, f64::max);
    let scaled = g / g_max;
    let det = scaled.full_piv_lu().determinant();
    if !(det > 0.0) {
        return Err(DistortionError::InvalidParameter(format!(
            "Hankel determinant nonpositive ({det}); moment matrix too ill-conditioned"
        ))
        .into());
    }
    Ok(m as f64 * g_max.ln() + det.ln() - wishart_log_norm(channel))
}

// ---------------------------------------------------------------------------
// Delay extremes
// ---------------------------------------------------------------------------

/// No-buffer distortion D_0 = E[det(I + (ρ/M_t)HH^H)^{-η}].
pub fn d_zero(channel: &ChannelSpec, eta: f64) -> Result<f64, Error> {
    check_eta(eta)?;
    Ok(log_det_moment(channel, eta)?.exp())
}

/// Ergodic capacity E[ln det(I + (ρ/M_t)HH^H)] in nats per channel use,
/// by quadrature of ln(1+(ρ/M_t)λ) against the marginal eigenvalue
/// density.
pub fn ergodic_capacity(channel: &ChannelSpec) -> Result<f64, Error> {
    let a = channel.snr_per_tx();
    Ok(eigen_linear_statistic(
        channel,
        |lam| (a * lam).ln_1p(),
        QuadratureSpec::default(),
    )?)
}

/// Scalar Rayleigh ergodic capacity e^{1/ρ}·E₁(1/ρ) in nats per use.
///
/// Uses the jointly evaluated product so that ρ → 0 (where e^{1/ρ}
/// overflows while E₁ underflows) degrades gracefully to ~ρ.
pub fn ergodic_capacity_m1(rho: f64) -> Result<f64, Error> {
    if !(rho > 0.0) {
        return Err(DistortionError::InvalidParameter(format!("rho must be > 0, got {rho}")).into());
    }
    Ok(exp_e1_product(1.0 / rho)?)
}

/// Infinite-delay distortion D_∞ = exp(-η·C_erg).
pub fn d_infinite(channel: &ChannelSpec, eta: f64) -> Result<f64, Error> {
    check_eta(eta)?;
    Ok((-eta * ergodic_capacity(channel)?).exp())
}

fn check_eta(eta: f64) -> Result<(), Error> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(DistortionError::InvalidParameter(format!("eta must be > 0, got {eta}")).into());
    }
    Ok(())
}

fn check_tau(tau_n: f64) -> Result<(), Error> {
    if !(tau_n > 0.0) || !tau_n.is_finite() {
        return Err(DistortionError::InvalidParameter(format!(
            "tau_n must be positive and finite, got {tau_n}"
        ))
        .into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Finite delay: SISO / SIMO / MIMO
// ---------------------------------------------------------------------------

/// SISO distortion-delay bound, quadrature form:
///
///   D(τ_n) = [ ∫₀^∞ (1+ρx)^{-λη} e^{-x} dx ]^{τ_n},  λ = 1/τ_n.
///
/// The defining integral is the ground truth of the bound; the
/// incomplete-gamma form [`d_delay_siso_closed`] is its cross-check.
pub fn d_delay_siso(rho: f64, eta: f64, tau_n: f64) -> Result<f64, Error> {
    check_rho(rho)?;
    check_eta(eta)?;
    check_tau(tau_n)?;
    let nu = eta / tau_n;
    let inner = integrate_semiinfinite(
        |x: f64| (-nu * (rho * x).ln_1p()).exp() * (-x).exp(),
        QuadratureSpec::default(),
    )?;
    Ok((tau_n * inner.ln()).exp())
}

/// SISO bound through the substituted closed form
///
///   D(τ_n) = [ ρ^{-λη} e^{1/ρ} Γ(1-λη, 1/ρ) ]^{τ_n}
///
/// with Γ the upper incomplete gamma. Only valid while λη < 1, where the
/// first gamma argument stays positive.
pub fn d_delay_siso_closed(rho: f64, eta: f64, tau_n: f64) -> Result<f64, Error> {
    check_rho(rho)?;
    check_eta(eta)?;
    check_tau(tau_n)?;
    let nu = eta / tau_n;
    if nu >= 1.0 {
        return Err(DistortionError::OutsideValidity(format!(
            "special-function form needs λη < 1, got {nu}; use d_delay_siso"
        ))
        .into());
    }
    let inv_rho = 1.0 / rho;
    let log_inner = -nu * rho.ln() + inv_rho + gamma_upper_incomplete(1.0 - nu, inv_rho)?.ln();
    Ok((tau_n * log_inner).exp())
}

/// SIMO (m receive antennas) distortion-delay bound at η = 1 in its
/// ₁F₁ closed form:
///
///   D_m(τ_n) = [ Γ(λ-m)/Γ(λ)·ρ'^{-m}·₁F₁(m; m-λ+1; 1/ρ')
///              + Γ(m-λ)/Γ(m)·ρ'^{-λ}·₁F₁(λ; λ-m+1; 1/ρ') ]^{τ_n}
///
/// with λ = 1/τ_n. `miso_power_split` selects the MISO reading of the
/// same combining gain: transmit beamforming over m antennas with the
/// power divided by m, i.e. ρ' = ρ/m instead of ρ.
///
/// Integer λ hits gamma/₁F₁ poles (removable in the sum, catastrophic in
/// the parts); that case is rejected and the caller should use the
/// quadrature route ([`d_delay_mimo`] on the 1×m geometry).
pub fn d_delay_simo(m: usize, rho: f64, tau_n: f64, miso_power_split: bool) -> Result<f64, Error> {
    check_rho(rho)?;
    check_tau(tau_n)?;
    if m < 1 || m > crate::channel::MAX_MIN_ANTENNAS.max(8) {
        return Err(DistortionError::InvalidParameter(format!("m must be in 1..=8, got {m}")).into());
    }
    let lambda = 1.0 / tau_n;
    if (lambda - lambda.round()).abs() < 1e-9 && lambda.round() >= 1.0 {
        return Err(DistortionError::ClosedFormPole(format!(
            "λ = 1/τ_n = {lambda} is an integer"
        ))
        .into());
    }
    let mf = m as f64;
    let rho_eff = if miso_power_split { rho / mf } else { rho };
    let z = 1.0 / rho_eff;
    let term1 = gamma(lambda - mf)? / gamma(lambda)?
        * rho_eff.powf(-mf)
        * hyp1f1(mf, mf - lambda + 1.0, z)?;
    let term2 = gamma(mf - lambda)? / gamma(mf)?
        * rho_eff.powf(-lambda)
        * hyp1f1(lambda, lambda - mf + 1.0, z)?;
    let inner = term1 + term2;
    if !(inner > 0.0) {
        return Err(DistortionError::OutsideValidity(format!(
            "SIMO closed form produced a nonpositive inner value {inner}"
        ))
        .into());
    }
    Ok((tau_n * inner.ln()).exp())
}

/// General MIMO distortion-delay bound via the Hankel determinant:
///
///   D(τ_n) = [ B^{-1} det G(λη) ]^{τ_n},  λ = 1/τ_n.
///
/// θ and K only enter through λ = θK, so the bound is a function of the
/// normalized delay alone. Reduces to [`d_delay_siso`] for 1×1 and to
/// [`d_delay_simo`] (η = 1) for 1×m / m×1.
pub fn d_delay_mimo(channel: &ChannelSpec, eta: f64, tau_n: f64) -> Result<f64, Error> {
    check_eta(eta)?;
    check_tau(tau_n)?;
    Ok((tau_n * log_det_moment(channel, eta / tau_n)?).exp())
}

fn check_rho(rho: f64) -> Result<(), Error> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(DistortionError::InvalidParameter(format!("rho must be > 0, got {rho}")).into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Asymptotic upper bound (large delay, η = 1)
// ---------------------------------------------------------------------------

/// φ = (6ξ² - π²)/12 with ξ the Euler-Mascheroni constant: the quadratic
/// coefficient in the reciprocal-gamma expansion 1/Γ(-λ) around 0.
fn phi_const() -> f64 {
    (6.0 * EULER_GAMMA * EULER_GAMMA - std::f64::consts::PI * std::f64::consts::PI) / 12.0
}

/// Elementary upper bound on the SISO distortion-delay curve (η = 1):
///
///   D_up(λ) = [ (e^{1/ρ}-1)/(λ-1) + ρ^{-λ} e^{1/ρ}/(1-ξλ+φλ²) ]^{1/λ}
///
/// valid as λ = 1/τ_n → 0, where it approaches D_∞ as D_∞·e^{Cλ}. The
/// λ ≥ 1 half-line (and the region where the bracket loses positivity,
/// λ ≳ 0.87) is outside the derivation and rejected.
pub fn d_upper_asymptotic(rho: f64, tau_n: f64) -> Result<f64, Error> {
    check_rho(rho)?;
    check_tau(tau_n)?;
    let lambda = 1.0 / tau_n;
    if lambda >= 1.0 {
        return Err(DistortionError::OutsideValidity(format!(
            "upper bound needs λ = 1/τ_n < 1, got {lambda}"
        ))
        .into());
    }
    let bracket = upper_bound_bracket(rho, lambda);
    if !(bracket > 0.0) {
        return Err(DistortionError::OutsideValidity(format!(
            "bracket nonpositive at λ={lambda} (bound derivation assumes λ → 0)"
        ))
        .into());
    }
    Ok((bracket.ln() / lambda).exp())
}

/// The bracketed expression of the upper bound as a function of λ;
/// analytic around λ = 0 with value 1 there.
fn upper_bound_bracket(rho: f64, lambda: f64) -> f64 {
    let e = (1.0 / rho).exp();
    let xi = EULER_GAMMA;
    (e - 1.0) / (lambda - 1.0) + rho.powf(-lambda) * e / (1.0 - xi * lambda + phi_const() * lambda * lambda)
}

/// Expansion constants (a, b) of the upper-bound bracket,
/// 1 + aλ + bλ² + O(λ³), so that
///
///   ln D_up(λ) = a + (b - a²/2)λ + O(λ²):
///
///   a = 1 - e^{1/ρ} + ξe^{1/ρ} - ln ρ·e^{1/ρ}
///   b = 1 - e^{1/ρ} + (ξ²-φ)e^{1/ρ} - ξ ln ρ·e^{1/ρ} + (ln²ρ/2)·e^{1/ρ}
///
/// The last term carries the e^{1/ρ}/2 factor of the second-order ρ^{-λ}
/// Taylor coefficient; the unit-test oracle differentiates the actual
/// bracket to confirm both constants.
pub fn asymptotic_constants(rho: f64) -> (f64, f64) {
    let e = (1.0 / rho).exp();
    let xi = EULER_GAMMA;
    let phi = phi_const();
    let lr = rho.ln();
    let a = 1.0 - e + xi * e - lr * e;
    let b = 1.0 - e + (xi * xi - phi) * e - xi * lr * e + 0.5 * lr * lr * e;
    (a, b)
}

/// |F - E₁(1/ρ)| with F = 1 - e^{-1/ρ} - ξ + ln ρ: how far the
/// elementary expression driving the upper bound's intercept sits from
/// the exact exponential integral. Small for ρ ≳ 10, O(1) at low SNR.
pub fn e1_elementary_gap(rho: f64) -> Result<f64, Error> {
    check_rho(rho)?;
    let f = 1.0 - (-1.0 / rho).exp() - EULER_GAMMA + rho.ln();
    Ok((f - exp_integral_e1(1.0 / rho)?).abs())
}

// ---------------------------------------------------------------------------
// Curve containers
// ---------------------------------------------------------------------------

/// Which formula or simulator produced a distortion value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionMethod {
    D0,
    DInf,
    SisoClosed,
    SimoClosed,
    MimoHankel,
    UpperAsymptotic,
    QuadratureOracle,
    MonteCarlo,
}

impl std::fmt::Display for DistortionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::D0 => "d0",
            Self::DInf => "d_inf",
            Self::SisoClosed => "siso_closed",
            Self::SimoClosed => "simo_closed",
            Self::MimoHankel => "mimo_hankel",
            Self::UpperAsymptotic => "upper_asymptotic",
            Self::QuadratureOracle => "quadrature_oracle",
            Self::MonteCarlo => "monte_carlo",
        };
        f.write_str(s)
    }
}

/// One point of a distortion surface with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DistortionPoint {
    /// Linear SNR ρ.
    pub snr: f64,
    /// Normalized delay τ_n in frames; +∞ for the infinite-delay curve,
    /// 0 encodes the no-buffer extreme.
    pub normalized_delay: f64,
    pub eta: f64,
    pub value: f64,
    pub method: DistortionMethod,
}

impl DistortionPoint {
    pub fn new(
        snr: f64,
        normalized_delay: f64,
        eta: f64,
        value: f64,
        method: DistortionMethod,
    ) -> Result<Self, Error> {
        if !(value > 0.0 && value <= 1.0 + 1e-12) {
            return Err(DistortionError::InvalidParameter(format!(
                "distortion must lie in (0, 1], got {value}"
            ))
            .into());
        }
        Ok(Self { snr, normalized_delay, eta, value: value.min(1.0), method })
    }
}

/// Which coordinate a [`DistortionCurve`] sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrSweep,
    DelaySweep,
    EtaSweep,
}

/// An ordered sweep of distortion points: strictly increasing along the
/// swept axis, constant in the other coordinates.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DistortionCurve {
    points: Vec<DistortionPoint>,
    axis: SweepAxis,
}

impl DistortionCurve {
    pub fn new(points: Vec<DistortionPoint>, axis: SweepAxis) -> Result<Self, Error> {
        let coord = |p: &DistortionPoint| match axis {
            SweepAxis::SnrSweep => p.snr,
            SweepAxis::DelaySweep => p.normalized_delay,
            SweepAxis::EtaSweep => p.eta,
        };
        let frozen = |p: &DistortionPoint| match axis {
            SweepAxis::SnrSweep => (p.normalized_delay, p.eta),
            SweepAxis::DelaySweep => (p.snr, p.eta),
            SweepAxis::EtaSweep => (p.snr, p.normalized_delay),
        };
        for w in points.windows(2) {
            if !(coord(&w[0]) < coord(&w[1])) {
                return Err(DistortionError::InvalidParameter(
                    "curve not strictly ordered along the swept axis".into(),
                )
                .into());
            }
            if frozen(&w[0]) != frozen(&w[1]) {
                return Err(DistortionError::InvalidParameter(
                    "non-swept parameters vary along the curve".into(),
                )
                .into());
            }
        }
        Ok(Self { points, axis })
    }

    pub fn points(&self) -> &[DistortionPoint] {
        &self.points
    }

    pub fn axis(&self) -> SweepAxis {
        self.axis
    }
}
