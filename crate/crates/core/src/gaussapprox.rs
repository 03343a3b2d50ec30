//! Large-antenna Gaussian approximations of the MIMO mutual information
//! and the closed-form effective capacity / distortion they induce.
//!
//! When one array dimension grows, ln det(I + (ρ/M_t)HH^H) concentrates
//! (channel hardening) and a central limit theorem makes it Gaussian;
//! the MGF identity E[e^{sX}] = exp(sμ + s²σ²/2) then collapses the
//! effective capacity to an affine function of θ.

use crate::effcap::QosSpec;
use crate::Error;

/// Errors from the Gaussian approximations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussApproxError {
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("approximation invalid: {0}")]
    OutsideValidity(String),
}

/// Which array dimension is taken large.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussRegime {
    /// M_r → ∞ with M_t fixed.
    LargeMrFixedMt,
    /// M_t → ∞ with M_r fixed.
    LargeMtFixedMr,
    /// Both large at fixed β = M_r/M_t, high SNR. Only the SNR exponent
    /// is available: the mean/variance constants F(β), σ²(β) have no
    /// closed form here.
    LargeBothFixedBeta { beta: f64 },
}

/// Mean and variance of the per-channel-use mutual information (nats):
///
///   regime 1:  I ~ N( M_t·ln(1+M_r ρ/M_t),  M_t/M_r )
///   regime 2:  I ~ N( M_r·ln(1+ρ),          (M_r/M_t)·ρ²/(1+ρ)² )
///
/// The regime-2 variance uses the ratio and denominator consistent with
/// hardening as M_t → ∞ and with the Gaussian-MGF effective capacity.
pub fn gauss_moments(
    regime: GaussRegime,
    mt: usize,
    mr: usize,
    rho: f64,
) -> Result<(f64, f64), Error> {
    check_antennas(mt, mr, rho)?;
    let mtf = mt as f64;
    let mrf = mr as f64;
    match regime {
        GaussRegime::LargeMrFixedMt => {
            let mean = mtf * (mrf * rho / mtf).ln_1p();
            let var = mtf / mrf;
            Ok((mean, var))
        }
        GaussRegime::LargeMtFixedMr => {
            let mean = mrf * rho.ln_1p();
            let var = (mrf / mtf) * rho * rho / ((1.0 + rho) * (1.0 + rho));
            Ok((mean, var))
        }
        GaussRegime::LargeBothFixedBeta { beta } => Err(GaussApproxError::UnsupportedRegime(
            format!("moments for fixed β = {beta} need constants with no closed form here; only the SNR exponent is available"),
        )
        .into()),
    }
}

/// Closed-form effective capacity in nats per source sample,
///
///   E_c(θ) = η·μ - (θK/2)·η²·σ²
///
/// with (μ, σ²) the per-use Gaussian moments. Approaches the ergodic
/// capacity η·μ as θ → 0. A θ large enough to drive the expression
/// negative is outside the approximation's regime and logged as a
/// warning.
pub fn effcap_gauss(
    regime: GaussRegime,
    mt: usize,
    mr: usize,
    rho: f64,
    qos: &QosSpec,
) -> Result<f64, Error> {
    let (mean, var) = gauss_moments(regime, mt, mr, rho)?;
    let eta = qos.eta();
    let theta_k = qos.theta() * qos.samples_per_frame() as f64;
    let value = eta * mean - 0.5 * theta_k * eta * eta * var;
    if value < 0.0 {
        log::warn!(
            "Gaussian effective capacity negative ({value:.3e}) at θK = {theta_k:.3e}; \
             the approximation has left its validity range"
        );
    }
    Ok(value)
}

/// Closed-form distortion-delay approximation:
///
///   regime 1:  D(τ_n) = [1 + M_r ρ/M_t - exp((M_t/2M_r)·η²/τ_n)]^{-M_t η}
///   regime 2:  D(τ_n) = [1 + ρ - exp((M_r/2M_t)·(η²/τ_n)·ρ²/(1+ρ)²)]^{-M_r η}
///
/// SNR exponents M_t·η and M_r·η respectively. The bracketed base must
/// stay positive; it goes nonpositive when the delay is too small for
/// the large-array approximation, which is a domain error.
pub fn distortion_gauss(
    regime: GaussRegime,
    mt: usize,
    mr: usize,
    rho: f64,
    eta: f64,
    tau_n: f64,
) -> Result<f64, Error> {
    check_antennas(mt, mr, rho)?;
    if !(eta > 0.0) || !(tau_n > 0.0) {
        return Err(GaussApproxError::OutsideValidity(format!(
            "eta and tau_n must be positive, got eta={eta}, tau_n={tau_n}"
        ))
        .into());
    }
    let mtf = mt as f64;
    let mrf = mr as f64;
    let (base, order) = match regime {
        GaussRegime::LargeMrFixedMt => {
            let b = 1.0 + mrf * rho / mtf - ((mtf / (2.0 * mrf)) * eta * eta / tau_n).exp();
            (b, mtf * eta)
        }
        GaussRegime::LargeMtFixedMr => {
            let snr_term = rho * rho / ((1.0 + rho) * (1.0 + rho));
            let b = 1.0 + rho - ((mrf / (2.0 * mtf)) * (eta * eta / tau_n) * snr_term).exp();
            (b, mrf * eta)
        }
        GaussRegime::LargeBothFixedBeta { beta } => {
            return Err(GaussApproxError::UnsupportedRegime(format!(
                "distortion curve for fixed β = {beta} is not available; see exponent_gauss_regime3"
            ))
            .into())
        }
    };
    if !(base > 0.0) {
        return Err(GaussApproxError::OutsideValidity(format!(
            "bracket base {base} <= 0: delay too small for the Gaussian approximation"
        ))
        .into());
    }
    Ok(base.powf(-order))
}

/// SNR exponent in the both-dimensions-large regime: M_*·η, symmetric in
/// the antenna counts.
pub fn exponent_gauss_regime3(mt: usize, mr: usize, eta: f64) -> f64 {
    mt.min(mr) as f64 * eta
}

fn check_antennas(mt: usize, mr: usize, rho: f64) -> Result<(), Error> {
    if mt < 1 || mr < 1 {
        return Err(GaussApproxError::OutsideValidity(format!(
            "antenna counts must be >= 1, got {mt}×{mr}"
        ))
        .into());
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(GaussApproxError::OutsideValidity(format!("rho must be > 0, got {rho}")).into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSpec;
    use crate::effcap::effective_capacity_mc_detailed;
    use approx::assert_relative_eq;

    fn qos(theta: f64, eta: f64) -> QosSpec {
        QosSpec::new(theta, 1e5, 2e-3, eta).unwrap()
    }

    #[test]
    fn moments_arithmetic() {
        // regime 1: 2×64 at ρ=10 -> (2 ln 321, 2/64)
        let (m, v) = gauss_moments(GaussRegime::LargeMrFixedMt, 2, 64, 10.0).unwrap();
        assert_relative_eq!(m, 2.0 * 321f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(v, 2.0 / 64.0, max_relative = 1e-12);
        // regime 2: 64×2 at ρ=10 -> (2 ln 11, (2/64)(100/121))
        let (m2, v2) = gauss_moments(GaussRegime::LargeMtFixedMr, 64, 2, 10.0).unwrap();
        assert_relative_eq!(m2, 2.0 * 11f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(v2, (2.0 / 64.0) * (100.0 / 121.0), max_relative = 1e-12);
    }

    #[test]
    fn channel_hardening_kills_variance() {
        let (_, v64) = gauss_moments(GaussRegime::LargeMrFixedMt, 2, 64, 10.0).unwrap();
        let (_, v512) = gauss_moments(GaussRegime::LargeMrFixedMt, 2, 512, 10.0).unwrap();
        assert!(v512 < v64 / 7.0);
        let (_, w64) = gauss_moments(GaussRegime::LargeMtFixedMr, 64, 2, 10.0).unwrap();
        let (_, w512) = gauss_moments(GaussRegime::LargeMtFixedMr, 512, 2, 10.0).unwrap();
        assert!(w512 < w64 / 7.0);
    }

    #[test]
    fn regime3_moments_unsupported() {
        assert!(matches!(
            gauss_moments(GaussRegime::LargeBothFixedBeta { beta: 2.0 }, 8, 16, 10.0),
            Err(Error::GaussApprox(GaussApproxError::UnsupportedRegime(_)))
        ));
        assert!(distortion_gauss(GaussRegime::LargeBothFixedBeta { beta: 2.0 }, 8, 16, 10.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn effcap_gauss_theta_limit_and_value() {
        // θ→0 limit is the per-sample ergodic capacity η·μ
        let (mean, _) = gauss_moments(GaussRegime::LargeMrFixedMt, 2, 64, 10.0).unwrap();
        let ec0 = effcap_gauss(GaussRegime::LargeMrFixedMt, 2, 64, 10.0, &qos(1e-12, 1.0)).unwrap();
        assert_relative_eq!(ec0, mean, max_relative = 1e-9);
        // arithmetic value at θ = 1e-3, K = 200, η = 1
        let ec = effcap_gauss(GaussRegime::LargeMrFixedMt, 2, 64, 10.0, &qos(1e-3, 1.0)).unwrap();
        assert_relative_eq!(
            ec,
            2.0 * 321f64.ln() - 0.5 * 0.2 * (2.0 / 64.0),
            max_relative = 1e-12
        );
        // nonincreasing in θ
        let ec_hi = effcap_gauss(GaussRegime::LargeMrFixedMt, 2, 64, 10.0, &qos(1e-2, 1.0)).unwrap();
        assert!(ec_hi < ec && ec < ec0);
    }

    #[test]
    fn effcap_gauss_tracks_monte_carlo() {
        // CLT accuracy envelope at M_r/M_t = 32: within 3% of the MC
        // estimate at θK = 1.
        let channel = ChannelSpec::new(2, 64, 10.0).unwrap();
        let q = qos(1.0 / 200.0, 1.0);
        let mc = effective_capacity_mc_detailed(&channel, &q, 60_000, 21).unwrap();
        let gauss = effcap_gauss(GaussRegime::LargeMrFixedMt, 2, 64, 10.0, &q).unwrap();
        let mc_per_sample = mc.value / 200.0;
        let rel = (gauss - mc_per_sample).abs() / mc_per_sample;
        assert!(rel <= 0.03, "gauss={gauss} mc={mc_per_sample} rel={rel}");
    }

    #[test]
    fn distortion_gauss_large_delay_asymptote() {
        // τ_n → ∞: exp term → 1, base → M_r ρ/M_t
        let d = distortion_gauss(GaussRegime::LargeMrFixedMt, 2, 64, 10.0, 1.0, 1e9).unwrap();
        assert_relative_eq!(d, (320.0f64).powf(-2.0), max_relative = 1e-6);
    }

    #[test]
    fn distortion_gauss_snr_exponent() {
        // slope of the regime-1 curve over 30-60 dB is M_t·η
        for eta in [1.0, 2.0] {
            let fit = crate::exponent::fit_exponent(
                |rho| distortion_gauss(GaussRegime::LargeMrFixedMt, 2, 64, rho, eta, 2.0),
                (30.0, 60.0),
                7,
                0,
            )
            .unwrap();
            assert!(
                (fit.slope - 2.0 * eta).abs() < 0.1,
                "eta={eta}: slope={}",
                fit.slope
            );
        }
        // regime 2 exponent is M_r·η
        let fit2 = crate::exponent::fit_exponent(
            |rho| distortion_gauss(GaussRegime::LargeMtFixedMr, 64, 2, rho, 1.0, 2.0),
            (30.0, 60.0),
            7,
            0,
        )
        .unwrap();
        assert!((fit2.slope - 2.0).abs() < 0.1, "slope={}", fit2.slope);
    }

    #[test]
    fn distortion_gauss_base_guard() {
        // tiny delay pushes the exp term past the SNR term
        assert!(matches!(
            distortion_gauss(GaussRegime::LargeMrFixedMt, 2, 4, 0.5, 2.0, 0.5),
            Err(Error::GaussApprox(GaussApproxError::OutsideValidity(_)))
        ));
    }

    #[test]
    fn distortion_gauss_upper_bounds_d_infinite_within_clt_envelope() {
        // The construction upper-bounds the Gaussian-approximated curve,
        // but its mean M_t·ln(1+M_r ρ/M_t) overshoots the exact
        // E[ln det] by ~M_t/(2M_r) relative, so against the exact D_∞ it
        // can undershoot by up to the module's 3% CLT envelope.
        let channel = ChannelSpec::new(2, 64, 10.0).unwrap();
        let d_inf = crate::distortion::d_infinite(&channel, 1.0).unwrap();
        for tau_n in [1.0, 2.0, 5.0, 50.0] {
            let d = distortion_gauss(GaussRegime::LargeMrFixedMt, 2, 64, 10.0, 1.0, tau_n).unwrap();
            // per-use envelope 3%, distortion order M_t·η = 2
            assert!(
                d >= d_inf * 0.97f64.powi(2),
                "tau_n={tau_n}: gauss={d} d_inf={d_inf}"
            );
        }
        // Against the approximation's own infinite-delay floor
        // (M_r ρ/M_t)^{-M_t η} the ordering is strict.
        let own_floor = (64.0f64 * 10.0 / 2.0).powf(-2.0);
        for tau_n in [1.0, 2.0, 5.0, 50.0] {
            let d = distortion_gauss(GaussRegime::LargeMrFixedMt, 2, 64, 10.0, 1.0, tau_n).unwrap();
            assert!(d > own_floor, "tau_n={tau_n}");
        }
    }

    #[test]
    fn regime3_exponent() {
        assert_relative_eq!(exponent_gauss_regime3(4, 8, 2.0), 8.0);
        assert_relative_eq!(exponent_gauss_regime3(8, 4, 2.0), 8.0);
        assert_relative_eq!(exponent_gauss_regime3(1, 1, 0.0), 0.0);
    }
}
