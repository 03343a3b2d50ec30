//! Effective capacity of the block-fading service process and the
//! QoS-exponent bookkeeping tying queue decay to buffer delay.
//!
//! For an i.i.d. per-frame capacity R[t] the effective capacity is the
//! normalized log-MGF
//!
//!   E_C(θ) = -(1/θ)·ln E[e^{-θ R[t]}]   (nats per frame),
//!
//! the largest constant arrival rate whose stationary queue tail decays
//! at least as fast as e^{-θB}. Balancing the quantizer exponent against
//! the overflow exponent fixes θ = 1/(B_w·τ) for a delay budget τ.

use rayon::prelude::*;

use crate::channel::{sample_channel_gain, trial_rng, ChannelSpec};
use crate::distortion::log_det_moment;
use crate::{mutual_information, Error};

/// Errors specific to effective-capacity estimation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EffCapError {
    #[error("invalid QoS parameter: {0}")]
    InvalidQos(String),
    #[error("need at least 2 Monte Carlo trials, got {0}")]
    InsufficientTrials(usize),
    #[error("effective-capacity inversion failed: {0}")]
    InversionFailed(String),
}

/// QoS configuration: queue decay exponent θ (per nat), source frame
/// geometry, and the bandwidth ratio η (channel uses per source sample).
///
/// The delay budget is slaved to θ through τ = 1/(B_w·θ), equivalently
/// τ_n = τ/T_f = 1/(K·θ) frames with K = T_f·B_w samples per frame.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QosSpec {
    theta: f64,
    source_bandwidth_hz: f64,
    frame_duration_s: f64,
    samples_per_frame: usize,
    eta: f64,
}

impl QosSpec {
    pub fn new(
        theta: f64,
        source_bandwidth_hz: f64,
        frame_duration_s: f64,
        eta: f64,
    ) -> Result<Self, EffCapError> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(EffCapError::InvalidQos(format!("theta must be > 0, got {theta}")));
        }
        if !(source_bandwidth_hz > 0.0) || !(frame_duration_s > 0.0) {
            return Err(EffCapError::InvalidQos(
                "source bandwidth and frame duration must be positive".into(),
            ));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(EffCapError::InvalidQos(format!("eta must be > 0, got {eta}")));
        }
        let k = (frame_duration_s * source_bandwidth_hz).round();
        if !(k >= 1.0) || !k.is_finite() {
            return Err(EffCapError::InvalidQos(format!(
                "samples per frame rounds to {k}; need at least 1"
            )));
        }
        Ok(Self {
            theta,
            source_bandwidth_hz,
            frame_duration_s,
            samples_per_frame: k as usize,
            eta,
        })
    }

    /// Exponent-balanced spec for a delay budget in seconds:
    /// θ = 1/(B_w·delay).
    pub fn balanced(
        source_bandwidth_hz: f64,
        frame_duration_s: f64,
        delay_s: f64,
        eta: f64,
    ) -> Result<Self, EffCapError> {
        if !(delay_s > 0.0) {
            return Err(EffCapError::InvalidQos(format!("delay must be > 0, got {delay_s}")));
        }
        let theta = balance_exponents(source_bandwidth_hz, delay_s);
        Self::new(theta, source_bandwidth_hz, frame_duration_s, eta)
    }

    /// Spec for a normalized delay of `tau_n` frames: θ = 1/(K·τ_n).
    pub fn from_normalized_delay(
        source_bandwidth_hz: f64,
        frame_duration_s: f64,
        tau_n: f64,
        eta: f64,
    ) -> Result<Self, EffCapError> {
        if !(tau_n > 0.0) {
            return Err(EffCapError::InvalidQos(format!("tau_n must be > 0, got {tau_n}")));
        }
        let k = (frame_duration_s * source_bandwidth_hz).round();
        Self::new(1.0 / (k * tau_n), source_bandwidth_hz, frame_duration_s, eta)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Same QoS geometry with a different queue exponent.
    pub fn with_theta(&self, theta: f64) -> Result<Self, EffCapError> {
        Self::new(theta, self.source_bandwidth_hz, self.frame_duration_s, self.eta)
    }

    pub fn source_bandwidth_hz(&self) -> f64 {
        self.source_bandwidth_hz
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_duration_s
    }

    /// K = T_f·B_w source samples per frame.
    pub fn samples_per_frame(&self) -> usize {
        self.samples_per_frame
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// τ_n = 1/(K·θ) in frames.
    pub fn normalized_delay(&self) -> f64 {
        1.0 / (self.samples_per_frame as f64 * self.theta)
    }

    /// τ = 1/(B_w·θ) in seconds.
    pub fn delay_s(&self) -> f64 {
        1.0 / (self.source_bandwidth_hz * self.theta)
    }
}

/// Equal-exponent rule θ = 1/(B_w·τ): the quantizer distortion exponent
/// and the queue-overflow exponent of the end-to-end bound coincide.
pub fn balance_exponents(source_bandwidth_hz: f64, delay_s: f64) -> f64 {
    1.0 / (source_bandwidth_hz * delay_s)
}

/// Monte Carlo effective-capacity estimate with its standard error.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EffCapEstimate {
    /// E_C(θ) in nats per frame.
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_error: f64,
    /// Plain average of the sampled per-frame rates (the θ→0 limit).
    pub mean_rate: f64,
}

/// Log-sum-exp accumulator state: (running max, Σe^{x-max}, Σe^{2(x-max)}).
#[derive(Clone, Copy)]
struct LseState {
    max: f64,
    sum: f64,
    sum_sq: f64,
    count: u64,
    rate_sum: f64,
}

impl LseState {
    fn empty() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0, sum_sq: 0.0, count: 0, rate_sum: 0.0 }
    }

    fn push(&mut self, x: f64, rate: f64) {
        if x > self.max {
            let shift = (self.max - x).exp(); // 0 on the first sample
            self.sum = self.sum * shift + 1.0;
            self.sum_sq = self.sum_sq * shift * shift + 1.0;
            self.max = x;
        } else {
            let e = (x - self.max).exp();
            self.sum += e;
            self.sum_sq += e * e;
        }
        self.count += 1;
        self.rate_sum += rate;
    }

    fn merge(a: Self, b: Self) -> Self {
        if b.count == 0 {
            return a;
        }
        if a.count == 0 {
            return b;
        }
        let m = a.max.max(b.max);
        let ea = (a.max - m).exp();
        let eb = (b.max - m).exp();
        Self {
            max: m,
            sum: a.sum * ea + b.sum * eb,
            sum_sq: a.sum_sq * ea * ea + b.sum_sq * eb * eb,
            count: a.count + b.count,
            rate_sum: a.rate_sum + b.rate_sum,
        }
    }
}

/// Deterministic pairwise tree reduction over the per-batch states, so
/// the result depends on the batch grid only, never on thread timing.
fn reduce_pairwise(mut states: Vec<LseState>) -> LseState {
    if states.is_empty() {
        return LseState::empty();
    }
    while states.len() > 1 {
        states = states
            .chunks(2)
            .map(|c| if c.len() == 2 { LseState::merge(c[0], c[1]) } else { c[0] })
            .collect();
    }
    states[0]
}

const MC_BATCH: usize = 4096;

fn effcap_states(
    channel: &ChannelSpec,
    qos: &QosSpec,
    trials: usize,
    seed: u64,
) -> Result<LseState, Error> {
    if trials < 2 {
        return Err(EffCapError::InsufficientTrials(trials).into());
    }
    let theta = qos.theta();
    let eta = qos.eta();
    let k = qos.samples_per_frame();
    let n_batches = trials.div_ceil(MC_BATCH);
    let states: Vec<LseState> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = trial_rng(seed, b as u64);
            let lo = b * MC_BATCH;
            let hi = ((b + 1) * MC_BATCH).min(trials);
            let mut st = LseState::empty();
            for _ in lo..hi {
                let sample = sample_channel_gain(channel, &mut rng);
                let rate = mutual_information(channel, &sample, eta, k);
                st.push(-theta * rate, rate);
            }
            st
        })
        .collect();
    Ok(reduce_pairwise(states))
}

/// Monte Carlo effective capacity: -(1/θ)·ln[(1/n)Σ e^{-θR_i}] with
/// channel draws from `(seed, batch)` ChaCha8 streams. Evaluated through
/// log-sum-exp so large θR never underflows; by Jensen the result never
/// exceeds the empirical mean rate.
pub fn effective_capacity_mc(
    channel: &ChannelSpec,
    qos: &QosSpec,
    trials: usize,
    seed: u64,
) -> Result<f64, Error> {
    Ok(effective_capacity_mc_detailed(channel, qos, trials, seed)?.value)
}

/// As [`effective_capacity_mc`] but also reporting the delta-method
/// standard error and the mean sampled rate.
pub fn effective_capacity_mc_detailed(
    channel: &ChannelSpec,
    qos: &QosSpec,
    trials: usize,
    seed: u64,
) -> Result<EffCapEstimate, Error> {
    let st = effcap_states(channel, qos, trials, seed)?;
    Ok(estimate_from_state(st, qos.theta()))
}

fn estimate_from_state(st: LseState, theta: f64) -> EffCapEstimate {
    let n = st.count as f64;
    // ln mean = max + ln(sum) - ln n
    let log_mean = st.max + st.sum.ln() - n.ln();
    let value = -log_mean / theta;
    // Var(Y)/n with Y = e^{-θR}: second moment e^{2max}·sum_sq/n
    let mean = log_mean.exp();
    let second = (2.0 * st.max).exp() * st.sum_sq / n;
    let var = (second - mean * mean).max(0.0);
    let se_mean = (var / n).sqrt();
    EffCapEstimate {
        value,
        std_error: se_mean / (theta * mean),
        mean_rate: st.rate_sum / n,
    }
}

/// Effective capacity of an explicit list of per-frame rates (degenerate
/// or externally generated service processes).
pub fn effective_capacity_from_rates(rates: &[f64], theta: f64) -> Result<f64, Error> {
    if rates.len() < 2 {
        return Err(EffCapError::InsufficientTrials(rates.len()).into());
    }
    if !(theta > 0.0) {
        return Err(EffCapError::InvalidQos(format!("theta must be > 0, got {theta}")).into());
    }
    let mut st = LseState::empty();
    for &r in rates {
        st.push(-theta * r, r);
    }
    Ok(estimate_from_state(st, theta).value)
}

/// Effective capacity by quadrature: E[e^{-θR}] equals the Wishart
/// determinant moment E[det(I+(ρ/M_t)HH^H)^{-θKη}], so
/// E_C(θ) = -log_det_moment(θKη)/θ. Exact up to quadrature tolerance;
/// it is the large-deviation reference the Monte Carlo estimates and the
/// queue simulator are checked against.
pub fn effective_capacity_quadrature(channel: &ChannelSpec, qos: &QosSpec) -> Result<f64, Error> {
    let s = qos.theta() * qos.samples_per_frame() as f64 * qos.eta();
    Ok(-log_det_moment(channel, s)? / qos.theta())
}

/// Solve E_C(θ*) = `rate_per_frame` (nats/frame) for θ* by bisection.
///
/// E_C decreases from the ergodic capacity (θ→0) toward the essential
/// infimum of the rate (0 for Rayleigh fading), so a unique root exists
/// for any rate below ergodic capacity.
pub fn qos_exponent_for_rate(
    channel: &ChannelSpec,
    qos: &QosSpec,
    rate_per_frame: f64,
) -> Result<f64, Error> {
    if !(rate_per_frame > 0.0) {
        return Err(EffCapError::InversionFailed(format!(
            "target rate must be positive, got {rate_per_frame}"
        ))
        .into());
    }
    let ec_at = |theta: f64| -> Result<f64, Error> {
        let q = qos.with_theta(theta)?;
        effective_capacity_quadrature(channel, &q)
    };
    let mut lo = 1e-9;
    if ec_at(lo)? < rate_per_frame {
        return Err(EffCapError::InversionFailed(
            "target rate is at or above ergodic capacity".into(),
        )
        .into());
    }
    let mut hi = lo;
    for _ in 0..60 {
        hi *= 2.0;
        if ec_at(hi)? < rate_per_frame {
            break;
        }
        lo = hi;
    }
    if ec_at(hi)? >= rate_per_frame {
        return Err(EffCapError::InversionFailed("could not bracket the root".into()).into());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ec_at(mid)? >= rate_per_frame {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-9 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tandem end-to-end distortion bound
///
///   D_ee(R_s) <= exp(-R_s) + o1·κ·exp(-θ·B_w·R_s·τ)
///
/// with `rs` in nats per source sample, κ the buffer-nonempty constant,
/// and `o1` the tandem source/channel constant. The general form lets θ
/// and the delay budget vary independently; with the balanced choice
/// θ = 1/(B_w·τ) both exponents coincide and the bound collapses to
/// (1 + o1·κ)·e^{-rs}.
pub fn end_to_end_bound_with_delay(
    rs: f64,
    theta: f64,
    source_bandwidth_hz: f64,
    delay_s: f64,
    kappa: f64,
    o1: f64,
) -> f64 {
    (-rs).exp() + o1 * kappa * (-theta * source_bandwidth_hz * rs * delay_s).exp()
}

/// [`end_to_end_bound_with_delay`] with θ and τ both taken from `qos`
/// (which ties them by τ = 1/(B_w·θ), the balanced configuration).
pub fn end_to_end_bound(rs: f64, qos: &QosSpec, kappa: f64, o1: f64) -> f64 {
    end_to_end_bound_with_delay(
        rs,
        qos.theta(),
        qos.source_bandwidth_hz(),
        qos.delay_s(),
        kappa,
        o1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{integrate_semiinfinite, QuadratureSpec};
    use approx::assert_relative_eq;

    fn example1_qos(tau_n: f64) -> QosSpec {
        // 100 kHz source, 2 ms frames -> K = 200 samples/frame
        QosSpec::from_normalized_delay(1e5, 2e-3, tau_n, 1.0).unwrap()
    }

    #[test]
    fn qos_spec_geometry() {
        let q = example1_qos(5.0);
        assert_eq!(q.samples_per_frame(), 200);
        assert_relative_eq!(q.theta(), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(q.normalized_delay(), 5.0, max_relative = 1e-12);
        assert_relative_eq!(q.delay_s(), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn balance_exponents_examples() {
        // Example-1 parameters: 100 kHz bandwidth, 5 frames of 2 ms
        assert_relative_eq!(balance_exponents(100_000.0, 0.01), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(balance_exponents(1.0, 1.0), 1.0);
        // τ -> ∞ drives θ -> 0
        assert!(balance_exponents(100.0, 1e12) < 1e-13);
        // round trip: θ -> τ -> θ is the identity
        let theta = 0.0371;
        let tau = 1.0 / (123.0 * theta);
        assert_relative_eq!(balance_exponents(123.0, tau), theta, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_service_gives_rate_exactly() {
        // Pinned rates: the MGF is a point mass, E_C = R for any θ.
        let rates = vec![7.25; 100];
        for theta in [1e-4, 0.1, 5.0] {
            let ec = effective_capacity_from_rates(&rates, theta).unwrap();
            assert_relative_eq!(ec, 7.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn insufficient_trials_is_an_error() {
        assert!(effective_capacity_from_rates(&[1.0], 0.5).is_err());
        let channel = ChannelSpec::new(1, 1, 10.0).unwrap();
        let qos = example1_qos(5.0);
        assert!(effective_capacity_mc(&channel, &qos, 1, 0).is_err());
    }

    #[test]
    fn small_theta_limit_is_mean_rate() {
        let channel = ChannelSpec::new(1, 1, 10f64.powf(1.5)).unwrap();
        let qos = QosSpec::new(1e-6, 1e5, 2e-3, 2.0).unwrap();
        let est = effective_capacity_mc_detailed(&channel, &qos, 40_000, 11).unwrap();
        assert!(
            (est.value - est.mean_rate).abs() / est.mean_rate < 1e-3,
            "E_C={} mean={}",
            est.value,
            est.mean_rate
        );
    }

    #[test]
    fn jensen_upper_bound_by_mean_rate() {
        let channel = ChannelSpec::new(2, 2, 10.0).unwrap();
        let qos = example1_qos(2.0);
        let est = effective_capacity_mc_detailed(&channel, &qos, 30_000, 3).unwrap();
        assert!(est.value <= est.mean_rate);
    }

    #[test]
    fn mc_matches_scalar_quadrature_oracle() {
        // SISO at 10^{1.5}: E[e^{-θR}] = ∫ (1+ρx)^{-θKη} e^{-x} dx
        let rho = 10f64.powf(1.5);
        let channel = ChannelSpec::new(1, 1, rho).unwrap();
        let qos = QosSpec::new(1.0 / (200.0 * 5.0), 1e5, 2e-3, 2.0).unwrap();
        let s = qos.theta() * 200.0 * 2.0;
        let oracle = -integrate_semiinfinite(
            |x| (-s * (rho * x).ln_1p()).exp() * (-x).exp(),
            QuadratureSpec::default(),
        )
        .unwrap()
        .ln()
            / qos.theta();
        let est = effective_capacity_mc_detailed(&channel, &qos, 400_000, 17).unwrap();
        assert!(
            (est.value - oracle).abs() <= 3.0 * est.std_error,
            "mc={} oracle={} se={}",
            est.value,
            est.std_error.max(oracle - est.value),
            est.std_error
        );
        // and the quadrature entry point agrees with the hand-built oracle
        let quad = effective_capacity_quadrature(&channel, &qos).unwrap();
        assert_relative_eq!(quad, oracle, max_relative = 1e-8);
    }

    #[test]
    fn mc_deterministic_across_thread_counts() {
        // The pairwise reduction depends only on the batch grid; two runs
        // under whatever thread pool rayon picked must agree bit-for-bit.
        let channel = ChannelSpec::new(2, 3, 5.0).unwrap();
        let qos = example1_qos(2.0);
        let a = effective_capacity_mc(&channel, &qos, 50_000, 99).unwrap();
        let b = effective_capacity_mc(&channel, &qos, 50_000, 99).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn effcap_nonincreasing_in_theta_and_below_ergodic() {
        // Common random numbers across the θ grid.
        let channel = ChannelSpec::new(1, 1, 10.0).unwrap();
        let thetas = [1e-4, 1e-3, 1e-2, 5e-2];
        let mut prev = f64::INFINITY;
        let qos0 = QosSpec::new(1e-6, 1e5, 2e-3, 1.0).unwrap();
        let erg = effective_capacity_mc(&channel, &qos0, 60_000, 5).unwrap();
        let mut gaps = Vec::new();
        for theta in thetas {
            let qos = QosSpec::new(theta, 1e5, 2e-3, 1.0).unwrap();
            let ec = effective_capacity_mc(&channel, &qos, 60_000, 5).unwrap();
            assert!(ec < prev, "E_C not decreasing at theta={theta}");
            assert!(ec <= erg + 1e-9, "E_C above ergodic at theta={theta}");
            gaps.push(erg - ec);
            prev = ec;
        }
        // gap shrinks toward zero as θ -> 0 (three-point trend)
        assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2]);
    }

    #[test]
    fn end_to_end_bound_values() {
        let qos = example1_qos(5.0);
        // rs = 0: bound is 1 + o1·κ
        assert_relative_eq!(end_to_end_bound(0.0, &qos, 0.7, 2.0), 1.0 + 1.4, max_relative = 1e-12);
        // balanced θ makes both exponents coincide: (1+o1κ)e^{-rs}
        let rs = 6.003;
        assert_relative_eq!(
            end_to_end_bound(rs, &qos, 1.0, 1.0),
            2.0 * (-rs).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(end_to_end_bound(rs, &qos, 1.0, 1.0), 0.00493, epsilon = 2e-5);
        // θ -> ∞ at fixed delay kills the overflow term
        let v = end_to_end_bound_with_delay(rs, 1e9, 1e5, 0.01, 1.0, 1.0);
        assert_relative_eq!(v, (-rs).exp(), max_relative = 1e-12);
    }

    #[test]
    fn exponent_inversion_recovers_rate() {
        let channel = ChannelSpec::new(1, 1, 10f64.powf(1.5)).unwrap();
        let qos = example1_qos(5.0);
        let erg_per_frame = 200.0 * crate::distortion::ergodic_capacity_m1(10f64.powf(1.5)).unwrap();
        let target = 0.9 * erg_per_frame;
        let theta_star = qos_exponent_for_rate(&channel, &qos, target).unwrap();
        let back = effective_capacity_quadrature(&channel, &qos.with_theta(theta_star).unwrap()).unwrap();
        assert_relative_eq!(back, target, max_relative = 1e-6);
        // above ergodic capacity there is no solution
        assert!(qos_exponent_for_rate(&channel, &qos, 1.01 * erg_per_frame).is_err());
    }
}
