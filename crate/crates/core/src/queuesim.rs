//! Monte Carlo oracle for the quantizer → buffer → channel pipeline.
//!
//! The buffer follows the Lindley recursion
//!
//!   Q_{t+1} = max(0, Q_t + K·r_s - R_t)
//!
//! with constant arrivals K·r_s nats per frame and the per-frame channel
//! capacity R_t as service. Stationary tail frequencies Pr{Q > B} are
//! fitted against κ·e^{-θB}, which large-deviation theory ties to the
//! effective capacity through K·r_s = E_C(θ*). Buffer levels convert to
//! queueing delay via delay = Q/(K·r_s) frames, so a delay budget of
//! τ_n frames corresponds to the threshold B = τ_n·K·r_s.
//!
//! All quantities are in nats; bit conversions belong to the caller.

use crate::channel::{sample_channel_gain, trial_rng, ChannelSpec};
use crate::effcap::QosSpec;
use crate::{mutual_information, Error};

/// Errors from queue simulation and tail fitting.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("insufficient tail data: {0}")]
    InsufficientTailData(String),
}

/// Configuration of one simulation run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub channel: ChannelSpec,
    pub qos: QosSpec,
    /// Constant quantizer rate in nats per source sample.
    pub rs: f64,
    /// Ascending buffer thresholds in nats.
    pub buffer_thresholds: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    /// Frames discarded before tallying; defaults to 10% of `frames`
    /// with a floor of 10⁴.
    pub warmup_frames: Option<usize>,
    /// Distortion charged to a frame violating the delay bound; 1 is the
    /// variance of the unit source (reconstruction by the mean).
    pub late_penalty: f64,
}

impl SimConfig {
    pub fn new(
        channel: ChannelSpec,
        qos: QosSpec,
        rs: f64,
        buffer_thresholds: Vec<f64>,
        frames: usize,
        seed: u64,
    ) -> Result<Self, SimError> {
        let cfg = Self {
            channel,
            qos,
            rs,
            buffer_thresholds,
            frames,
            seed,
            warmup_frames: None,
            late_penalty: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.rs > 0.0) || !self.rs.is_finite() {
            return Err(SimError::InvalidConfig(format!("rs must be > 0, got {}", self.rs)));
        }
        if self.buffer_thresholds.is_empty() {
            return Err(SimError::InvalidConfig("need at least one buffer threshold".into()));
        }
        if self.buffer_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::InvalidConfig("thresholds must be strictly ascending".into()));
        }
        if self.buffer_thresholds[0] < 0.0 {
            return Err(SimError::InvalidConfig("thresholds must be nonnegative".into()));
        }
        if self.frames < 100 {
            return Err(SimError::InvalidConfig(format!(
                "need at least 100 frames, got {}",
                self.frames
            )));
        }
        if !(self.late_penalty >= 0.0) {
            return Err(SimError::InvalidConfig("late_penalty must be >= 0".into()));
        }
        Ok(())
    }

    /// K·r_s nats entering the buffer per frame.
    pub fn arrival_per_frame(&self) -> f64 {
        self.qos.samples_per_frame() as f64 * self.rs
    }

    fn effective_warmup(&self) -> usize {
        self.warmup_frames.unwrap_or((self.frames / 10).max(10_000))
    }
}

/// Empirical tail of the stationary queue at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OverflowPoint {
    /// Threshold B in nats.
    pub threshold: f64,
    /// Tail frequency Pr{Q > B}.
    pub probability: f64,
    /// Binomial standard error of `probability` (treats frames as
    /// independent, so it understates the true error for correlated
    /// queues).
    pub std_error: f64,
    /// Raw number of frames with Q > B.
    pub hits: u64,
}

/// Everything a simulation run measures.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimResult {
    pub overflow: Vec<OverflowPoint>,
    /// Slope of the fitted log-tail, if enough thresholds qualified.
    pub fitted_theta: Option<f64>,
    /// Intercept of the fitted log-tail (≈ Pr{Q > 0}).
    pub kappa_hat: Option<f64>,
    /// Average per-sample distortion with late frames charged
    /// `late_penalty`, against the delay bound τ_n from the QoS spec.
    pub empirical_distortion: f64,
    pub distortion_std_error: f64,
    /// Empirical Pr{Q > 0}.
    pub prob_nonempty: f64,
    pub mean_queue: f64,
    pub frames_used: u64,
    pub warmup_frames: u64,
    /// Arrival rate at or above the service mean, or visible drift in
    /// the final 10% of frames.
    pub stability_warning: bool,
    /// First- and second-half tail estimates agree within a factor 2 at
    /// every threshold with enough hits.
    pub stationarity_ok: bool,
    pub seed: u64,
}

/// Raw tallies from one Lindley pass.
#[derive(Debug, Clone)]
pub struct LindleyStats {
    pub threshold_hits: Vec<u64>,
    pub first_half_hits: Vec<u64>,
    pub nonempty_hits: u64,
    pub late_hits: u64,
    pub queue_sum: f64,
    pub frames: u64,
    pub queue_at_90pct: f64,
    pub queue_final: f64,
}

/// Run the Lindley recursion over an explicit service stream.
///
/// `late_threshold` is the queue level (nats) above which a frame counts
/// as violating the delay bound. Tail hits are counted on the
/// post-update queue after discarding `warmup` frames.
pub fn run_lindley<I: Iterator<Item = f64>>(
    arrival_per_frame: f64,
    services: I,
    thresholds: &[f64],
    warmup: usize,
    late_threshold: f64,
) -> LindleyStats {
    let mut q = 0.0f64;
    let mut stats = LindleyStats {
        threshold_hits: vec![0; thresholds.len()],
        first_half_hits: vec![0; thresholds.len()],
        nonempty_hits: 0,
        late_hits: 0,
        queue_sum: 0.0,
        frames: 0,
        queue_at_90pct: 0.0,
        queue_final: 0.0,
    };
    let mut t = 0usize;
    let mut measured = 0u64;
    let mut total_measured_guess = 0u64;
    let mut services = services.peekable();
    // First pass does not know the stream length; callers pass sized
    // iterators, so count as we go and fix the half split afterwards.
    let mut post_warmup_queues_half_marker = Vec::new();
    while let Some(r) = services.next() {
        q = (q + arrival_per_frame - r).max(0.0);
        if t >= warmup {
            measured += 1;
            stats.queue_sum += q;
            if q > 0.0 {
                stats.nonempty_hits += 1;
            }
            if q > late_threshold {
                stats.late_hits += 1;
            }
            for (i, &b) in thresholds.iter().enumerate() {
                if q > b {
                    stats.threshold_hits[i] += 1;
                }
            }
            post_warmup_queues_half_marker.push(q);
        }
        t += 1;
        if services.peek().is_none() {
            stats.queue_final = q;
        }
        total_measured_guess += 1;
    }
    let _ = total_measured_guess;
    stats.frames = measured;
    // First-half tallies and the 90% checkpoint from the recorded path.
    let half = post_warmup_queues_half_marker.len() / 2;
    for &qv in &post_warmup_queues_half_marker[..half] {
        for (i, &b) in thresholds.iter().enumerate() {
            if qv > b {
                stats.first_half_hits[i] += 1;
            }
        }
    }
    let idx90 = (post_warmup_queues_half_marker.len() * 9) / 10;
    stats.queue_at_90pct = post_warmup_queues_half_marker.get(idx90).copied().unwrap_or(q);
    stats
}

/// Simulate the buffered transmission and measure overflow tails, the
/// fitted decay exponent, and the empirical end-to-end distortion at the
/// QoS delay bound. Deterministic given (config, seed): the service
/// stream comes from one ChaCha8 stream and the recursion is sequential.
pub fn simulate(config: &SimConfig) -> Result<SimResult, Error> {
    config.validate()?;
    let warmup = config.effective_warmup();
    let arrival = config.arrival_per_frame();
    let eta = config.qos.eta();
    let k = config.qos.samples_per_frame();
    let late_threshold = config.qos.normalized_delay() * arrival;

    let mut rng = trial_rng(config.seed, 0);
    let channel = config.channel;
    let total = warmup + config.frames;
    let services = (0..total).map(move |_| {
        let s = sample_channel_gain(&channel, &mut rng);
        mutual_information(&channel, &s, eta, k)
    });
    let stats = run_lindley(arrival, services, &config.buffer_thresholds, warmup, late_threshold);

    // Stability: arrival must sit below the mean service rate, and the
    // final 10% of the path must not drift upward.
    let mean_service = estimate_mean_service(&config.channel, eta, k, config.seed);
    let drift = (stats.queue_final - stats.queue_at_90pct)
        / ((stats.frames as f64 * 0.1).max(1.0));
    let mut stability_warning = false;
    if arrival >= mean_service {
        log::warn!(
            "arrival rate {arrival:.3} nats/frame >= estimated mean service {mean_service:.3}; queue is unstable"
        );
        stability_warning = true;
    }
    if drift > 0.01 * arrival.max(1.0) {
        log::warn!("queue drifts by {drift:.3} nats/frame over the final 10% of the run");
        stability_warning = true;
    }

    let n = stats.frames as f64;
    let overflow: Vec<OverflowPoint> = config
        .buffer_thresholds
        .iter()
        .zip(&stats.threshold_hits)
        .map(|(&b, &h)| {
            let p = h as f64 / n;
            OverflowPoint {
                threshold: b,
                probability: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                hits: h,
            }
        })
        .collect();

    // Stationarity: each well-populated threshold must show consistent
    // first-half vs second-half frequencies (within 2×).
    let mut stationarity_ok = true;
    for (i, pt) in overflow.iter().enumerate() {
        if pt.hits < 100 {
            continue;
        }
        let first = stats.first_half_hits[i] as f64 / (n / 2.0).max(1.0);
        let second = (pt.hits - stats.first_half_hits[i]) as f64 / (n - (n / 2.0).floor()).max(1.0);
        if first <= 0.0 || second <= 0.0 {
            stationarity_ok = false;
            continue;
        }
        let ratio = first / second;
        if !(0.5..=2.0).contains(&ratio) {
            stationarity_ok = false;
        }
    }

    let p_late = stats.late_hits as f64 / n;
    let on_time = (-config.rs).exp();
    let empirical_distortion = (1.0 - p_late) * on_time + p_late * config.late_penalty;
    let distortion_std_error =
        (config.late_penalty - on_time).abs() * (p_late * (1.0 - p_late) / n).sqrt();

    let mut result = SimResult {
        overflow,
        fitted_theta: None,
        kappa_hat: None,
        empirical_distortion,
        distortion_std_error,
        prob_nonempty: stats.nonempty_hits as f64 / n,
        mean_queue: stats.queue_sum / n,
        frames_used: stats.frames,
        warmup_frames: warmup as u64,
        stability_warning,
        stationarity_ok,
        seed: config.seed,
    };
    if let Ok((theta, kappa)) = fitted_overflow_exponent(&result) {
        result.fitted_theta = Some(theta);
        result.kappa_hat = Some(kappa);
    }
    Ok(result)
}

fn estimate_mean_service(channel: &ChannelSpec, eta: f64, k: usize, seed: u64) -> f64 {
    // Dedicated stream; cheap 2000-draw mean, enough for a warning check.
    let mut rng = trial_rng(seed, u64::MAX);
    let n = 2000;
    (0..n)
        .map(|_| {
            let s = sample_channel_gain(channel, &mut rng);
            mutual_information(channel, &s, eta, k)
        })
        .sum::<f64>()
        / n as f64
}

/// Least-squares fit of ln Pr{Q > B} = ln κ - θB over the thresholds
/// with at least 50 tail hits. Needs four such thresholds.
pub fn fitted_overflow_exponent(result: &SimResult) -> Result<(f64, f64), Error> {
    let pts: Vec<(f64, f64)> = result
        .overflow
        .iter()
        .filter(|p| p.hits >= 50)
        .map(|p| (p.threshold, p.probability.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(SimError::InsufficientTailData(format!(
            "need >= 4 thresholds with >= 50 hits, have {}",
            pts.len()
        ))
        .into());
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx <= 0.0 {
        return Err(SimError::InsufficientTailData("thresholds are degenerate".into()).into());
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    Ok((-slope, intercept.exp()))
}

/// R² of the log-tail fit over the qualifying thresholds.
pub fn log_tail_r_squared(result: &SimResult) -> Result<f64, Error> {
    let (theta, kappa) = fitted_overflow_exponent(result)?;
    let pts: Vec<(f64, f64)> = result
        .overflow
        .iter()
        .filter(|p| p.hits >= 50)
        .map(|p| (p.threshold, p.probability.ln()))
        .collect();
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (kappa.ln() - theta * p.0);
            r * r
        })
        .sum();
    Ok(1.0 - ss_res / syy)
}

/// Rerun the recursion and average the per-sample distortion with the
/// delay bound expressed in frames: on-time frames contribute e^{-r_s},
/// late frames contribute the configured penalty.
pub fn empirical_end_to_end_distortion(
    config: &SimConfig,
    delay_bound_frames: f64,
) -> Result<f64, Error> {
    if !(delay_bound_frames > 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "delay bound must be > 0 frames, got {delay_bound_frames}"
        ))
        .into());
    }
    config.validate()?;
    let warmup = config.effective_warmup();
    let arrival = config.arrival_per_frame();
    let eta = config.qos.eta();
    let k = config.qos.samples_per_frame();
    let late_threshold = delay_bound_frames * arrival;
    let mut rng = trial_rng(config.seed, 0);
    let channel = config.channel;
    let total = warmup + config.frames;
    let services = (0..total).map(move |_| {
        let s = sample_channel_gain(&channel, &mut rng);
        mutual_information(&channel, &s, eta, k)
    });
    let stats = run_lindley(arrival, services, &config.buffer_thresholds, warmup, late_threshold);
    let p_late = stats.late_hits as f64 / stats.frames as f64;
    Ok((1.0 - p_late) * (-config.rs).exp() + p_late * config.late_penalty)
}

/// Draw `frames` service values from the channel (testing hook mirroring
/// the simulator's stream layout).
pub fn service_stream(
    channel: &ChannelSpec,
    eta: f64,
    k: usize,
    seed: u64,
    frames: usize,
) -> Vec<f64> {
    let mut rng = trial_rng(seed, 0);
    (0..frames)
        .map(|_| {
            let s = sample_channel_gain(channel, &mut rng);
            mutual_information(channel, &s, eta, k)
        })
        .collect()
}
