//! distdelay: distortion/delay analysis of a Gaussian source over
//! buffered block-fading channels.
//!
//! Subcommands sweep the closed-form distortion bounds (`curve`), emit
//! SNR-exponent profiles (`exponent`), run the Monte Carlo queue oracle
//! (`simulate`), and regenerate the data grids behind the reference
//! figures (`reproduce-figure`). Outputs are CSV (with a commented
//! config header) or JSON under the `dd/1` schema; every file embeds the
//! fully resolved configuration and library version.

mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distdelay::channel::ChannelSpec;
use distdelay::distortion::{
    d_delay_mimo, d_delay_simo, d_delay_siso, d_infinite, d_zero, DistortionMethod,
};
use distdelay::effcap::{end_to_end_bound, qos_exponent_for_rate, QosSpec};
use distdelay::exponent::{exponent_buffered, fit_exponent};
use distdelay::queuesim::{
    fitted_overflow_exponent, log_tail_r_squared, run_lindley, simulate, OverflowPoint, SimConfig,
    SimResult,
};
use output::{fmt_float, write_csv, write_json, writer_for, SCHEMA};

/// CLI-level error with an exit-code class and a machine-readable record.
#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self { kind: "invalid_parameter", message: message.into() }
    }

    fn computation(message: impl Into<String>) -> Self {
        Self { kind: "computation_failed", message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { kind: "io", message: message.into() }
    }

    fn from_io(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        if self.kind == "invalid_parameter" { 2 } else { 1 }
    }
}

impl From<distdelay::Error> for CliError {
    fn from(e: distdelay::Error) -> Self {
        Self::computation(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "distdelay",
    version,
    about = "Distortion/delay tradeoff of a Gaussian source over buffered fading channels",
    long_about = "Computes closed-form distortion bounds, SNR exponents, and Monte Carlo \
queue statistics for a unit-variance complex Gaussian source transmitted through a buffer \
over an i.i.d. Rayleigh block-fading channel.\n\nAll rates are in nats unless --bits is \
given. The environment variable DD_QUAD_TOL overrides the default quadrature relative \
tolerance (1e-9)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ChannelArgs {
    /// Transmit antennas M_t
    #[arg(long, default_value_t = 1)]
    mt: usize,
    /// Receive antennas M_r
    #[arg(long, default_value_t = 1)]
    mr: usize,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Distortion vs SNR for a list of delays (zero, finite τ_n, inf)
    Curve {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Bandwidth ratio η (channel uses per source sample)
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// SNR grid in dB as lo:hi:steps (or a single value)
        #[arg(long, value_parser = parse_snr_range, default_value = "0:30:31")]
        snr_db: SnrRange,
        /// Comma-separated normalized delays: numbers, "zero", "inf"
        #[arg(long, value_parser = parse_delays, default_value = "inf")]
        delay: Delays,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// SNR-exponent profiles α(η) per delay
    Exponent {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Comma-separated finite normalized delays τ_n
        #[arg(long, value_parser = parse_delays, default_value = "1")]
        delay: Delays,
        /// Bandwidth-ratio grid lo:hi:steps
        #[arg(long, value_parser = parse_snr_range, default_value = "0:8:33")]
        eta_grid: SnrRange,
        /// Also fit numerical slopes from the closed forms
        #[arg(long)]
        fit: bool,
        /// dB range for the slope fit as lo:hi:points
        #[arg(long, value_parser = parse_snr_range, default_value = "30:60:7")]
        snr_db: SnrRange,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo queue simulation (JSON output)
    Simulate {
        #[command(flatten)]
        channel: ChannelArgs,
        /// SNR in dB (single value)
        #[arg(long, value_parser = parse_snr_range, default_value = "15")]
        snr_db: SnrRange,
        /// Bandwidth ratio η
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Quantizer rate per source sample (nats; bits with --bits)
        #[arg(long)]
        rs: Option<f64>,
        /// Normalized delay τ_n in frames (sets θ = 1/(K·τ_n))
        #[arg(long, value_parser = parse_delays, default_value = "5")]
        delay: Delays,
        /// Ascending buffer thresholds (nats; bits with --bits);
        /// auto-placed from the predicted exponent when omitted
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Simulated frames after warmup
        #[arg(long, default_value_t = 1_000_000)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Buffer-nonempty constant κ of the analytic bound
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Tandem O(1) constant of the analytic bound
        #[arg(long, default_value_t = 1.0)]
        o1: f64,
        /// Source bandwidth B_w in Hz
        #[arg(long, default_value_t = 1e5)]
        bw_hz: f64,
        /// Frame duration T_f in seconds
        #[arg(long, default_value_t = 2e-3)]
        frame_s: f64,
        /// Interpret --rs and --thresholds in bits (converted by ln 2)
        #[arg(long)]
        bits: bool,
        /// Replace channel draws with a constant service (nats/frame)
        #[arg(long)]
        deterministic_service: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Emit the data grid behind a reference figure (CSV + params JSON)
    ReproduceFigure {
        /// Figure id: 2, 4, 5, 6, 7, or 8
        #[arg(long)]
        figure: u32,
        /// Directory for figure_<id>.csv and figure_<id>.params.json
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

/// lo:hi:steps grid (a bare number is a single-point grid).
#[derive(Debug, Clone, Copy)]
struct SnrRange {
    lo: f64,
    hi: f64,
    steps: usize,
}

impl SnrRange {
    fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.lo + step * i as f64).collect()
    }

    fn single(&self) -> Result<f64, CliError> {
        if self.steps != 1 {
            return Err(CliError::invalid("expected a single value, got a grid"));
        }
        Ok(self.lo)
    }
}

fn parse_snr_range(s: &str) -> Result<SnrRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => {
            let lo: f64 = v.parse().map_err(|_| format!("bad number {v}"))?;
            Ok(SnrRange { lo, hi: lo, steps: 1 })
        }
        [lo, hi, steps] => {
            let lo: f64 = lo.parse().map_err(|_| format!("bad number {lo}"))?;
            let hi: f64 = hi.parse().map_err(|_| format!("bad number {hi}"))?;
            let steps: usize = steps.parse().map_err(|_| format!("bad step count {steps}"))?;
            if steps == 0 {
                return Err("steps must be >= 1".into());
            }
            if steps == 1 && lo != hi {
                return Err("steps=1 requires lo == hi".into());
            }
            if steps > 1 && !(hi > lo) {
                return Err("need hi > lo for a grid".into());
            }
            Ok(SnrRange { lo, hi, steps })
        }
        _ => Err(format!("expected lo:hi:steps or a single value, got {s}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DelayVal {
    Zero,
    Finite(f64),
    Inf,
}

#[derive(Debug, Clone)]
struct Delays(Vec<DelayVal>);

fn parse_delays(s: &str) -> Result<Delays, String> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        match tok {
            "zero" | "0" => out.push(DelayVal::Zero),
            "inf" | "infinity" => out.push(DelayVal::Inf),
            _ => {
                let v: f64 = tok.parse().map_err(|_| format!("bad delay {tok}"))?;
                if !(v > 0.0) {
                    return Err(format!("delay must be positive, got {tok}"));
                }
                out.push(DelayVal::Finite(v));
            }
        }
    }
    if out.is_empty() {
        return Err("need at least one delay value".into());
    }
    // sort: zero first, finite ascending, inf last
    out.sort_by(|a, b| delay_key(a).partial_cmp(&delay_key(b)).unwrap());
    out.dedup();
    Ok(Delays(out))
}

fn delay_key(d: &DelayVal) -> f64 {
    match d {
        DelayVal::Zero => 0.0,
        DelayVal::Finite(v) => *v,
        DelayVal::Inf => f64::INFINITY,
    }
}

fn delay_label(d: &DelayVal) -> String {
    match d {
        DelayVal::Zero => "0".into(),
        DelayVal::Finite(v) => fmt_float(*v),
        DelayVal::Inf => "inf".into(),
    }
}

// ---------------------------------------------------------------------------
// Shared evaluation
// ---------------------------------------------------------------------------

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One finite-delay distortion evaluation, dispatched to the tightest
/// applicable formula: scalar bound, SIMO/MISO ₁F₁ closed form (η = 1,
/// λ off the integer poles), otherwise the general Hankel route.
fn eval_delay_point(
    mt: usize,
    mr: usize,
    rho: f64,
    eta: f64,
    tau_n: f64,
) -> Result<(f64, DistortionMethod), CliError> {
    if mt == 1 && mr == 1 {
        return Ok((d_delay_siso(rho, eta, tau_n)?, DistortionMethod::SisoClosed));
    }
    let m = mt.max(mr);
    let lambda = 1.0 / tau_n;
    let off_pole = (lambda - lambda.round()).abs() >= 1e-9 || lambda.round() < 1.0;
    if mt.min(mr) == 1 && eta == 1.0 && off_pole {
        let v = d_delay_simo(m, rho, tau_n, mt > 1)?;
        return Ok((v, DistortionMethod::SimoClosed));
    }
    let channel = ChannelSpec::new(mt, mr, rho).map_err(distdelay::Error::from)?;
    Ok((d_delay_mimo(&channel, eta, tau_n)?, DistortionMethod::MimoHankel))
}

fn eval_point(
    mt: usize,
    mr: usize,
    rho: f64,
    eta: f64,
    delay: &DelayVal,
) -> Result<(f64, DistortionMethod), CliError> {
    let channel = ChannelSpec::new(mt, mr, rho).map_err(distdelay::Error::from)?;
    match delay {
        DelayVal::Zero => Ok((d_zero(&channel, eta)?, DistortionMethod::D0)),
        DelayVal::Inf => Ok((d_infinite(&channel, eta)?, DistortionMethod::DInf)),
        DelayVal::Finite(tau_n) => eval_delay_point(mt, mr, rho, eta, *tau_n),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct CurveRow {
    snr_db: f64,
    tau_n: String,
    eta: f64,
    distortion: f64,
    distortion_db: f64,
    method: String,
}

fn run_curve(
    channel: ChannelArgs,
    eta: f64,
    snr_db: SnrRange,
    delay: Delays,
    output: OutputArgs,
) -> Result<(), CliError> {
    let config = serde_json::json!({
        "mt": channel.mt, "mr": channel.mr, "eta": eta,
        "snr_db": { "lo": snr_db.lo, "hi": snr_db.hi, "steps": snr_db.steps },
        "delay": delay.0.iter().map(delay_label).collect::<Vec<_>>(),
        "quad_rel_tol": distdelay::QuadratureSpec::default().rel_tol,
    });
    let mut rows = Vec::new();
    for snr in snr_db.values() {
        let rho = db_to_linear(snr);
        for d in &delay.0 {
            let (v, method) = eval_point(channel.mt, channel.mr, rho, eta, d)?;
            rows.push(CurveRow {
                snr_db: snr,
                tau_n: delay_label(d),
                eta,
                distortion: v,
                distortion_db: 10.0 * v.log10(),
                method: method.to_string(),
            });
        }
    }
    let out = writer_for(output.out.as_deref())?;
    match output.format {
        Format::Csv => {
            let header = ["snr_db", "tau_n", "eta", "distortion", "distortion_db", "method"];
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_float(r.snr_db),
                        r.tau_n.clone(),
                        fmt_float(r.eta),
                        fmt_float(r.distortion),
                        fmt_float(r.distortion_db),
                        r.method.clone(),
                    ]
                })
                .collect();
            write_csv(out, &config, &header, &body)
        }
        Format::Json => write_json(out, "curve", &config, "rows", serde_json::json!(rows)),
    }
}

#[derive(serde::Serialize)]
struct ExponentRow {
    mt: usize,
    mr: usize,
    tau_n: f64,
    eta: f64,
    analytic_alpha: f64,
    fitted_alpha: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn run_exponent(
    channel: ChannelArgs,
    delay: Delays,
    eta_grid: SnrRange,
    fit: bool,
    snr_db: SnrRange,
    output: OutputArgs,
) -> Result<(), CliError> {
    let taus: Vec<f64> = delay
        .0
        .iter()
        .map(|d| match d {
            DelayVal::Finite(v) => Ok(*v),
            _ => Err(CliError::invalid("exponent profiles need finite delays")),
        })
        .collect::<Result<_, _>>()?;
    let spec = ChannelSpec::new(channel.mt, channel.mr, 10.0).map_err(distdelay::Error::from)?;
    let config = serde_json::json!({
        "mt": channel.mt, "mr": channel.mr, "tau_n": taus,
        "eta_grid": { "lo": eta_grid.lo, "hi": eta_grid.hi, "steps": eta_grid.steps },
        "fit": fit,
        "fit_snr_db": if fit {
            serde_json::json!({ "lo": snr_db.lo, "hi": snr_db.hi, "points": snr_db.steps, "drop_lowest": 2 })
        } else {
            serde_json::Value::Null
        },
    });
    let mut rows = Vec::new();
    for &tau_n in &taus {
        for eta in eta_grid.values() {
            let analytic = exponent_buffered(&spec, eta, tau_n);
            let fitted = if fit && eta > 0.0 {
                let (mt, mr) = (channel.mt, channel.mr);
                let f = fit_exponent(
                    |rho| {
                        eval_delay_point(mt, mr, rho, eta, tau_n)
                            .map(|(v, _)| v)
                            .map_err(|e| {
                                distdelay::Error::from(distdelay::ExponentError::InvalidFit(e.message))
                            })
                    },
                    (snr_db.lo, snr_db.hi),
                    snr_db.steps,
                    2,
                )?;
                Some(f.slope)
            } else {
                None
            };
            rows.push(ExponentRow {
                mt: channel.mt,
                mr: channel.mr,
                tau_n,
                eta,
                analytic_alpha: analytic,
                fitted_alpha: fitted,
            });
        }
    }
    let out = writer_for(output.out.as_deref())?;
    match output.format {
        Format::Csv => {
            let header = ["mt", "mr", "tau_n", "eta", "analytic_alpha", "fitted_alpha"];
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.mt.to_string(),
                        r.mr.to_string(),
                        fmt_float(r.tau_n),
                        fmt_float(r.eta),
                        fmt_float(r.analytic_alpha),
                        r.fitted_alpha.map(fmt_float).unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(out, &config, &header, &body)
        }
        Format::Json => write_json(out, "exponent", &config, "rows", serde_json::json!(rows)),
    }
}

struct SimulateParams {
    channel: ChannelArgs,
    snr_db: SnrRange,
    eta: f64,
    rs: Option<f64>,
    delay: Delays,
    thresholds: Option<Vec<f64>>,
    frames: usize,
    seed: u64,
    kappa: f64,
    o1: f64,
    bw_hz: f64,
    frame_s: f64,
    bits: bool,
    deterministic_service: Option<f64>,
    output: OutputArgs,
}

fn run_simulate(p: SimulateParams) -> Result<(), CliError> {
    if p.output.format == Format::Csv {
        return Err(CliError::invalid("simulate emits a JSON document; use --format json"));
    }
    let snr = p.snr_db.single()?;
    let rho = db_to_linear(snr);
    let channel =
        ChannelSpec::new(p.channel.mt, p.channel.mr, rho).map_err(distdelay::Error::from)?;
    let tau_n = match p.delay.0.as_slice() {
        [DelayVal::Finite(v)] => *v,
        _ => return Err(CliError::invalid("simulate needs exactly one finite --delay")),
    };
    let qos = QosSpec::from_normalized_delay(p.bw_hz, p.frame_s, tau_n, p.eta)
        .map_err(distdelay::Error::from)?;
    let unit = if p.bits { std::f64::consts::LN_2 } else { 1.0 };

    // default rs: 90% of the ergodic rate per sample
    let rs = match p.rs {
        Some(v) => v * unit,
        None => 0.9 * p.eta * distdelay::distortion::ergodic_capacity(&channel)?,
    };
    if !(rs > 0.0) {
        return Err(CliError::invalid(format!("rs must be positive, got {rs}")));
    }

    // Large-deviation prediction; also drives default threshold placement.
    let arrival = qos.samples_per_frame() as f64 * rs;
    let theta_star = qos_exponent_for_rate(&channel, &qos, arrival).ok();
    let thresholds: Vec<f64> = match (&p.thresholds, theta_star) {
        (Some(t), _) => t.iter().map(|v| v * unit).collect(),
        (None, Some(ts)) => (1..=6).map(|i| i as f64 / ts).collect(),
        (None, None) => {
            // arrival at/above capacity: fall back to multiples of one
            // frame's arrivals
            (1..=6).map(|i| i as f64 * arrival).collect()
        }
    };

    let result: SimResult = if let Some(service) = p.deterministic_service {
        let warmup = (p.frames / 10).max(10_000);
        let late_threshold = tau_n * arrival;
        let stats = run_lindley(
            arrival,
            std::iter::repeat_n(service, warmup + p.frames),
            &thresholds,
            warmup,
            late_threshold,
        );
        let n = stats.frames as f64;
        let overflow: Vec<OverflowPoint> = thresholds
            .iter()
            .zip(&stats.threshold_hits)
            .map(|(&b, &h)| {
                let prob = h as f64 / n;
                OverflowPoint {
                    threshold: b,
                    probability: prob,
                    std_error: (prob * (1.0 - prob) / n).sqrt(),
                    hits: h,
                }
            })
            .collect();
        let p_late = stats.late_hits as f64 / n;
        let on_time = (-rs).exp();
        let mut r = SimResult {
            overflow,
            fitted_theta: None,
            kappa_hat: None,
            empirical_distortion: (1.0 - p_late) * on_time + p_late,
            distortion_std_error: 0.0,
            prob_nonempty: stats.nonempty_hits as f64 / n,
            mean_queue: stats.queue_sum / n,
            frames_used: stats.frames,
            warmup_frames: warmup as u64,
            stability_warning: arrival >= service,
            stationarity_ok: true,
            seed: p.seed,
        };
        if let Ok((theta, kappa)) = fitted_overflow_exponent(&r) {
            r.fitted_theta = Some(theta);
            r.kappa_hat = Some(kappa);
        }
        r
    } else {
        let config = SimConfig::new(channel, qos, rs, thresholds.clone(), p.frames, p.seed)
            .map_err(distdelay::Error::from)?;
        simulate(&config)?
    };

    let bound = end_to_end_bound(rs, &qos, p.kappa, p.o1);
    let r_squared = log_tail_r_squared(&result).ok();
    let config_json = serde_json::json!({
        "mt": p.channel.mt, "mr": p.channel.mr, "snr_db": snr, "eta": p.eta,
        "rs_nats_per_sample": rs, "tau_n": tau_n, "theta": qos.theta(),
        "samples_per_frame": qos.samples_per_frame(),
        "source_bandwidth_hz": p.bw_hz, "frame_duration_s": p.frame_s,
        "thresholds_nats": thresholds, "frames": p.frames, "seed": p.seed,
        "kappa": p.kappa, "o1": p.o1, "bits_input": p.bits,
        "deterministic_service": p.deterministic_service,
    });
    let body = serde_json::json!({
        "result": result,
        "analytic": {
            "end_to_end_bound": bound,
            "theta_star_effective_capacity": theta_star,
            "log_tail_r_squared": r_squared,
        },
    });
    let out = writer_for(p.output.out.as_deref())?;
    write_json(out, "simulate", &config_json, "simulation", body)
}

fn run_command(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Curve { channel, eta, snr_db, delay, output } => {
            run_curve(channel, eta, snr_db, delay, output)
        }
        Command::Exponent { channel, delay, eta_grid, fit, snr_db, output } => {
            run_exponent(channel, delay, eta_grid, fit, snr_db, output)
        }
        Command::Simulate {
            channel,
            snr_db,
            eta,
            rs,
            delay,
            thresholds,
            frames,
            seed,
            kappa,
            o1,
            bw_hz,
            frame_s,
            bits,
            deterministic_service,
            output,
        } => run_simulate(SimulateParams {
            channel,
            snr_db,
            eta,
            rs,
            delay,
            thresholds,
            frames,
            seed,
            kappa,
            o1,
            bw_hz,
            frame_s,
            bits,
            deterministic_service,
            output,
        }),
        Command::ReproduceFigure { figure, out_dir } => figures::reproduce(figure, &out_dir),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "schema": SCHEMA,
                "error": { "kind": e.kind, "message": e.message },
            });
            eprintln!("{record}");
            ExitCode::from(e.exit_code())
        }
    }
}
