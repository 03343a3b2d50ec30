//! Reference-figure data grids. The exact parameter grids are choices of
//! this tool; each CSV ships with a sidecar JSON freezing every one of
//! them so the output is reproducible.

use std::path::Path;

use distdelay::channel::ChannelSpec;
use distdelay::distortion::{d_delay_siso, d_infinite, d_upper_asymptotic, d_zero};
use distdelay::exponent::exponent_buffered;

use crate::output::{fmt_float, write_csv, writer_for, SCHEMA};
use crate::CliError;

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (steps - 1) as f64;
    (0..steps).map(|i| lo + step * i as f64).collect()
}

fn write_sidecar(path: &Path, figure: u32, params: serde_json::Value) -> Result<(), CliError> {
    let doc = serde_json::json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "figure": figure,
        "params": params,
    });
    let mut out = writer_for(Some(path))?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::io(e.to_string()))?;
    use std::io::Write;
    out.write_all(b"\n").map_err(CliError::from_io)?;
    Ok(())
}

pub fn reproduce(figure: u32, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(format!("create {}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join(format!("figure_{figure}.csv"));
    let sidecar_path = out_dir.join(format!("figure_{figure}.params.json"));
    match figure {
        2 => figure2(&csv_path, &sidecar_path),
        4 => figure4(&csv_path, &sidecar_path),
        5 => figure5(&csv_path, &sidecar_path),
        6 => figure6(&csv_path, &sidecar_path),
        7 => figure7(&csv_path, &sidecar_path),
        8 => figure8(&csv_path, &sidecar_path),
        other => Err(CliError::invalid(format!(
            "unknown figure id {other}; known ids: 2, 4, 5, 6, 7, 8"
        ))),
    }?;
    println!("{}", csv_path.display());
    println!("{}", sidecar_path.display());
    Ok(())
}

/// Delay-extreme curves (no buffer vs infinite buffer) for the scalar
/// channel at η = 2 over 0..40 dB: the "Jensen gain" picture.
fn figure2(csv_path: &Path, sidecar: &Path) -> Result<(), CliError> {
    let eta = 2.0;
    let snrs = grid(0.0, 40.0, 41);
    let mut rows = Vec::new();
    for &snr in &snrs {
        let channel = ChannelSpec::new(1, 1, db_to_linear(snr)).map_err(distdelay::Error::from)?;
        for (label, value) in [
            ("0", d_zero(&channel, eta)?),
            ("inf", d_infinite(&channel, eta)?),
        ] {
            rows.push(vec![
                fmt_float(snr),
                label.to_string(),
                fmt_float(eta),
                fmt_float(value),
                fmt_float(10.0 * value.log10()),
                if label == "0" { "d0".into() } else { "d_inf".into() },
            ]);
        }
    }
    let params = serde_json::json!({
        "mt": 1, "mr": 1, "eta": eta,
        "snr_db": { "lo": 0.0, "hi": 40.0, "steps": 41 },
        "curves": ["d0", "d_inf"],
        "note": "complex source at eta=2, equivalent to a real source at eta=1",
    });
    write_csv(
        writer_for(Some(csv_path))?,
        &params,
        &["snr_db", "tau_n", "eta", "distortion", "distortion_db", "method"],
        &rows,
    )?;
    write_sidecar(sidecar, 2, params)
}

/// Finite-delay curves between the extremes at η = 2 over 0..40 dB.
fn figure4(csv_path: &Path, sidecar: &Path) -> Result<(), CliError> {
    let eta = 2.0;
    let snrs = grid(0.0, 40.0, 41);
    let taus = [1.0, 2.0, 5.0];
    let mut rows = Vec::new();
    for &snr in &snrs {
        let rho = db_to_linear(snr);
        let channel = ChannelSpec::new(1, 1, rho).map_err(distdelay::Error::from)?;
        rows.push(vec![
            fmt_float(snr),
            "0".into(),
            fmt_float(eta),
            fmt_float(d_zero(&channel, eta)?),
            fmt_float(10.0 * d_zero(&channel, eta)?.log10()),
            "d0".into(),
        ]);
        for &tau in &taus {
            let v = d_delay_siso(rho, eta, tau)?;
            rows.push(vec![
                fmt_float(snr),
                fmt_float(tau),
                fmt_float(eta),
                fmt_float(v),
                fmt_float(10.0 * v.log10()),
                "siso_closed".into(),
            ]);
        }
        let v = d_infinite(&channel, eta)?;
        rows.push(vec![
            fmt_float(snr),
            "inf".into(),
            fmt_float(eta),
            fmt_float(v),
            fmt_float(10.0 * v.log10()),
            "d_inf".into(),
        ]);
    }
    let params = serde_json::json!({
        "mt": 1, "mr": 1, "eta": eta,
        "snr_db": { "lo": 0.0, "hi": 40.0, "steps": 41 },
        "tau_n": ["0", 1.0, 2.0, 5.0, "inf"],
    });
    write_csv(
        writer_for(Some(csv_path))?,
        &params,
        &["snr_db", "tau_n", "eta", "distortion", "distortion_db", "method"],
        &rows,
    )?;
    write_sidecar(sidecar, 4, params)
}

/// The distortion surface against both delay and SNR.
fn figure5(csv_path: &Path, sidecar: &Path) -> Result<(), CliError> {
    let eta = 2.0;
    let snrs = [10.0, 15.0, 20.0, 25.0];
    let taus: Vec<f64> = (1..=30).map(|i| i as f64).collect();
    let mut rows = Vec::new();
    for &snr in &snrs {
        let rho = db_to_linear(snr);
        for &tau in &taus {
            let v = d_delay_siso(rho, eta, tau)?;
            rows.push(vec![
                fmt_float(snr),
                fmt_float(tau),
                fmt_float(eta),
                fmt_float(v),
                fmt_float(10.0 * v.log10()),
                "siso_closed".into(),
            ]);
        }
    }
    let params = serde_json::json!({
        "mt": 1, "mr": 1, "eta": eta,
        "snr_db": snrs,
        "tau_n": { "lo": 1, "hi": 30, "step": 1 },
    });
    write_csv(
        writer_for(Some(csv_path))?,
        &params,
        &["snr_db", "tau_n", "eta", "distortion", "distortion_db", "method"],
        &rows,
    )?;
    write_sidecar(sidecar, 5, params)
}

/// Distortion/delay bound vs its elementary upper bound at 15 dB, η = 1,
/// with the infinite-delay floor alongside.
fn figure6(csv_path: &Path, sidecar: &Path) -> Result<(), CliError> {
    let rho = db_to_linear(15.0);
    let taus = [2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 50.0, 75.0, 100.0];
    let channel = ChannelSpec::new(1, 1, rho).map_err(distdelay::Error::from)?;
    let floor = d_infinite(&channel, 1.0)?;
    let mut rows = Vec::new();
    for &tau in &taus {
        rows.push(vec![
            fmt_float(tau),
            fmt_float(d_delay_siso(rho, 1.0, tau)?),
            fmt_float(d_upper_asymptotic(rho, tau)?),
            fmt_float(floor),
        ]);
    }
    let params = serde_json::json!({
        "mt": 1, "mr": 1, "eta": 1.0, "snr_db": 15.0,
        "tau_n": taus,
        "columns": ["tau_n", "closed_form", "upper_bound", "d_infinite"],
    });
    write_csv(
        writer_for(Some(csv_path))?,
        &params,
        &["tau_n", "closed_form", "upper_bound", "d_infinite"],
        &rows,
    )?;
    write_sidecar(sidecar, 6, params)
}

fn exponent_rows(
    settings: &[(usize, usize, f64)],
    etas: &[f64],
) -> Result<Vec<Vec<String>>, CliError> {
    let mut rows = Vec::new();
    for &(mt, mr, tau) in settings {
        let channel = ChannelSpec::new(mt, mr, 10.0).map_err(distdelay::Error::from)?;
        for &eta in etas {
            rows.push(vec![
                mt.to_string(),
                mr.to_string(),
                fmt_float(tau),
                fmt_float(eta),
                fmt_float(exponent_buffered(&channel, eta, tau)),
            ]);
        }
    }
    Ok(rows)
}

/// 2×2 exponent-vs-bandwidth-ratio curves for τ_n ∈ {1, 2, 4}.
fn figure7(csv_path: &Path, sidecar: &Path) -> Result<(), CliError> {
    let etas = grid(0.0, 20.0, 81);
    let settings = [(2usize, 2usize, 1.0), (2, 2, 2.0), (2, 2, 4.0)];
    let rows = exponent_rows(&settings, &etas)?;
    let params = serde_json::json!({
        "mt": 2, "mr": 2, "tau_n": [1.0, 2.0, 4.0],
        "eta_grid": { "lo": 0.0, "hi": 20.0, "steps": 81 },
    });
    write_csv(
        writer_for(Some(csv_path))?,
        &params,
        &["mt", "mr", "tau_n", "eta", "analytic_alpha"],
        &rows,
    )?;
    write_sidecar(sidecar, 7, params)
}

/// Exponent curves at τ_n = 5 across antenna settings.
fn figure8(csv_path: &Path, sidecar: &Path) -> Result<(), CliError> {
    let etas = grid(0.0, 25.0, 101);
    let settings = [(1usize, 1usize, 5.0), (1, 2, 5.0), (2, 2, 5.0)];
    let rows = exponent_rows(&settings, &etas)?;
    let params = serde_json::json!({
        "antennas": [[1, 1], [1, 2], [2, 2]], "tau_n": 5.0,
        "eta_grid": { "lo": 0.0, "hi": 25.0, "steps": 101 },
    });
    write_csv(
        writer_for(Some(csv_path))?,
        &params,
        &["mt", "mr", "tau_n", "eta", "analytic_alpha"],
        &rows,
    )?;
    write_sidecar(sidecar, 8, params)
}
