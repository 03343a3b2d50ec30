//! Output plumbing: CSV with a commented config header, JSON documents,
//! and the 12-significant-digit float contract.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::CliError;

pub const SCHEMA: &str = "dd/1";

/// Floats carry 12 significant digits; integers and tags pass through.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.11e}")
    }
}

pub fn writer_for(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::io(format!("create {}: {e}", p.display())))?;
            Ok(Box::new(f))
        }
        None => Ok(Box::new(io::stdout())),
    }
}

/// CSV with `#`-prefixed schema/version/config lines, then an RFC-4180
/// table (CRLF, header row, quoted only when needed).
pub fn write_csv(
    mut out: Box<dyn Write>,
    config_json: &serde_json::Value,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let meta = format!(
        "# schema: {SCHEMA}\r\n# version: {}\r\n# config: {}\r\n",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_string(config_json).expect("config serializes"),
    );
    out.write_all(meta.as_bytes()).map_err(CliError::from_io)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(header).map_err(|e| CliError::io(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::io(e.to_string()))?;
    }
    w.flush().map_err(CliError::from_io)?;
    Ok(())
}

/// JSON document: schema, version, command, resolved config, rows.
pub fn write_json(
    mut out: Box<dyn Write>,
    command: &str,
    config_json: &serde_json::Value,
    body_key: &str,
    body: serde_json::Value,
) -> Result<(), CliError> {
    let doc = serde_json::json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config_json,
        body_key: body,
    });
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::io(e.to_string()))?;
    out.write_all(b"\n").map_err(CliError::from_io)?;
    Ok(())
}
