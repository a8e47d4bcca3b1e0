//! Deterministic output files with embedded run metadata.
//!
//! Data files carry the tool version, the canonical JSON echo of the run
//! configuration and the seed, so a run is reproducible from the file
//! alone. Timestamps never enter data files; they go to a `.meta.json`
//! sidecar next to the output so repeated runs stay byte-identical.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const TOOL: &str = "seqdisc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats a float with 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Canonical single-line JSON echo of a configuration.
pub fn config_echo<C: Serialize>(config: &C) -> String {
    serde_json::to_string(config).expect("config serializes")
}

/// Assembles a CSV data file: metadata comment lines, a header row and the
/// data rows, LF line endings throughout.
pub fn csv_document<C: Serialize>(
    config: &C,
    seed: Option<u64>,
    header: &str,
    rows: &[String],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool: {TOOL} {VERSION}");
    let _ = writeln!(out, "# config: {}", config_echo(config));
    if let Some(seed) = seed {
        let _ = writeln!(out, "# seed: {seed}");
    }
    let _ = writeln!(out, "{header}");
    for row in rows {
        let _ = writeln!(out, "{row}");
    }
    out
}

/// Assembles a JSON data file with the same metadata envelope.
pub fn json_document<C: Serialize, D: Serialize>(
    config: &C,
    seed: Option<u64>,
    data: &D,
) -> String {
    #[derive(Serialize)]
    struct Envelope<'a, C: Serialize, D: Serialize> {
        tool: &'static str,
        version: &'static str,
        config: &'a C,
        #[serde(skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        data: &'a D,
    }
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        config,
        seed,
        data,
    };
    let mut text = serde_json::to_string_pretty(&env).expect("data serializes");
    text.push('\n');
    text
}

/// Writes a data file plus its timestamped sidecar, or prints the document
/// when no path is given.
pub fn emit<C: Serialize>(
    path: Option<&Path>,
    document: &str,
    config: &C,
    seed: Option<u64>,
) -> std::io::Result<()> {
    match path {
        None => {
            print!("{document}");
            Ok(())
        }
        Some(path) => {
            std::fs::write(path, document)?;
            let sidecar = sidecar_document(config, seed);
            let mut meta_path = path.as_os_str().to_owned();
            meta_path.push(".meta.json");
            std::fs::write(meta_path, sidecar)
        }
    }
}

fn sidecar_document<C: Serialize>(config: &C, seed: Option<u64>) -> String {
    #[derive(Serialize)]
    struct Sidecar<'a, C: Serialize> {
        tool: &'static str,
        version: &'static str,
        unix_time_secs: u64,
        config: &'a C,
        #[serde(skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    }
    let unix_time_secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = serde_json::to_string_pretty(&Sidecar {
        tool: TOOL,
        version: VERSION,
        unix_time_secs,
        config,
        seed,
    })
    .expect("sidecar serializes");
    text.push('\n');
    text
}
