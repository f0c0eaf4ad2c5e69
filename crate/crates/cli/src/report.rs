//! Report envelope, input digests, and output plumbing shared by all
//! subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL: &str = "entrodist";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every JSON report carries the tool version, seed, tolerance, and a
/// digest of its input, so reruns with identical inputs are byte-identical.
#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub tolerance: f64,
    pub input_digest: String,
    pub report: T,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

/// Digest of the scenario file when one is given, else of the normalized
/// argument string.
pub fn input_digest(path: Option<&Path>, normalized_args: &str) -> Result<String, CliError> {
    match path {
        Some(p) => {
            let bytes = fs::read(p)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display())))?;
            Ok(sha256_hex(&bytes))
        }
        None => Ok(sha256_hex(normalized_args.as_bytes())),
    }
}

/// Writes the report to `output` or stdout. The human summary goes to the
/// stream not carrying the report.
pub fn emit(output: Option<&PathBuf>, body: &str, summary: &str) -> Result<(), CliError> {
    match output {
        Some(path) => {
            fs::write(path, body)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            print!("{body}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

pub fn to_json<T: Serialize>(envelope: &Envelope<T>) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(envelope)
        .map_err(|e| CliError::Invariant(format!("report serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// RFC 4180 rows: fields quoted when they contain a comma, quote, or line
/// break; records end with CRLF.
pub fn csv_row(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    format!("{}\r\n", quoted.join(","))
}

pub fn format_f64(x: f64) -> String {
    format!("{x:.15e}")
}
