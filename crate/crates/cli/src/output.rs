//! File output. Everything is written to a temporary sibling first and then
//! renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output types serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Comment lines carrying provenance, placed above a CSV header.
pub fn csv_preamble(config_hash: &str, seed: Option<u64>) -> Vec<u8> {
    let mut out = format!("# config_hash={config_hash}\n");
    if let Some(seed) = seed {
        out.push_str(&format!("# seed={seed}\n"));
    }
    out.into_bytes()
}

/// Writes a CSV with a provenance preamble; `body` appends header and rows.
pub fn write_csv(
    path: &Path,
    config_hash: &str,
    seed: Option<u64>,
    body: impl FnOnce(&mut Vec<u8>) -> eeforecast::Result<()>,
) -> Result<(), CliError> {
    let mut buf = csv_preamble(config_hash, seed);
    body(&mut buf).map_err(|e| CliError::core(format!("writing {}", path.display()), e))?;
    write_atomic(path, &buf)
}

/// Simple CSV from string rows.
pub fn write_rows(
    path: &Path,
    config_hash: &str,
    seed: Option<u64>,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    write_csv(path, config_hash, seed, |buf| {
        buf.extend_from_slice(header.join(",").as_bytes());
        buf.push(b'\n');
        for row in rows {
            buf.extend_from_slice(row.join(",").as_bytes());
            buf.push(b'\n');
        }
        Ok(())
    })
}

/// Shortest round-trip decimal form, used in file names and CSV cells.
pub fn num(value: f64) -> String {
    format!("{value}")
}

/// Full-precision form for numeric CSV cells.
pub fn full(value: f64) -> String {
    format!("{value:.16e}")
}
