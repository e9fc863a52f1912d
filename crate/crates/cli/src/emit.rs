//! Deterministic output: fixed-width scientific formatting, the config
//! fingerprint carried by every file, and small write helpers.

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

/// Hex SHA-256 of the raw config bytes. Stamped into every output file so
/// results can always be traced back to the exact inputs that made them.
pub fn config_hash(raw: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(raw);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(hex, "{byte:02x}").expect("writing to a String cannot fail");
    }
    hex
}

/// Format a float as `%.12e` would: twelve fractional digits, an explicit
/// exponent sign, and at least two exponent digits. `-0.0` collapses to
/// `0.0` so byte-identical output never depends on the sign of a zero.
pub fn fmt_e12(value: f64) -> String {
    let v = if value == 0.0 { 0.0 } else { value };
    let raw = format!("{v:.12e}");
    let (mantissa, exponent) = raw.split_once('e').expect("{:e} always contains an exponent");
    let (sign, digits) =
        match exponent.strip_prefix('-') {
            Some(rest) => ('-', rest),
            None => ('+', exponent),
        };
    format!("{mantissa}e{sign}{digits:0>2}")
}

/// Write a text file, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Assemble a CSV file: a `# config_hash:` comment line, the header, then
/// the rows, all with `\n` line endings.
pub fn csv_text(hash: &str, header: &str, rows: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# config_hash: {hash}\n"));
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}
