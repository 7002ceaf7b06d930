//! File formats.
//!
//! All formats are line-oriented, space-delimited text. Lines starting
//! with `#` are comments; some formats read configuration from `#`
//! directives of the form `# key = value`. Sample indices and positions
//! are 1-based in files and 0-based in memory — the conversion happens
//! here and nowhere else.
//!
//! Floating-point values are written with Rust's shortest-round-trip
//! formatting, which parses back to the identical bits; dictionary and
//! sensor round trips are exact, not approximate.
//!
//! Ingestion never silently drops rows: every malformed row is itemized
//! with its line number in a single diagnostic error.

use std::path::Path;

use crate::error::{Error, Result};

pub mod dictionary_file;
pub mod events;
pub mod frequency_file;
pub mod ground_truth;
pub mod labels;
pub mod report;
pub mod sensor;

/// Shortest decimal encoding that round-trips to the same f64 bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// `read_to_string` that names the file in the error.
pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

/// `fs::write` that names the file in the error.
pub(crate) fn write_file(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

/// Accumulates per-row diagnostics so a bad file produces one error
/// listing every offending line, not just the first.
pub(crate) struct RowErrors {
    path: String,
    items: Vec<(usize, String)>,
}

impl RowErrors {
    pub(crate) fn new(path: &Path) -> Self {
        Self {
            path: path.display().to_string(),
            items: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, line: usize, message: impl Into<String>) {
        self.items.push((line, message.into()));
    }

    /// Ok when clean, otherwise one error itemizing every bad row on a
    /// single line (so CLI failures stay machine-parsable).
    pub(crate) fn into_result(self) -> Result<()> {
        if self.items.is_empty() {
            return Ok(());
        }
        const SHOWN: usize = 6;
        let mut parts: Vec<String> = self
            .items
            .iter()
            .take(SHOWN)
            .map(|(line, msg)| format!("line {line}: {msg}"))
            .collect();
        if self.items.len() > SHOWN {
            parts.push(format!("and {} more", self.items.len() - SHOWN));
        }
        Err(Error::Parse {
            path: self.path,
            line: self.items[0].0,
            message: format!("{} bad rows: {}", self.items.len(), parts.join("; ")),
        })
    }
}

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Split a `# key = value` directive; `None` for ordinary comments.
pub(crate) fn directive(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?.trim();
    let (key, value) = body.split_once('=')?;
    Some((key.trim(), value.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip_is_bit_exact() {
        for &v in &[
            0.0,
            -0.0,
            1.0,
            -1.5,
            1e-8,
            123.456789,
            f64::MIN_POSITIVE,
            f64::from_bits((0.3f64).to_bits() + 1),
            std::f64::consts::PI,
            -9.806_65,
        ] {
            let text = fmt_f64(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} → {text}");
        }
    }

    #[test]
    fn row_errors_itemize_on_one_line() {
        let mut errs = RowErrors::new(Path::new("data.txt"));
        for line in [5, 9, 12, 14, 15, 16, 17, 18] {
            errs.push(line, "expected 4 fields, got 2");
        }
        let err = errs.into_result().unwrap_err().to_string();
        assert!(err.contains("8 bad rows"));
        assert!(err.contains("line 5"));
        assert!(err.contains("and 2 more"));
        assert!(!err.contains('\n'), "single line for CLI parsing");
    }

    #[test]
    fn directives_split_on_equals() {
        assert_eq!(
            directive("# sample_rate_hz = 100"),
            Some(("sample_rate_hz", "100"))
        );
        assert_eq!(directive("# just a comment"), None);
        assert_eq!(directive("not a comment"), None);
    }
}
