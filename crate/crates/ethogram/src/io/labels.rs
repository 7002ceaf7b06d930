//! Weak-label files: one annotated interval per row.
//!
//! ```text
//! # labels v1
//! # columns = start end class
//! 1201 1900 feeding
//! 2500 3100 preening
//! ```
//!
//! Indices are 1-based and inclusive on both ends. Same-class intervals
//! must not overlap; intervals of different classes may (an animal can
//! be annotated as doing two things at once in training data — bag
//! construction for evaluation applies its own stricter rule).

use std::fmt::Write as _;
use std::path::Path;

use super::RowErrors;
use crate::error::Result;
use crate::series::{validate_labels, LabelInterval};

pub fn write_labels(
    path: &Path,
    labels: &[LabelInterval],
    comments: &[(String, String)],
) -> Result<()> {
    let mut text = String::new();
    text.push_str("# labels v1\n");
    for (key, value) in comments {
        let _ = writeln!(text, "# {key} = {value}");
    }
    text.push_str("# columns = start end class\n");
    for label in labels {
        let _ = writeln!(
            text,
            "{} {} {}",
            label.start + 1,
            label.end + 1,
            label.class
        );
    }
    super::write_file(path, text)
}

/// Read labels, converting to 0-based. When the series length is known,
/// out-of-bounds intervals are flagged with their line numbers.
pub fn read_labels(path: &Path, series_len: Option<usize>) -> Result<Vec<LabelInterval>> {
    let text = super::read_file(path)?;
    let mut labels = Vec::new();
    let mut errors = RowErrors::new(path);

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            errors.push(line_no, format!("expected 3 fields, got {}", fields.len()));
            continue;
        }
        let start = match fields[0].parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => {
                errors.push(line_no, format!("bad start index {:?}", fields[0]));
                continue;
            }
        };
        let end = match fields[1].parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => {
                errors.push(line_no, format!("bad end index {:?}", fields[1]));
                continue;
            }
        };
        if end < start {
            errors.push(line_no, format!("interval {start}..{end} is reversed"));
            continue;
        }
        if let Some(n) = series_len {
            if end > n {
                errors.push(line_no, format!("label end {end} beyond series length {n}"));
                continue;
            }
        }
        match LabelInterval::new(start - 1, end - 1, fields[2]) {
            Ok(label) => labels.push(label),
            Err(e) => errors.push(line_no, e.to_string()),
        }
    }

    errors.into_result()?;
    validate_labels(&labels)?;
    Ok(labels)
}

/// Read a sensor file and its labels together, cross-validating label
/// bounds against the series length.
pub fn ingest(
    sensor_path: &Path,
    label_path: &Path,
) -> Result<(crate::series::MultiAxisSeries, Vec<LabelInterval>)> {
    let series = super::sensor::read_sensor(sensor_path)?;
    let labels = read_labels(label_path, Some(series.len()))?;
    Ok((series, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip_through_one_based_files() {
        let labels = vec![
            LabelInterval::new(1200, 1899, "feeding").unwrap(),
            LabelInterval::new(2499, 3099, "preening").unwrap(),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.labels");
        write_labels(&path, &labels, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("1201 1900 feeding"), "1-based on disk");
        let back = read_labels(&path, None).unwrap();
        assert_eq!(back, labels);
    }

    #[test]
    fn bounds_are_checked_when_series_length_is_known() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.labels");
        std::fs::write(&path, "10 500 feeding\n").unwrap();
        assert!(read_labels(&path, Some(1_000)).is_ok());
        let err = read_labels(&path, Some(400)).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        assert!(err.contains("beyond series length 400"), "{err}");
    }

    #[test]
    fn malformed_rows_are_itemized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.labels");
        std::fs::write(
            &path,
            "10 20 feeding\n30 25 feeding\n40 50\n60 70 bad class!\n",
        )
        .unwrap();
        let err = read_labels(&path, None).unwrap_err().to_string();
        assert!(err.contains("3 bad rows"), "{err}");
        assert!(err.contains("reversed"), "{err}");
    }

    #[test]
    fn same_class_overlap_is_rejected_after_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.labels");
        std::fs::write(&path, "10 20 feeding\n15 30 feeding\n").unwrap();
        assert!(read_labels(&path, None).is_err());
        // Cross-class overlap is fine at this layer.
        std::fs::write(&path, "10 20 feeding\n15 30 preening\n").unwrap();
        assert!(read_labels(&path, None).is_ok());
    }
}
