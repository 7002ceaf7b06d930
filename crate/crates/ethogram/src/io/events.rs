//! Event files: one detected behavior instance per row.
//!
//! ```text
//! # events v1
//! # dictionary = barn7.dict
//! class start_index start_time_s length dist_x dist_y dist_z
//! feeding 12346 123.450000 80 1.2345678901 NA 0.987
//! ```
//!
//! The first non-comment line names the columns and is fixed, so files
//! diff cleanly. `start_index` is 1-based; `start_time_s` always carries
//! six decimals; distance columns cover all three axes in order, with
//! `NA` where the template does not use an axis. Distances themselves
//! use shortest round-trip encoding — they are evidence, not cosmetics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{fmt_f64, parse_error, RowErrors};
use crate::error::Result;
use crate::matcher::MatchEvent;
use crate::series::{validate_class_name, Axis};

pub const EVENT_HEADER: &str = "class start_index start_time_s length dist_x dist_y dist_z";

/// Write events. `comments` are emitted as `# key = value` provenance
/// lines above the header.
pub fn write_events(
    path: &Path,
    events: &[MatchEvent],
    comments: &[(String, String)],
) -> Result<()> {
    let mut text = String::new();
    text.push_str("# events v1\n");
    for (key, value) in comments {
        let _ = writeln!(text, "# {key} = {value}");
    }
    text.push_str(EVENT_HEADER);
    text.push('\n');
    for event in events {
        let _ = write!(
            text,
            "{} {} {:.6} {}",
            event.class,
            event.start_index + 1,
            event.start_time,
            event.length
        );
        for axis in Axis::ALL {
            match event.axis_distances.get(&axis) {
                Some(d) => {
                    text.push(' ');
                    text.push_str(&fmt_f64(*d));
                }
                None => text.push_str(" NA"),
            }
        }
        text.push('\n');
    }
    super::write_file(path, text)
}

pub fn read_events(path: &Path) -> Result<Vec<MatchEvent>> {
    let text = super::read_file(path)?;
    let mut saw_header = false;
    let mut events = Vec::new();
    let mut errors = RowErrors::new(path);

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != EVENT_HEADER {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("expected header {EVENT_HEADER:?}"),
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            errors.push(line_no, format!("expected 7 fields, got {}", fields.len()));
            continue;
        }
        if let Err(e) = validate_class_name(fields[0]) {
            errors.push(line_no, e.to_string());
            continue;
        }
        let start_index = match fields[1].parse::<usize>() {
            Ok(v) if v >= 1 => v - 1,
            _ => {
                errors.push(line_no, format!("bad start index {:?}", fields[1]));
                continue;
            }
        };
        let start_time = match fields[2].parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => v,
            _ => {
                errors.push(line_no, format!("bad start time {:?}", fields[2]));
                continue;
            }
        };
        let length = match fields[3].parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => {
                errors.push(line_no, format!("bad length {:?}", fields[3]));
                continue;
            }
        };
        let mut axis_distances = BTreeMap::new();
        let mut row_ok = true;
        for (field, axis) in fields[4..].iter().zip(Axis::ALL) {
            if *field == "NA" {
                continue;
            }
            match field.parse::<f64>() {
                Ok(d) if d.is_finite() && d >= 0.0 => {
                    axis_distances.insert(axis, d);
                }
                _ => {
                    errors.push(line_no, format!("bad {axis} distance {field:?}"));
                    row_ok = false;
                    break;
                }
            }
        }
        if !row_ok {
            continue;
        }
        if axis_distances.is_empty() {
            errors.push(line_no, "event carries no axis distances");
            continue;
        }
        events.push(MatchEvent {
            class: fields[0].to_string(),
            start_index,
            start_time,
            length,
            axis_distances,
        });
    }

    errors.into_result()?;
    if !saw_header {
        return Err(parse_error(path, 1, "missing column header"));
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_events() -> Vec<MatchEvent> {
        vec![
            MatchEvent {
                class: "feeding".into(),
                start_index: 12_345,
                start_time: 123.45,
                length: 80,
                axis_distances: [(Axis::X, 1.25), (Axis::Z, 0.5)].into_iter().collect(),
            },
            MatchEvent {
                class: "preening".into(),
                start_index: 20_000,
                start_time: 200.0,
                length: 120,
                axis_distances: [(Axis::Y, 2.0)].into_iter().collect(),
            },
        ]
    }

    #[test]
    fn events_round_trip_with_na_for_unused_axes() {
        let events = sample_events();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.events");
        write_events(&path, &events, &[("dictionary".into(), "d.dict".into())]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(
            text.contains("feeding 12346 123.450000 80 1.25 NA 0.5"),
            "{text}"
        );
        assert!(
            text.contains("preening 20001 200.000000 120 NA 2 NA"),
            "{text}"
        );
        let back = read_events(&path).unwrap();
        assert_eq!(back, events);
    }

    #[test]
    fn empty_event_lists_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.events");
        write_events(&path, &[], &[]).unwrap();
        assert!(read_events(&path).unwrap().is_empty());
    }

    #[test]
    fn header_is_mandatory_and_rows_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.events");
        std::fs::write(&path, "feeding 1 0.0 80 1 NA NA\n").unwrap();
        assert!(read_events(&path)
            .unwrap_err()
            .to_string()
            .contains("header"));

        std::fs::write(
            &path,
            format!("{EVENT_HEADER}\nfeeding 0 0.0 80 1 NA NA\nfeeding 5 0.0 80 NA NA NA\n"),
        )
        .unwrap();
        let err = read_events(&path).unwrap_err().to_string();
        assert!(err.contains("2 bad rows"), "{err}");
    }
}
