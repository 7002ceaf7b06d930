//! Sensor record files: one row per sample, one column per axis.
//!
//! ```text
//! # sensor-record v1
//! # sample_rate_hz = 100
//! # columns = index x y z
//! 1 0.125 -0.04 0.981
//! 2 0.118 -0.03 0.977
//! ```
//!
//! Indices are 1-based and must advance by exactly one per row (constant
//! sample spacing; gaps are a recording fault, not something to paper
//! over here). A missing `sample_rate_hz` directive means 100 Hz.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{directive, fmt_f64, parse_error, RowErrors};
use crate::error::Result;
use crate::series::{Axis, MultiAxisSeries, DEFAULT_SAMPLE_RATE_HZ};

/// `comments` become extra `# key = value` header lines; readers ignore
/// keys they do not recognize, so callers can stash provenance (seed,
/// source paths) without breaking round trips.
pub fn write_sensor(
    path: &Path,
    series: &MultiAxisSeries,
    comments: &[(String, String)],
) -> Result<()> {
    let axes: Vec<Axis> = series.axes().map(|(a, _)| a).collect();
    let mut text = String::new();
    text.push_str("# sensor-record v1\n");
    for (key, value) in comments {
        let _ = writeln!(text, "# {key} = {value}");
    }
    let _ = writeln!(
        text,
        "# sample_rate_hz = {}",
        fmt_f64(series.sample_rate_hz())
    );
    let names: Vec<String> = axes.iter().map(|a| a.to_string().to_lowercase()).collect();
    let _ = writeln!(text, "# columns = index {}", names.join(" "));
    let tracks: Vec<&[f64]> = axes
        .iter()
        .map(|&a| series.axis(a).unwrap().values())
        .collect();
    for i in 0..series.len() {
        let _ = write!(text, "{}", i + 1);
        for track in &tracks {
            text.push(' ');
            text.push_str(&fmt_f64(track[i]));
        }
        text.push('\n');
    }
    super::write_file(path, text)
}

pub fn read_sensor(path: &Path) -> Result<MultiAxisSeries> {
    let text = super::read_file(path)?;
    let mut sample_rate = DEFAULT_SAMPLE_RATE_HZ;
    let mut axes: Option<Vec<Axis>> = None;
    let mut tracks: Vec<Vec<f64>> = Vec::new();
    let mut errors = RowErrors::new(path);
    let mut rows = 0usize;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            match directive(trimmed) {
                Some(("sample_rate_hz", value)) => match value.parse::<f64>() {
                    Ok(rate) if rate.is_finite() && rate > 0.0 => sample_rate = rate,
                    _ => errors.push(line_no, format!("bad sample_rate_hz {value:?}")),
                },
                Some(("columns", value)) => {
                    let mut fields = value.split_whitespace();
                    if fields.next() != Some("index") {
                        errors.push(line_no, "column list must start with 'index'");
                        continue;
                    }
                    let mut listed = Vec::new();
                    for field in fields {
                        match Axis::from_str(field) {
                            Ok(a) if !listed.contains(&a) => listed.push(a),
                            Ok(a) => errors.push(line_no, format!("axis {a} listed twice")),
                            Err(_) => errors.push(line_no, format!("unknown axis {field:?}")),
                        }
                    }
                    if listed.is_empty() {
                        errors.push(line_no, "no axis columns declared");
                    } else {
                        tracks = vec![Vec::new(); listed.len()];
                        axes = Some(listed);
                    }
                }
                _ => {}
            }
            continue;
        }

        let axes = match &axes {
            Some(a) => a,
            None => {
                return Err(parse_error(
                    path,
                    line_no,
                    "data before a '# columns = index …' directive",
                ))
            }
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != axes.len() + 1 {
            errors.push(
                line_no,
                format!("expected {} fields, got {}", axes.len() + 1, fields.len()),
            );
            continue;
        }
        match fields[0].parse::<usize>() {
            Ok(index) if index == rows + 1 => {}
            Ok(index) => {
                errors.push(
                    line_no,
                    format!("index {index} out of order (expected {})", rows + 1),
                );
                continue;
            }
            Err(_) => {
                errors.push(line_no, format!("bad sample index {:?}", fields[0]));
                continue;
            }
        }
        let mut row = Vec::with_capacity(axes.len());
        let mut row_ok = true;
        for (field, axis) in fields[1..].iter().zip(axes) {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    errors.push(line_no, format!("non-finite {axis} value {field:?}"));
                    row_ok = false;
                    break;
                }
            }
        }
        if row_ok {
            rows += 1;
            for (track, v) in tracks.iter_mut().zip(row) {
                track.push(v);
            }
        }
    }

    errors.into_result()?;
    let axes = axes.ok_or_else(|| parse_error(path, 1, "missing '# columns' directive"))?;
    if rows == 0 {
        return Err(parse_error(path, 1, "no data rows"));
    }
    MultiAxisSeries::from_values(axes.into_iter().zip(tracks), sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sensor_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<f64> = (0..500).map(|_| rng.gen_range(-8.0f64..8.0)).collect();
        let z: Vec<f64> = (0..500).map(|_| rng.gen_range(-8.0f64..8.0)).collect();
        let series = MultiAxisSeries::from_values([(Axis::X, x), (Axis::Z, z)], 100.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.sensor");
        write_sensor(&path, &series, &[("seed".into(), "21".into())]).unwrap();
        let back = read_sensor(&path).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn three_well_formed_rows_make_a_length_three_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("small.sensor");
        std::fs::write(&path, "# columns = index x\n1 0.5\n2 0.6\n3 0.7\n").unwrap();
        let series = read_sensor(&path).unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!(series.sample_rate_hz(), 100.0, "default rate");
        assert_eq!(series.axis(Axis::X).unwrap().values(), &[0.5, 0.6, 0.7]);
    }

    #[test]
    fn bad_rows_are_itemized_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.sensor");
        std::fs::write(
            &path,
            "# columns = index x\n1 0.5\n2 oops\n4 0.7\n5 0.8 9\n",
        )
        .unwrap();
        let err = read_sensor(&path).unwrap_err().to_string();
        assert!(err.contains("3 bad rows"), "{err}");
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("line 4"), "{err}"); // 4 follows the dropped 3
        assert!(err.contains("line 5"), "{err}");
    }

    #[test]
    fn non_monotone_and_nonfinite_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order.sensor");
        std::fs::write(&path, "# columns = index x\n1 0.5\n1 0.6\n").unwrap();
        assert!(read_sensor(&path).is_err());

        let path = dir.path().join("inf.sensor");
        std::fs::write(&path, "# columns = index x\n1 inf\n").unwrap();
        assert!(read_sensor(&path).is_err());
    }

    #[test]
    fn missing_columns_directive_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nocols.sensor");
        std::fs::write(&path, "1 0.5\n").unwrap();
        let err = read_sensor(&path).unwrap_err().to_string();
        assert!(err.contains("columns"), "{err}");
    }
}
