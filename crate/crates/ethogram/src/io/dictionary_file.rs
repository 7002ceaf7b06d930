//! Dictionary files: learned templates with their thresholds and build
//! provenance, written so a reload reproduces the exact same bits.
//!
//! ```text
//! # query-template dictionary
//! dictionary-version 1
//! series-id train.sensor
//! epsilon 0.00000001
//! meta search.feeding axes=x+z anchor=x lengths=40..=60 step=10 stride=2
//! template feeding x 80 12346
//! axis x 1.234 0.125 -0.04 …
//! axis z 0.98 -0.7 0.66 …
//! ```
//!
//! Each `template` line is `template <class> <anchor> <length>
//! <source_position>` (position 1-based); the `axis` lines that follow
//! carry `axis <name> <threshold> <m values>`. Values use shortest
//! round-trip decimal encoding, so loading is bit-exact, not merely
//! close.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{fmt_f64, parse_error};
use crate::dictionary::{AxisTemplate, Dictionary, QueryTemplate};
use crate::error::Result;
use crate::series::{validate_class_name, Axis, MIN_SUBSEQUENCE_LEN};

pub fn write_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    let mut text = String::new();
    text.push_str("# query-template dictionary\n");
    text.push_str("dictionary-version 1\n");
    let _ = writeln!(text, "series-id {}", dict.series_id);
    let _ = writeln!(text, "epsilon {}", fmt_f64(dict.epsilon));
    for (key, value) in &dict.metadata {
        let _ = writeln!(text, "meta {key} {value}");
    }
    for template in dict.templates() {
        let _ = writeln!(
            text,
            "template {} {} {} {}",
            template.class,
            template.anchor.to_string().to_lowercase(),
            template.length,
            template.source_position + 1
        );
        for (axis, at) in &template.axes {
            let _ = write!(
                text,
                "axis {} {}",
                axis.to_string().to_lowercase(),
                fmt_f64(at.threshold)
            );
            for v in &at.values {
                text.push(' ');
                text.push_str(&fmt_f64(*v));
            }
            text.push('\n');
        }
    }
    super::write_file(path, text)
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    let text = super::read_file(path)?;
    let mut dict: Option<Dictionary> = None;
    let mut series_id: Option<String> = None;
    let mut epsilon: Option<f64> = None;
    let mut metadata: Vec<(String, String)> = Vec::new();
    let mut pending: Option<(usize, QueryTemplate)> = None; // (line, template)

    fn finalize(
        path: &Path,
        dict: &mut Option<Dictionary>,
        pending: Option<(usize, QueryTemplate)>,
    ) -> Result<()> {
        if let Some((line, template)) = pending {
            if template.axes.is_empty() {
                return Err(parse_error(
                    path,
                    line,
                    format!("template {} has no axis lines", template.class),
                ));
            }
            if !template.axes.contains_key(&template.anchor) {
                return Err(parse_error(
                    path,
                    line,
                    format!(
                        "template {} never defines its anchor axis {}",
                        template.class, template.anchor
                    ),
                ));
            }
            dict.as_mut()
                .expect("header precedes templates")
                .insert(template)?;
        }
        Ok(())
    }

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = line.split_once(' ').unwrap_or((line, ""));
        match keyword {
            "dictionary-version" => {
                if rest.trim() != "1" {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("unsupported dictionary version {rest:?}"),
                    ));
                }
            }
            "series-id" => series_id = Some(rest.trim().to_string()),
            "epsilon" => match rest.trim().parse::<f64>() {
                Ok(e) if e.is_finite() && e > 0.0 => epsilon = Some(e),
                _ => return Err(parse_error(path, line_no, format!("bad epsilon {rest:?}"))),
            },
            "meta" => {
                let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
                metadata.push((key.to_string(), value.to_string()));
            }
            "template" => {
                if dict.is_none() {
                    let eps = epsilon
                        .ok_or_else(|| parse_error(path, line_no, "missing epsilon header"))?;
                    let mut d = Dictionary::new(series_id.clone().unwrap_or_default(), eps);
                    d.metadata = metadata.drain(..).collect();
                    dict = Some(d);
                }
                finalize(path, &mut dict, pending.take())?;
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() != 4 {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("template line needs 4 fields, got {}", fields.len()),
                    ));
                }
                validate_class_name(fields[0])?;
                let anchor = Axis::from_str(fields[1])
                    .map_err(|e| parse_error(path, line_no, e.to_string()))?;
                let length = fields[2]
                    .parse::<usize>()
                    .ok()
                    .filter(|&m| m >= MIN_SUBSEQUENCE_LEN)
                    .ok_or_else(|| {
                        parse_error(
                            path,
                            line_no,
                            format!(
                                "bad template length {:?} (minimum {MIN_SUBSEQUENCE_LEN})",
                                fields[2]
                            ),
                        )
                    })?;
                let source = fields[3]
                    .parse::<usize>()
                    .ok()
                    .filter(|&p| p >= 1)
                    .ok_or_else(|| {
                        parse_error(
                            path,
                            line_no,
                            format!("bad source position {:?}", fields[3]),
                        )
                    })?;
                pending = Some((
                    line_no,
                    QueryTemplate {
                        class: fields[0].to_string(),
                        anchor,
                        length,
                        source_position: source - 1,
                        axes: Default::default(),
                    },
                ));
            }
            "axis" => {
                let (_, template) = pending.as_mut().ok_or_else(|| {
                    parse_error(path, line_no, "axis line before any template line")
                })?;
                let mut fields = rest.split_whitespace();
                let axis = fields
                    .next()
                    .ok_or_else(|| parse_error(path, line_no, "axis line needs a name"))
                    .and_then(|f| {
                        Axis::from_str(f).map_err(|e| parse_error(path, line_no, e.to_string()))
                    })?;
                let threshold = fields
                    .next()
                    .and_then(|f| f.parse::<f64>().ok())
                    .filter(|t| t.is_finite() && *t >= 0.0)
                    .ok_or_else(|| parse_error(path, line_no, "bad threshold"))?;
                let mut values = Vec::with_capacity(template.length);
                for field in fields {
                    match field.parse::<f64>() {
                        Ok(v) if v.is_finite() => values.push(v),
                        _ => {
                            return Err(parse_error(
                                path,
                                line_no,
                                format!("non-finite template value {field:?}"),
                            ))
                        }
                    }
                }
                if values.len() != template.length {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!(
                            "axis {} carries {} values; template length is {}",
                            axis,
                            values.len(),
                            template.length
                        ),
                    ));
                }
                if template.axes.contains_key(&axis) {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("axis {axis} defined twice"),
                    ));
                }
                template
                    .axes
                    .insert(axis, AxisTemplate { values, threshold });
            }
            other => {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("unknown keyword {other:?}"),
                ))
            }
        }
    }

    if dict.is_none() {
        // Header-only file: legal, an empty dictionary.
        let eps = epsilon.ok_or_else(|| parse_error(path, 1, "missing epsilon header"))?;
        let mut d = Dictionary::new(series_id.unwrap_or_default(), eps);
        d.metadata = metadata.into_iter().collect();
        dict = Some(d);
    }
    finalize(path, &mut dict, pending)?;
    Ok(dict.expect("constructed above"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn awkward_dictionary() -> Dictionary {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut dict = Dictionary::new("barn7 morning session.sensor", 1e-8);
        dict.metadata.insert(
            "search.feeding".into(),
            "axes=x+z anchor=x lengths=40..=60 step=10 stride=2".into(),
        );
        let mut values: Vec<f64> = (0..40).map(|_| rng.gen_range(-8.0f64..8.0)).collect();
        values[0] = -0.0; // sign must survive the round trip
        values[1] = f64::MIN_POSITIVE;
        values[2] = 0.1 + 0.2; // classic almost-0.3
        let mut axes = std::collections::BTreeMap::new();
        axes.insert(
            Axis::X,
            AxisTemplate {
                values: values.clone(),
                threshold: 1.234_567_890_123_456_8, // needs all 17 digits
            },
        );
        axes.insert(
            Axis::Z,
            AxisTemplate {
                values: values.iter().map(|v| -v * 0.37).collect(),
                threshold: 0.0,
            },
        );
        dict.insert(QueryTemplate {
            class: "feeding".into(),
            anchor: Axis::X,
            length: 40,
            source_position: 12_345,
            axes,
        })
        .unwrap();
        dict
    }

    #[test]
    fn dictionary_round_trip_is_bit_exact() {
        let dict = awkward_dictionary();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dict");
        write_dictionary(&path, &dict).unwrap();
        let back = read_dictionary(&path).unwrap();

        assert_eq!(back.series_id, dict.series_id);
        assert_eq!(back.epsilon.to_bits(), dict.epsilon.to_bits());
        assert_eq!(back.metadata, dict.metadata);
        assert_eq!(back.templates().len(), dict.templates().len());
        for (a, b) in back.templates().iter().zip(dict.templates()) {
            assert_eq!(a.class, b.class);
            assert_eq!(a.anchor, b.anchor);
            assert_eq!(a.length, b.length);
            assert_eq!(a.source_position, b.source_position);
            for (axis, at) in &a.axes {
                let bt = &b.axes[axis];
                assert_eq!(at.threshold.to_bits(), bt.threshold.to_bits());
                assert_eq!(at.values.len(), bt.values.len());
                for (x, y) in at.values.iter().zip(&bt.values) {
                    assert_eq!(x.to_bits(), y.to_bits(), "value drifted in transit");
                }
            }
        }
        // Writing again produces the identical file: full determinism.
        let path2 = dir.path().join("t2.dict");
        write_dictionary(&path2, &back).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn malformed_dictionaries_are_rejected_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dict");

        // Wrong value count.
        std::fs::write(
            &path,
            "epsilon 1e-8\ntemplate feeding x 8 1\naxis x 0.5 1 2 3\n",
        )
        .unwrap();
        let err = read_dictionary(&path).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");

        // Anchor axis never defined.
        std::fs::write(
            &path,
            "epsilon 1e-8\ntemplate feeding x 4 1\naxis z 0.5 1 2 3 4\n",
        )
        .unwrap();
        let err = read_dictionary(&path).unwrap_err().to_string();
        assert!(err.contains("anchor"), "{err}");

        // Duplicate class.
        std::fs::write(
            &path,
            "epsilon 1e-8\n\
             template feeding x 4 1\naxis x 0.5 1 2 3 4\n\
             template feeding x 4 1\naxis x 0.5 1 2 3 4\n",
        )
        .unwrap();
        assert!(read_dictionary(&path).is_err());

        // Unknown keyword.
        std::fs::write(&path, "epsilon 1e-8\nshenanigans everywhere\n").unwrap();
        let err = read_dictionary(&path).unwrap_err().to_string();
        assert!(err.contains("unknown keyword"), "{err}");
    }

    #[test]
    fn header_only_dictionary_is_empty_but_valid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dict");
        std::fs::write(&path, "series-id x\nepsilon 1e-8\n").unwrap();
        let dict = read_dictionary(&path).unwrap();
        assert!(dict.is_empty());
        assert_eq!(dict.epsilon, 1e-8);
    }
}
