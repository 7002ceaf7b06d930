//! Ground-truth plant files emitted by the generator: the exact answer
//! key that the weak labels deliberately withhold from a learner.
//!
//! ```text
//! # ground-truth v1
//! # columns = class position length
//! feeding 12346 80
//! ```
//!
//! Positions are 1-based like every other file.

use std::fmt::Write as _;
use std::path::Path;

use super::RowErrors;
use crate::error::Result;
use crate::series::validate_class_name;
use crate::synth::Plant;

pub fn write_plants(path: &Path, plants: &[Plant], comments: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    text.push_str("# ground-truth v1\n");
    for (key, value) in comments {
        let _ = writeln!(text, "# {key} = {value}");
    }
    text.push_str("# columns = class position length\n");
    for plant in plants {
        let _ = writeln!(
            text,
            "{} {} {}",
            plant.class,
            plant.position + 1,
            plant.length
        );
    }
    super::write_file(path, text)
}

pub fn read_plants(path: &Path) -> Result<Vec<Plant>> {
    let text = super::read_file(path)?;
    let mut plants = Vec::new();
    let mut errors = RowErrors::new(path);
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            errors.push(line_no, format!("expected 3 fields, got {}", fields.len()));
            continue;
        }
        if let Err(e) = validate_class_name(fields[0]) {
            errors.push(line_no, e.to_string());
            continue;
        }
        let position = match fields[1].parse::<usize>() {
            Ok(v) if v >= 1 => v - 1,
            _ => {
                errors.push(line_no, format!("bad position {:?}", fields[1]));
                continue;
            }
        };
        let length = match fields[2].parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => {
                errors.push(line_no, format!("bad length {:?}", fields[2]));
                continue;
            }
        };
        plants.push(Plant {
            class: fields[0].to_string(),
            position,
            length,
        });
    }
    errors.into_result()?;
    Ok(plants)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plants_round_trip() {
        let plants = vec![
            Plant {
                class: "feeding".into(),
                position: 12_345,
                length: 80,
            },
            Plant {
                class: "preening".into(),
                position: 500,
                length: 120,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.plants");
        write_plants(&path, &plants, &[]).unwrap();
        assert_eq!(read_plants(&path).unwrap(), plants);
    }
}
