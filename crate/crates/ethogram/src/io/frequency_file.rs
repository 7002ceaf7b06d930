//! Frequency-profile files: plot-ready per-window behavior counts.
//!
//! ```text
//! # frequency-profile v1
//! # window_s = 3600
//! # stride_s = 3600
//! # span = 0 86400
//! window_start_s feeding preening
//! 0 12 3
//! 3600 9 4
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::fmt_f64;
use crate::error::Result;
use crate::evaluate::FrequencyProfile;

pub fn render_frequency(profile: &FrequencyProfile, comments: &[(String, String)]) -> String {
    let mut text = String::new();
    text.push_str("# frequency-profile v1\n");
    for (key, value) in comments {
        let _ = writeln!(text, "# {key} = {value}");
    }
    let _ = writeln!(text, "# window_s = {}", fmt_f64(profile.window_length_s));
    let _ = writeln!(text, "# stride_s = {}", fmt_f64(profile.stride_s));
    let _ = writeln!(
        text,
        "# span = {} {}",
        fmt_f64(profile.t0),
        fmt_f64(profile.t1)
    );
    text.push_str("window_start_s");
    for class in &profile.classes {
        text.push(' ');
        text.push_str(class);
    }
    text.push('\n');
    for (start, counts) in profile.window_starts.iter().zip(profile.counts()) {
        text.push_str(&fmt_f64(*start));
        for c in counts {
            let _ = write!(text, " {c}");
        }
        text.push('\n');
    }
    text
}

pub fn write_frequency(
    path: &Path,
    profile: &FrequencyProfile,
    comments: &[(String, String)],
) -> Result<()> {
    super::write_file(path, render_frequency(profile, comments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::frequency_profile;
    use crate::matcher::MatchEvent;
    use crate::series::Axis;

    #[test]
    fn rendering_lists_one_row_per_window() {
        let events = vec![
            MatchEvent {
                class: "feeding".into(),
                start_index: 100,
                start_time: 1.0,
                length: 10,
                axis_distances: [(Axis::X, 0.1)].into_iter().collect(),
            },
            MatchEvent {
                class: "preening".into(),
                start_index: 900,
                start_time: 9.0,
                length: 10,
                axis_distances: [(Axis::X, 0.1)].into_iter().collect(),
            },
        ];
        let profile = frequency_profile(&events, (0.0, 12.0), 4.0, 4.0).unwrap();
        let text = render_frequency(&profile, &[]);
        assert!(text.contains("window_start_s feeding preening"), "{text}");
        assert!(text.contains("\n0 1 0\n"), "{text}");
        assert!(text.contains("\n8 0 1\n"), "{text}");
    }

    #[test]
    fn empty_profiles_still_render_windows() {
        let profile = frequency_profile(&[], (0.0, 10.0), 5.0, 5.0).unwrap();
        let text = render_frequency(&profile, &[]);
        assert!(text.contains("window_start_s\n"), "{text}");
        assert!(text.contains("\n0\n"), "{text}");
        assert!(text.contains("\n5\n"), "{text}");
    }
}
