//! Evaluation reports: the same scored numbers in two renderings — a
//! machine-readable `key value` file and a human summary block.
//!
//! Undefined metrics print as `NA`. Printing 0 or 1 instead would let a
//! class with no target bags masquerade as a perfect (or hopeless)
//! classifier in downstream comparisons.

use std::fmt::Write as _;
use std::path::Path;

use super::fmt_f64;
use crate::error::Result;
use crate::evaluate::{metrics, Metrics, MilScore};

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

fn opt_2dp(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "NA".into())
}

/// Machine rendering: one `key value` pair per line, full precision.
/// `comments` become `# key = value` header lines (input paths, flags).
pub fn render_report(score: &MilScore, comments: &[(String, String)]) -> String {
    let cm = &score.matrix;
    let m: Metrics = metrics(cm);
    let mut text = String::new();
    text.push_str("# evaluation-report v1\n");
    for (key, value) in comments {
        let _ = writeln!(text, "# {key} = {value}");
    }
    let _ = writeln!(text, "class {}", cm.target_class);
    let _ = writeln!(text, "bags {}", cm.total_bags());
    let _ = writeln!(text, "tp {}", cm.true_positives);
    let _ = writeln!(text, "fp {}", cm.false_positives);
    let _ = writeln!(text, "fn {}", cm.false_negatives);
    let _ = writeln!(text, "tn {}", cm.true_negatives);
    let _ = writeln!(text, "out_of_bag {}", score.out_of_bag_events);
    let _ = writeln!(text, "precision {}", opt(m.precision));
    let _ = writeln!(text, "recall {}", opt(m.recall));
    let _ = writeln!(text, "accuracy {}", opt(m.accuracy));
    let _ = writeln!(text, "default_rate {}", opt(m.default_rate));
    text
}

/// Human rendering of the same numbers, rounded to two decimals.
pub fn render_human(score: &MilScore) -> String {
    let cm = &score.matrix;
    let m: Metrics = metrics(cm);
    let mut text = String::new();
    let _ = writeln!(text, "class {}: {} bags", cm.target_class, cm.total_bags());
    let _ = writeln!(
        text,
        "  matrix     TP {:>4}  FP {:>4}  FN {:>4}  TN {:>4}",
        cm.true_positives, cm.false_positives, cm.false_negatives, cm.true_negatives
    );
    let _ = writeln!(
        text,
        "  precision {}  recall {}  accuracy {}  default {}",
        opt_2dp(m.precision),
        opt_2dp(m.recall),
        opt_2dp(m.accuracy),
        opt_2dp(m.default_rate)
    );
    if score.out_of_bag_events > 0 {
        let _ = writeln!(
            text,
            "  {} matched outside every bag (not judged)",
            score.out_of_bag_events
        );
    }
    text
}

pub fn write_report(path: &Path, score: &MilScore, comments: &[(String, String)]) -> Result<()> {
    super::write_file(path, render_report(score, comments))
}
