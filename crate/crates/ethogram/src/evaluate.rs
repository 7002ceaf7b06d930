//! Bag-level scoring of match events against weak labels, plus temporal
//! frequency profiles.
//!
//! Weak labels make per-sample scoring meaningless — an annotated region
//! only promises that the behavior happens *somewhere* inside. So each
//! annotated region becomes a bag and the unit of evaluation is the bag:
//! one detection of the bag's own class anywhere inside makes the whole
//! bag a true positive, a detection of the scored class inside someone
//! else's bag makes that bag a false positive, and so on. Events that
//! start outside every bag are counted separately rather than folded
//! into the matrix, since no ground truth exists there either way.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matcher::MatchEvent;
use crate::series::LabelInterval;

/// One annotated region treated as an evaluation unit. Unlike training
/// labels, bags must not overlap at all — not even across classes —
/// because each event start must belong to at most one bag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bag {
    pub interval: LabelInterval,
}

impl Bag {
    pub fn class(&self) -> &str {
        &self.interval.class
    }

    pub fn contains(&self, position: usize) -> bool {
        self.interval.contains(position)
    }
}

/// Turn annotated intervals into bags, enforcing global non-overlap.
/// Returned bags are sorted by start index.
pub fn bags_from_labels(labels: &[LabelInterval]) -> Result<Vec<Bag>> {
    let mut bags: Vec<Bag> = labels
        .iter()
        .map(|l| Bag {
            interval: l.clone(),
        })
        .collect();
    bags.sort_by_key(|b| (b.interval.start, b.interval.end));
    for pair in bags.windows(2) {
        let (a, b) = (&pair[0].interval, &pair[1].interval);
        if b.start <= a.end {
            return Err(Error::OverlappingBags {
                a_class: a.class.clone(),
                a_start: a.start,
                a_end: a.end,
                b_class: b.class.clone(),
                b_start: b.start,
                b_end: b.end,
            });
        }
    }
    Ok(bags)
}

/// Bag-level confusion counts for one scored class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub target_class: String,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl ConfusionMatrix {
    /// Every bag lands in exactly one cell.
    pub fn total_bags(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// A scored class: the matrix plus the events that fell outside every
/// bag (no ground truth exists there, so they are reported, not judged).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilScore {
    pub matrix: ConfusionMatrix,
    /// Scored-class events whose start lies in no bag.
    pub out_of_bag_events: usize,
}

/// Score events against bags for one class.
///
/// Per bag: a bag of the scored class is a true positive when at least
/// one scored-class event starts inside it, else a false negative; any
/// other bag is a false positive when a scored-class event starts inside
/// it, else a true negative. Events of other classes never influence
/// this matrix, and event order and duplicates are irrelevant.
pub fn mil_score(events: &[MatchEvent], bags: &[Bag], target_class: &str) -> Result<MilScore> {
    let bags = {
        // Re-validate: correctness here hinges on "at most one bag per
        // position", and callers may have assembled bags by hand.
        let labels: Vec<LabelInterval> = bags.iter().map(|b| b.interval.clone()).collect();
        bags_from_labels(&labels)?
    };

    let mut hit = vec![false; bags.len()];
    let mut out_of_bag = 0usize;
    for event in events.iter().filter(|e| e.class == target_class) {
        let position = event.start_index;
        let found = bags.binary_search_by(|bag| {
            if position < bag.interval.start {
                std::cmp::Ordering::Greater
            } else if position > bag.interval.end {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        });
        match found {
            Ok(i) => hit[i] = true,
            Err(_) => out_of_bag += 1,
        }
    }

    let mut matrix = ConfusionMatrix {
        target_class: target_class.to_string(),
        true_positives: 0,
        false_positives: 0,
        false_negatives: 0,
        true_negatives: 0,
    };
    for (bag, &was_hit) in bags.iter().zip(&hit) {
        match (bag.class() == target_class, was_hit) {
            (true, true) => matrix.true_positives += 1,
            (true, false) => matrix.false_negatives += 1,
            (false, true) => matrix.false_positives += 1,
            (false, false) => matrix.true_negatives += 1,
        }
    }
    Ok(MilScore {
        matrix,
        out_of_bag_events: out_of_bag,
    })
}

/// Derived rates. Undefined values stay `None`; silently substituting a
/// 0 or 1 would corrupt cross-class comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    /// Accuracy of always guessing the majority bag class.
    pub default_rate: Option<f64>,
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let target = cm.true_positives + cm.false_negatives;
    let non_target = cm.false_positives + cm.true_negatives;
    Metrics {
        precision: ratio(cm.true_positives, cm.true_positives + cm.false_positives),
        recall: ratio(cm.true_positives, target),
        accuracy: ratio(cm.true_positives + cm.true_negatives, cm.total_bags()),
        default_rate: ratio(target.max(non_target), cm.total_bags()),
    }
}

/// Per-class event counts over a sliding time window.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    pub t0: f64,
    pub t1: f64,
    pub window_length_s: f64,
    pub stride_s: f64,
    /// Classes observed among in-span events, sorted.
    pub classes: Vec<String>,
    /// Window anchor times: `t0 + k·stride_s` for each window k.
    pub window_starts: Vec<f64>,
    /// `counts[w][c]` = events of `classes[c]` starting in window w.
    counts: Vec<Vec<usize>>,
}

impl FrequencyProfile {
    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    /// Sum of all counted (window, class) cells. With `stride =
    /// window_length` the windows tile the span, so this equals the
    /// number of in-span events.
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// Count events per class in sliding windows anchored at `t0 + k·stride_s`
/// for every anchor strictly before `t1`.
///
/// An event belongs to a window when its start time lies in
/// `[window_start, window_start + window_length_s)`. Only events with
/// start time in `[t0, t1)` are counted at all, so with `stride_s ==
/// window_length_s` the counts sum to the in-span event total exactly.
pub fn frequency_profile(
    events: &[MatchEvent],
    span: (f64, f64),
    window_length_s: f64,
    stride_s: f64,
) -> Result<FrequencyProfile> {
    let (t0, t1) = span;
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(Error::BadWindowGeometry(format!(
            "span start {t0} must lie before span end {t1}"
        )));
    }
    if !(window_length_s > 0.0 && window_length_s.is_finite()) || window_length_s > t1 - t0 {
        return Err(Error::BadWindowGeometry(format!(
            "window length {window_length_s}s must be positive and fit the {}s span",
            t1 - t0
        )));
    }
    if !(stride_s > 0.0 && stride_s.is_finite()) {
        return Err(Error::BadWindowGeometry(format!(
            "stride {stride_s}s must be positive"
        )));
    }

    let mut window_starts = Vec::new();
    let mut k = 0usize;
    loop {
        let start = t0 + k as f64 * stride_s;
        if start >= t1 {
            break;
        }
        window_starts.push(start);
        k += 1;
    }

    let in_span_classes: std::collections::BTreeSet<&str> = events
        .iter()
        .filter(|e| e.start_time >= t0 && e.start_time < t1)
        .map(|e| e.class.as_str())
        .collect();
    let classes: Vec<String> = in_span_classes.iter().map(|c| c.to_string()).collect();
    let class_index: BTreeMap<&str, usize> = in_span_classes
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();

    let mut counts = vec![vec![0usize; classes.len()]; window_starts.len()];
    for event in events {
        let t = event.start_time;
        if !(t >= t0 && t < t1) {
            continue;
        }
        let c = class_index[event.class.as_str()];
        // Candidate window anchors around the event, then exact
        // membership tests — floating-point division only suggests the
        // range, never decides a boundary.
        let hi = ((t - t0) / stride_s).floor() as isize + 1;
        let lo = ((t - t0 - window_length_s) / stride_s).floor() as isize - 1;
        for k in lo.max(0)..=hi.min(window_starts.len() as isize - 1) {
            let w = window_starts[k as usize];
            if w <= t && t < w + window_length_s {
                counts[k as usize][c] += 1;
            }
        }
    }

    Ok(FrequencyProfile {
        t0,
        t1,
        window_length_s,
        stride_s,
        classes,
        window_starts,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Axis;
    use proptest::prelude::*;

    fn event(class: &str, start_index: usize) -> MatchEvent {
        MatchEvent {
            class: class.into(),
            start_index,
            start_time: start_index as f64 / 100.0,
            length: 50,
            axis_distances: [(Axis::X, 0.5)].into_iter().collect(),
        }
    }

    fn bag(start: usize, end: usize, class: &str) -> Bag {
        Bag {
            interval: LabelInterval::new(start, end, class).unwrap(),
        }
    }

    /// 71 bags and an event list engineered so that scoring the three
    /// behavior classes yields the matrices (17,7,4,43), (10,1,4,56) and
    /// (1,0,0,70) simultaneously.
    pub(crate) fn published_split() -> (Vec<Bag>, Vec<MatchEvent>) {
        let mut bags = Vec::new();
        for i in 0..71usize {
            let start = 1_000 + 3_000 * i;
            let class = match i {
                0..=20 => "feeding",
                21..=34 => "preening",
                35 => "dustbathing",
                _ => "resting",
            };
            bags.push(bag(start, start + 199, class));
        }

        let mut events = Vec::new();
        let inside = |i: usize| 1_000 + 3_000 * i + 20;
        // 17 of the 21 feeding bags detected, plus feeding mismatches
        // inside 7 resting bags.
        for i in 0..17 {
            events.push(event("feeding", inside(i)));
        }
        for i in 36..43 {
            events.push(event("feeding", inside(i)));
        }
        // 10 of 14 preening bags detected, one mismatch in a resting bag.
        for i in 21..31 {
            events.push(event("preening", inside(i)));
        }
        events.push(event("preening", inside(43)));
        // The single dustbathing bag detected cleanly.
        events.push(event("dustbathing", inside(35)));
        (bags, events)
    }

    #[test]
    fn published_split_reproduces_all_three_matrices() {
        let (bags, events) = published_split();
        assert_eq!(bags.len(), 71);

        let feeding = mil_score(&events, &bags, "feeding").unwrap();
        assert_eq!(
            (
                feeding.matrix.true_positives,
                feeding.matrix.false_positives,
                feeding.matrix.false_negatives,
                feeding.matrix.true_negatives
            ),
            (17, 7, 4, 43)
        );
        let preening = mil_score(&events, &bags, "preening").unwrap();
        assert_eq!(
            (
                preening.matrix.true_positives,
                preening.matrix.false_positives,
                preening.matrix.false_negatives,
                preening.matrix.true_negatives
            ),
            (10, 1, 4, 56)
        );
        let dust = mil_score(&events, &bags, "dustbathing").unwrap();
        assert_eq!(
            (
                dust.matrix.true_positives,
                dust.matrix.false_positives,
                dust.matrix.false_negatives,
                dust.matrix.true_negatives
            ),
            (1, 0, 0, 70)
        );
        for score in [&feeding, &preening, &dust] {
            assert_eq!(score.matrix.total_bags(), 71);
            assert_eq!(score.out_of_bag_events, 0);
        }
    }

    fn round2(x: f64) -> f64 {
        (x * 100.0).round() / 100.0
    }

    #[test]
    fn metrics_match_the_published_tables_to_two_decimals() {
        let cm = |tp, fp, fneg, tn| ConfusionMatrix {
            target_class: "c".into(),
            true_positives: tp,
            false_positives: fp,
            false_negatives: fneg,
            true_negatives: tn,
        };

        let m = metrics(&cm(17, 7, 4, 43));
        assert!((m.precision.unwrap() - 17.0 / 24.0).abs() < 1e-12);
        assert!((m.recall.unwrap() - 17.0 / 21.0).abs() < 1e-12);
        assert_eq!(round2(m.precision.unwrap()), 0.71);
        assert_eq!(round2(m.recall.unwrap()), 0.81);
        assert_eq!(round2(m.accuracy.unwrap()), 0.85);
        assert_eq!(round2(m.default_rate.unwrap()), 0.70);

        let m = metrics(&cm(10, 1, 4, 56));
        assert_eq!(round2(m.precision.unwrap()), 0.91);
        assert_eq!(round2(m.recall.unwrap()), 0.71);
        assert_eq!(round2(m.accuracy.unwrap()), 0.93);
        assert_eq!(round2(m.default_rate.unwrap()), 0.80);

        let m = metrics(&cm(1, 0, 0, 70));
        assert_eq!(round2(m.precision.unwrap()), 1.00);
        assert_eq!(round2(m.recall.unwrap()), 1.00);
        assert_eq!(round2(m.accuracy.unwrap()), 1.00);
        assert_eq!(round2(m.default_rate.unwrap()), 0.99);
    }

    #[test]
    fn undefined_metrics_stay_undefined() {
        let m = metrics(&ConfusionMatrix {
            target_class: "c".into(),
            true_positives: 0,
            false_positives: 0,
            false_negatives: 0,
            true_negatives: 5,
        });
        assert_eq!(m.precision, None, "no positive predictions");
        assert_eq!(m.recall, None, "no target bags");
        assert_eq!(m.accuracy, Some(1.0));

        let empty = metrics(&ConfusionMatrix {
            target_class: "c".into(),
            true_positives: 0,
            false_positives: 0,
            false_negatives: 0,
            true_negatives: 0,
        });
        assert_eq!(empty.accuracy, None);
        assert_eq!(empty.default_rate, None);
    }

    #[test]
    fn no_events_means_all_target_bags_are_missed() {
        let bags = vec![
            bag(0, 99, "feeding"),
            bag(200, 299, "feeding"),
            bag(400, 499, "resting"),
        ];
        let score = mil_score(&[], &bags, "feeding").unwrap();
        assert_eq!(score.matrix.true_positives, 0);
        assert_eq!(score.matrix.false_positives, 0);
        assert_eq!(score.matrix.false_negatives, 2);
        assert_eq!(score.matrix.true_negatives, 1);
        assert_eq!(score.out_of_bag_events, 0);
    }

    #[test]
    fn scoring_ignores_event_order_and_duplicates() {
        let (bags, events) = published_split();
        let baseline = mil_score(&events, &bags, "feeding").unwrap();

        let mut shuffled = events.clone();
        shuffled.reverse();
        let mut with_dupes = shuffled.clone();
        with_dupes.extend(events.iter().cloned());
        assert_eq!(mil_score(&shuffled, &bags, "feeding").unwrap(), baseline);
        assert_eq!(mil_score(&with_dupes, &bags, "feeding").unwrap(), baseline);
    }

    #[test]
    fn out_of_bag_events_are_counted_not_judged() {
        let bags = vec![bag(100, 199, "feeding"), bag(300, 399, "resting")];
        let events = vec![
            event("feeding", 150),
            event("feeding", 500), // outside every bag
            event("feeding", 700), // outside every bag
            event("resting", 800), // wrong class: invisible here
        ];
        let score = mil_score(&events, &bags, "feeding").unwrap();
        assert_eq!(score.matrix.true_positives, 1);
        assert_eq!(score.matrix.false_positives, 0);
        assert_eq!(score.out_of_bag_events, 2);
    }

    #[test]
    fn overlapping_bags_are_rejected_even_across_classes() {
        let labels = vec![
            LabelInterval::new(0, 100, "feeding").unwrap(),
            LabelInterval::new(100, 200, "resting").unwrap(),
        ];
        assert!(matches!(
            bags_from_labels(&labels),
            Err(Error::OverlappingBags { .. })
        ));
        let bags = vec![bag(0, 100, "feeding"), bag(50, 200, "resting")];
        assert!(mil_score(&[], &bags, "feeding").is_err());
    }

    #[test]
    fn frequency_profile_counts_plants_per_hour() {
        // Three events in hour 0, one in hour 2, none in hour 1.
        let events = vec![
            event("feeding", 10_000),
            event("feeding", 20_000),
            event("preening", 30_000),
            event("feeding", 750_000),
        ];
        let profile = frequency_profile(&events, (0.0, 3.0 * 3600.0), 3600.0, 3600.0).unwrap();
        assert_eq!(profile.classes, vec!["feeding", "preening"]);
        assert_eq!(profile.window_starts.len(), 3);
        assert_eq!(profile.counts()[0], vec![2, 1]);
        assert_eq!(profile.counts()[1], vec![0, 0]);
        assert_eq!(profile.counts()[2], vec![1, 0]);
        assert_eq!(profile.total(), 4);
    }

    #[test]
    fn frequency_windows_are_half_open() {
        // An event exactly on a window boundary belongs to the later
        // window only.
        let boundary = MatchEvent {
            class: "feeding".into(),
            start_index: 360_000,
            start_time: 3_600.0,
            length: 50,
            axis_distances: [(Axis::X, 0.5)].into_iter().collect(),
        };
        let profile = frequency_profile(&[boundary], (0.0, 7_200.0), 3_600.0, 3_600.0).unwrap();
        assert_eq!(profile.counts()[0], vec![0]);
        assert_eq!(profile.counts()[1], vec![1]);
    }

    #[test]
    fn frequency_profile_rejects_bad_geometry() {
        assert!(frequency_profile(&[], (10.0, 10.0), 1.0, 1.0).is_err());
        assert!(frequency_profile(&[], (0.0, 10.0), 0.0, 1.0).is_err());
        assert!(frequency_profile(&[], (0.0, 10.0), 20.0, 1.0).is_err());
        assert!(frequency_profile(&[], (0.0, 10.0), 1.0, 0.0).is_err());
        // No events at all is fine: an all-zero profile.
        let profile = frequency_profile(&[], (0.0, 10.0), 1.0, 1.0).unwrap();
        assert_eq!(profile.total(), 0);
        assert!(profile.classes.is_empty());
        assert_eq!(profile.window_starts.len(), 10);
    }

    #[test]
    fn overlapping_windows_count_events_repeatedly() {
        // stride < window: each event falls into every window that
        // covers it.
        let events = vec![event("feeding", 100_000)]; // t = 1000 s
        let profile = frequency_profile(&events, (0.0, 2_000.0), 1_000.0, 250.0).unwrap();
        // Windows starting at 0,250,…,1000 contain t=1000? [w, w+1000):
        // 250..=1000 do (1000 < w+1000 ⇔ w > 0; 1000 ≥ w ⇔ w ≤ 1000).
        let hits: Vec<f64> = profile
            .window_starts
            .iter()
            .zip(profile.counts())
            .filter(|(_, c)| c[0] > 0)
            .map(|(w, _)| *w)
            .collect();
        assert_eq!(hits, vec![250.0, 500.0, 750.0, 1_000.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Matrix closure: every bag lands in exactly one cell, whatever
        /// the events do.
        #[test]
        fn matrix_closure_holds(
            widths in prop::collection::vec(10usize..80, 1..40),
            classes in prop::collection::vec(0usize..3, 1..40),
            events in prop::collection::vec((0usize..20_000, 0usize..3), 0..60),
        ) {
            let names = ["feeding", "preening", "resting"];
            let mut bags = Vec::new();
            let mut cursor = 0usize;
            for (w, c) in widths.iter().zip(classes.iter().cycle()) {
                bags.push(bag(cursor, cursor + w - 1, names[*c]));
                cursor += w + 5;
            }
            let events: Vec<MatchEvent> =
                events.iter().map(|&(p, c)| event(names[c], p)).collect();
            for name in names {
                let score = mil_score(&events, &bags, name).unwrap();
                prop_assert_eq!(score.matrix.total_bags(), bags.len());
            }
        }

        /// Tiling sum: with stride = window length, total counted events
        /// equal the number of in-span events.
        #[test]
        fn tiling_windows_sum_to_in_span_total(
            starts in prop::collection::vec(0usize..1_000_000, 0..50),
            window in 10u32..5_000,
        ) {
            let events: Vec<MatchEvent> =
                starts.iter().map(|&s| event("feeding", s)).collect();
            let span = (0.0, 10_000.0);
            let profile =
                frequency_profile(&events, span, window as f64, window as f64).unwrap();
            let in_span = events
                .iter()
                .filter(|e| e.start_time >= span.0 && e.start_time < span.1)
                .count();
            prop_assert_eq!(profile.total(), in_span);
        }
    }
}
