//! Learning one conserved query template per behavior class from weakly
//! labeled training data.
//!
//! The training signal is deliberately weak: each label only says "the
//! behavior happens somewhere in this interval". The builder turns that
//! into a template by brute force over hypotheses:
//!
//! 1. [`enumerate_candidates`] — every subsequence of every admissible
//!    length that fits inside a labeled interval of the target class is a
//!    candidate query.
//! 2. [`nn_sweep`] — each candidate is scored by walking its distance
//!    profile in ascending order. Matches inside target-class intervals
//!    count as true positives and keep pushing the admissible threshold
//!    out; the first match on foreign ground ends the walk. A candidate
//!    that stumbles before finding a single true positive is marked with
//!    a false positive and can never be selected.
//! 3. [`select_template`] — among clean candidates, prefer the most true
//!    positives, then the longest query, then the tightest threshold.
//!
//! The threshold stored with the winner is the distance of its worst
//! accepted true positive, which by construction of the sweep is strictly
//! below the nearest foreign match on the training data.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::{ExclusionZone, ProfileEngine};
use crate::series::{validate_labels, Axis, LabelInterval, MultiAxisSeries};

/// How a profile position is attributed to a labeled interval during the
/// sweep. The default judges the window by where it starts; the overlap
/// rule is available for experiments with sloppier annotations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TpMembership {
    /// The window's start index lies inside a target-class interval.
    #[default]
    StartInside,
    /// At least this fraction of the window overlaps a target-class
    /// interval (in `(0, 1]`).
    MinOverlap(f64),
}

/// Inclusive length range for candidate enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthRange {
    pub min: usize,
    pub max: usize,
    pub step: usize,
}

impl LengthRange {
    pub fn new(min: usize, max: usize, step: usize) -> Self {
        Self { min, max, step }
    }
}

/// Outcome of sweeping one candidate query over the training series.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    /// Where the candidate was extracted from the training series.
    pub query_position: usize,
    /// Candidate length in samples.
    pub length: usize,
    /// Accepted matches inside target-class intervals.
    pub true_positives: usize,
    /// 1 if the sweep hit foreign ground before its first true positive,
    /// else 0. Only `false_positives == 0` candidates are selectable.
    pub false_positives: usize,
    /// Distance of the worst accepted true positive (0.0 when none).
    pub threshold_distance: f64,
    /// Start positions of the accepted true positives, in acceptance
    /// (ascending distance) order.
    pub matched_positions: Vec<usize>,
    /// Distance of the foreign match that ended the sweep, if any.
    pub stop_distance: Option<f64>,
}

impl CandidateScore {
    /// Candidates eligible for selection: never tripped on foreign ground
    /// and matched at least one labeled region.
    pub fn is_clean(&self) -> bool {
        self.false_positives == 0 && self.true_positives >= 1
    }

    /// Selection order: more true positives, then longer, then tighter
    /// threshold, then the earliest extraction position for determinism.
    /// Thresholds are finite and non-negative, so their IEEE bit patterns
    /// order the same way the values do.
    fn beats(&self, other: &CandidateScore) -> bool {
        (
            self.true_positives,
            self.length,
            std::cmp::Reverse(self.threshold_distance.to_bits()),
            std::cmp::Reverse(self.query_position),
        ) > (
            other.true_positives,
            other.length,
            std::cmp::Reverse(other.threshold_distance.to_bits()),
            std::cmp::Reverse(other.query_position),
        )
    }
}

/// One axis of a template: the raw window values (z-normalized at match
/// time) and the distance threshold learned for that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisTemplate {
    pub values: Vec<f64>,
    pub threshold: f64,
}

/// A learned behavior template: one window per configured axis, all cut
/// at the same position of the training series, each with its own
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTemplate {
    pub class: String,
    /// Axis whose candidate search chose the position; match reduction
    /// orders raw matches by this axis's distance.
    pub anchor: Axis,
    pub length: usize,
    /// Extraction position in the training series (0-based).
    pub source_position: usize,
    pub axes: BTreeMap<Axis, AxisTemplate>,
}

impl QueryTemplate {
    pub fn anchor_template(&self) -> &AxisTemplate {
        &self.axes[&self.anchor]
    }
}

/// A set of templates, at most one per behavior class, plus provenance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dictionary {
    /// Identity of the training series (typically the sensor file path).
    pub series_id: String,
    /// Flatness threshold the dictionary was built with.
    pub epsilon: f64,
    /// Free-form build provenance, e.g. the length range searched per
    /// class. Keys are echoed verbatim into the dictionary file.
    pub metadata: BTreeMap<String, String>,
    templates: Vec<QueryTemplate>,
}

impl Dictionary {
    pub fn new(series_id: impl Into<String>, epsilon: f64) -> Self {
        Self {
            series_id: series_id.into(),
            epsilon,
            metadata: BTreeMap::new(),
            templates: Vec::new(),
        }
    }

    /// Insert a template, keeping templates sorted by class. At most one
    /// template per class.
    pub fn insert(&mut self, template: QueryTemplate) -> Result<()> {
        if self.template_for(&template.class).is_some() {
            return Err(Error::DuplicateClass(template.class));
        }
        self.templates.push(template);
        self.templates.sort_by(|a, b| a.class.cmp(&b.class));
        Ok(())
    }

    pub fn template_for(&self, class: &str) -> Option<&QueryTemplate> {
        self.templates.iter().find(|t| t.class == class)
    }

    pub fn templates(&self) -> &[QueryTemplate] {
        &self.templates
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Longest template length, or `None` for an empty dictionary.
    pub fn max_template_len(&self) -> Option<usize> {
        self.templates.iter().map(|t| t.length).max()
    }
}

/// Target-class intervals in a form the sweep can query per position.
struct TargetRegions {
    /// Sorted, non-overlapping (start, end) pairs, inclusive.
    spans: Vec<(usize, usize)>,
    membership: TpMembership,
}

impl TargetRegions {
    fn from_labels(
        labels: &[LabelInterval],
        target_class: &str,
        membership: TpMembership,
    ) -> Result<Self> {
        let mut spans: Vec<(usize, usize)> = labels
            .iter()
            .filter(|l| l.class == target_class)
            .map(|l| (l.start, l.end))
            .collect();
        if spans.is_empty() {
            return Err(Error::NoLabelsForClass(target_class.to_string()));
        }
        spans.sort_unstable();
        Ok(Self { spans, membership })
    }

    /// Does a window starting at `position` with length `m` belong to the
    /// target class under the configured membership rule?
    fn is_target(&self, position: usize, m: usize) -> bool {
        match self.membership {
            TpMembership::StartInside => self
                .spans
                .binary_search_by(|&(s, e)| {
                    if position < s {
                        std::cmp::Ordering::Greater
                    } else if position > e {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Equal
                    }
                })
                .is_ok(),
            TpMembership::MinOverlap(frac) => {
                let w_start = position;
                let w_end = position + m - 1;
                let needed = (frac * m as f64).ceil() as usize;
                self.spans.iter().any(|&(s, e)| {
                    let lo = w_start.max(s);
                    let hi = w_end.min(e);
                    hi >= lo && hi - lo + 1 >= needed.max(1)
                })
            }
        }
    }
}

/// Score one candidate query against a training series via an existing
/// profile engine (the batched path the builder uses).
///
/// The walk visits finite profile entries in ascending distance order
/// (ties broken by position). A target-class position is accepted: it
/// increments the true-positive count, raises the threshold to its
/// distance, and masks `±ceil(m/2)` neighbors so offset copies of the
/// same event cannot be double-counted. The first foreign position ends
/// the walk; if nothing was accepted yet it is recorded as the
/// candidate's false positive.
pub fn nn_sweep_with_engine(
    engine: &ProfileEngine,
    query: &[f64],
    query_position: usize,
    labels: &[LabelInterval],
    target_class: &str,
    membership: TpMembership,
) -> Result<CandidateScore> {
    let regions = TargetRegions::from_labels(labels, target_class, membership)?;
    let profile = engine.profile(query)?;
    let m = query.len();
    let half = ExclusionZone::for_query_len(0, m).half_width;

    let mut order: Vec<(f64, usize)> = profile
        .distances()
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(i, &d)| (d, i))
        .collect();
    order.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let mut masked = vec![false; profile.len()];
    let mut score = CandidateScore {
        query_position,
        length: m,
        true_positives: 0,
        false_positives: 0,
        threshold_distance: 0.0,
        matched_positions: Vec::new(),
        stop_distance: None,
    };

    for &(distance, position) in &order {
        if masked[position] {
            continue;
        }
        if regions.is_target(position, m) {
            score.true_positives += 1;
            score.threshold_distance = distance;
            score.matched_positions.push(position);
            let lo = position.saturating_sub(half);
            let hi = (position + half).min(masked.len() - 1);
            for flag in &mut masked[lo..=hi] {
                *flag = true;
            }
        } else {
            if score.true_positives == 0 {
                score.false_positives = 1;
            }
            score.stop_distance = Some(distance);
            break;
        }
    }
    Ok(score)
}

/// One-shot variant of [`nn_sweep_with_engine`] for callers without an
/// engine to reuse.
pub fn nn_sweep(
    values: &[f64],
    query: &[f64],
    query_position: usize,
    labels: &[LabelInterval],
    target_class: &str,
    epsilon: f64,
    membership: TpMembership,
) -> Result<CandidateScore> {
    let engine = ProfileEngine::new(values, epsilon)?;
    nn_sweep_with_engine(
        &engine,
        query,
        query_position,
        labels,
        target_class,
        membership,
    )
}

/// Enumerate and score every candidate for `target_class` on the given
/// axis.
///
/// Candidates are all subsequences with length in `lengths` (clipped so
/// they fit inside the shortest target interval) whose window lies fully
/// inside a target-class interval, visited at the configured start
/// `stride`. Flat windows have no shape and are skipped. Returns scores
/// in enumeration order: by length, then interval, then start.
// Eight parameters, each independently meaningful; bundling them into a
// one-off struct would only move the list somewhere else.
#[allow(clippy::too_many_arguments)]
pub fn enumerate_candidates(
    series: &MultiAxisSeries,
    axis: Axis,
    labels: &[LabelInterval],
    target_class: &str,
    lengths: LengthRange,
    stride: usize,
    epsilon: f64,
    membership: TpMembership,
) -> Result<Vec<CandidateScore>> {
    validate_labels(labels)?;
    if stride == 0 || lengths.step == 0 {
        return Err(Error::InvalidConfig(
            "length step and start stride must be at least 1".into(),
        ));
    }
    if lengths.min < crate::series::MIN_SUBSEQUENCE_LEN {
        return Err(Error::SubsequenceTooShort {
            m: lengths.min,
            min: crate::series::MIN_SUBSEQUENCE_LEN,
        });
    }
    let axis_series = series.axis(axis).ok_or(Error::AxisMissing {
        class: target_class.to_string(),
        axis,
    })?;
    let regions = TargetRegions::from_labels(labels, target_class, membership)?;
    let shortest = regions
        .spans
        .iter()
        .map(|&(s, e)| e - s + 1)
        .min()
        .expect("non-empty by construction");
    let max_len = lengths.max.min(shortest);
    if lengths.min > max_len {
        return Err(Error::EmptyLengthRange {
            class: target_class.to_string(),
            min: lengths.min,
            max: lengths.max,
            step: lengths.step,
            limit: shortest,
        });
    }

    let engine = ProfileEngine::new(axis_series.values(), epsilon)?;

    let mut todo: Vec<(usize, usize)> = Vec::new(); // (start, length)
    let mut m = lengths.min;
    while m <= max_len {
        let stats = engine.window_stats(m)?;
        for &(s, e) in &regions.spans {
            if e - s + 1 < m {
                continue;
            }
            let mut start = s;
            while start + m - 1 <= e {
                if stats.1[start] >= epsilon {
                    todo.push((start, m));
                }
                start += stride;
            }
        }
        m += lengths.step;
    }

    todo.par_iter()
        .map(|&(start, m)| {
            let query = &engine.values()[start..start + m];
            nn_sweep_with_engine(&engine, query, start, labels, target_class, membership)
        })
        .collect()
}

/// Pick the winning candidate and cut its window from the given axis.
///
/// Only clean candidates compete (no false positive, at least one true
/// positive); the order is most true positives, longest, tightest
/// threshold, earliest position. Errors when no candidate is clean —
/// nothing in the labeled regions is conserved enough to be a template.
pub fn select_template(
    series: &MultiAxisSeries,
    axis: Axis,
    target_class: &str,
    candidates: &[CandidateScore],
) -> Result<QueryTemplate> {
    let winner = candidates
        .iter()
        .filter(|c| c.is_clean())
        .fold(None::<&CandidateScore>, |best, c| match best {
            Some(b) if !c.beats(b) => Some(b),
            _ => Some(c),
        })
        .ok_or_else(|| Error::NoConservedTemplate {
            class: target_class.to_string(),
            candidates: candidates.len(),
        })?;

    let axis_series = series.axis(axis).ok_or(Error::AxisMissing {
        class: target_class.to_string(),
        axis,
    })?;
    let values =
        axis_series.values()[winner.query_position..winner.query_position + winner.length].to_vec();
    let mut axes = BTreeMap::new();
    axes.insert(
        axis,
        AxisTemplate {
            values,
            threshold: winner.threshold_distance,
        },
    );
    Ok(QueryTemplate {
        class: target_class.to_string(),
        anchor: axis,
        length: winner.length,
        source_position: winner.query_position,
        axes,
    })
}

/// Per-class build instructions.
#[derive(Debug, Clone)]
pub struct ClassSpec {
    pub class: String,
    /// Axes the template will carry. Must include the anchor.
    pub axes: Vec<Axis>,
    /// Axis used for candidate search and match ordering.
    pub anchor: Axis,
    pub lengths: LengthRange,
    /// Start stride for candidate enumeration.
    pub stride: usize,
}

impl ClassSpec {
    fn validate(&self) -> Result<()> {
        crate::series::validate_class_name(&self.class)?;
        if self.axes.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "class {:?} lists no axes",
                self.class
            )));
        }
        if !self.axes.contains(&self.anchor) {
            return Err(Error::InvalidConfig(format!(
                "class {:?}: anchor axis {} is not among its axes",
                self.class, self.anchor
            )));
        }
        Ok(())
    }
}

/// Build configuration: the classes to learn plus global knobs.
#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub classes: Vec<ClassSpec>,
    pub epsilon: f64,
    pub membership: TpMembership,
    /// With `true`, classes that fail to produce a template are reported
    /// in [`BuildOutcome::failures`] instead of aborting the build.
    pub allow_partial: bool,
    /// Training-series identity recorded in the dictionary.
    pub series_id: String,
}

/// A built dictionary plus any per-class failures (only populated when
/// `allow_partial` is set).
#[derive(Debug)]
pub struct BuildOutcome {
    pub dictionary: Dictionary,
    /// (class, reason) pairs for classes that produced no template.
    pub failures: Vec<(String, String)>,
}

/// Learn one template per configured class.
///
/// The anchor axis picks the winning position via the candidate search;
/// every other configured axis is cut at that same position and earns its
/// own threshold from its own sweep. Deterministic: identical inputs give
/// identical dictionaries, regardless of thread count.
pub fn build_dictionary(
    series: &MultiAxisSeries,
    labels: &[LabelInterval],
    config: &BuildConfig,
) -> Result<BuildOutcome> {
    validate_labels(labels)?;
    let mut dictionary = Dictionary::new(config.series_id.clone(), config.epsilon);
    let mut failures = Vec::new();
    let mut engines: BTreeMap<Axis, ProfileEngine> = BTreeMap::new();

    for spec in &config.classes {
        spec.validate()?;
        let result = build_class_template(series, labels, config, spec, &mut engines);
        match result {
            Ok(template) => {
                dictionary.metadata.insert(
                    format!("search.{}", spec.class),
                    format!(
                        "axes={} anchor={} lengths={}..={} step={} stride={}",
                        spec.axes
                            .iter()
                            .map(|a| a.to_string())
                            .collect::<Vec<_>>()
                            .join("+"),
                        spec.anchor,
                        spec.lengths.min,
                        spec.lengths.max,
                        spec.lengths.step,
                        spec.stride
                    ),
                );
                dictionary.insert(template)?;
            }
            Err(err) if config.allow_partial => {
                failures.push((spec.class.clone(), err.to_string()));
            }
            Err(err) => return Err(err),
        }
    }
    Ok(BuildOutcome {
        dictionary,
        failures,
    })
}

fn build_class_template(
    series: &MultiAxisSeries,
    labels: &[LabelInterval],
    config: &BuildConfig,
    spec: &ClassSpec,
    engines: &mut BTreeMap<Axis, ProfileEngine>,
) -> Result<QueryTemplate> {
    let candidates = enumerate_candidates(
        series,
        spec.anchor,
        labels,
        &spec.class,
        spec.lengths,
        spec.stride,
        config.epsilon,
        config.membership,
    )?;
    let mut template = select_template(series, spec.anchor, &spec.class, &candidates)?;

    for &axis in &spec.axes {
        if axis == spec.anchor {
            continue;
        }
        let axis_series = series.axis(axis).ok_or(Error::AxisMissing {
            class: spec.class.clone(),
            axis,
        })?;
        if let std::collections::btree_map::Entry::Vacant(slot) = engines.entry(axis) {
            slot.insert(ProfileEngine::new(axis_series.values(), config.epsilon)?);
        }
        let engine = &engines[&axis];
        let window = &axis_series.values()
            [template.source_position..template.source_position + template.length];
        let score = nn_sweep_with_engine(
            engine,
            window,
            template.source_position,
            labels,
            &spec.class,
            config.membership,
        )?;
        if score.true_positives == 0 {
            return Err(Error::NoConservedTemplate {
                class: format!("{} (axis {})", spec.class, axis),
                candidates: 1,
            });
        }
        template.axes.insert(
            axis,
            AxisTemplate {
                values: window.to_vec(),
                threshold: score.threshold_distance,
            },
        );
    }
    Ok(template)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DEFAULT_EPSILON;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0f64..1.0)).collect()
    }

    /// A smooth, high-energy bump that is nothing like uniform noise.
    fn bump(m: usize, amplitude: f64) -> Vec<f64> {
        (0..m)
            .map(|i| {
                let u = i as f64 / (m - 1) as f64;
                let env = (std::f64::consts::PI * u).sin().powi(2);
                amplitude * env * (2.0 * std::f64::consts::PI * 1.5 * u).cos()
            })
            .collect()
    }

    fn plant(values: &mut [f64], at: usize, shape: &[f64]) {
        for (i, &s) in shape.iter().enumerate() {
            values[at + i] += s;
        }
    }

    #[test]
    fn sweep_accepts_a_planted_query_and_stops_on_foreign_ground() {
        let mut t = noise(42, 4000);
        let shape = bump(64, 6.0);
        plant(&mut t, 1000, &shape);
        let labels = vec![LabelInterval::new(950, 1150, "feeding").unwrap()];
        let query: Vec<f64> = t[1000..1064].to_vec();

        let score = nn_sweep(
            &t,
            &query,
            1000,
            &labels,
            "feeding",
            DEFAULT_EPSILON,
            TpMembership::StartInside,
        )
        .unwrap();

        assert!(score.is_clean());
        assert_eq!(score.matched_positions[0], 1000, "self-match comes first");
        assert_eq!(score.false_positives, 0);
        assert!(score.stop_distance.is_some(), "noise eventually intrudes");
        assert!(
            score.threshold_distance < score.stop_distance.unwrap(),
            "threshold stays below the nearest foreign match"
        );
    }

    #[test]
    fn sweep_rejects_a_query_from_unlabeled_ground() {
        let t = noise(43, 4000);
        let labels = vec![LabelInterval::new(950, 1150, "feeding").unwrap()];
        // The query's own position (distance zero) is outside the label.
        let query: Vec<f64> = t[2000..2064].to_vec();
        let score = nn_sweep(
            &t,
            &query,
            2000,
            &labels,
            "feeding",
            DEFAULT_EPSILON,
            TpMembership::StartInside,
        )
        .unwrap();
        assert_eq!(score.true_positives, 0);
        assert_eq!(score.false_positives, 1);
        assert_eq!(score.stop_distance, Some(0.0));
    }

    #[test]
    fn sweep_requires_labels_for_the_target_class() {
        let t = noise(44, 512);
        let q: Vec<f64> = t[10..26].to_vec();
        let labels = vec![LabelInterval::new(0, 100, "preening").unwrap()];
        assert!(matches!(
            nn_sweep(
                &t,
                &q,
                10,
                &labels,
                "feeding",
                DEFAULT_EPSILON,
                TpMembership::StartInside
            ),
            Err(Error::NoLabelsForClass(_))
        ));
    }

    #[test]
    fn sweep_exclusion_collapses_offset_copies() {
        // Two planted copies; without the exclusion zone the positions
        // adjacent to each plant would be accepted as additional TPs long
        // before any foreign ground is reached.
        let mut t = noise(45, 2000);
        let shape = bump(40, 8.0);
        plant(&mut t, 300, &shape);
        plant(&mut t, 700, &shape);
        let labels = vec![
            LabelInterval::new(280, 420, "feeding").unwrap(),
            LabelInterval::new(680, 820, "feeding").unwrap(),
        ];
        let query: Vec<f64> = t[300..340].to_vec();
        let score = nn_sweep(
            &t,
            &query,
            300,
            &labels,
            "feeding",
            DEFAULT_EPSILON,
            TpMembership::StartInside,
        )
        .unwrap();
        // Both plants accepted exactly once each (plus possibly stray
        // in-label windows, but never neighbors of an accepted match).
        assert!(score.matched_positions.contains(&300));
        assert!(score.matched_positions.contains(&700));
        let mut sorted = score.matched_positions.clone();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            assert!(pair[1] - pair[0] > 20, "trivial neighbors: {pair:?}");
        }
    }

    #[test]
    fn membership_rules_agree_on_interior_windows_only() {
        let spans = TargetRegions {
            spans: vec![(100, 119)],
            membership: TpMembership::StartInside,
        };
        let overlap = TargetRegions {
            spans: vec![(100, 119)],
            membership: TpMembership::MinOverlap(0.9),
        };
        // A window starting late in the interval hangs out the back: the
        // start rule accepts it, the strict overlap rule does not.
        assert!(spans.is_target(112, 16));
        assert!(!overlap.is_target(112, 16));
        // Fully interior windows satisfy both.
        assert!(spans.is_target(100, 16));
        assert!(overlap.is_target(100, 16));
        // A window just before the interval: start rule rejects, a lax
        // overlap rule would accept.
        assert!(!spans.is_target(99, 16));
        assert!(TargetRegions {
            spans: vec![(100, 119)],
            membership: TpMembership::MinOverlap(0.5),
        }
        .is_target(99, 16));
    }

    #[test]
    fn enumeration_count_matches_the_closed_form() {
        let series = MultiAxisSeries::from_values([(Axis::X, noise(46, 600))], 100.0).unwrap();
        let labels = vec![
            LabelInterval::new(100, 199, "feeding").unwrap(),
            LabelInterval::new(300, 399, "feeding").unwrap(),
        ];
        let scores = enumerate_candidates(
            &series,
            Axis::X,
            &labels,
            "feeding",
            LengthRange::new(10, 20, 10),
            3,
            DEFAULT_EPSILON,
            TpMembership::StartInside,
        )
        .unwrap();
        // Per interval of width 100: floor((100-10)/3)+1 = 31 starts at
        // m=10 and floor((100-20)/3)+1 = 27 at m=20.
        assert_eq!(scores.len(), 2 * (31 + 27));
    }

    #[test]
    fn enumeration_clips_to_the_shortest_interval_and_can_empty_out() {
        let series = MultiAxisSeries::from_values([(Axis::X, noise(47, 400))], 100.0).unwrap();
        let labels = vec![LabelInterval::new(50, 99, "feeding").unwrap()]; // width 50
        let clipped = enumerate_candidates(
            &series,
            Axis::X,
            &labels,
            "feeding",
            LengthRange::new(40, 80, 5),
            1,
            DEFAULT_EPSILON,
            TpMembership::StartInside,
        )
        .unwrap();
        assert!(clipped.iter().all(|c| c.length <= 50));

        let err = enumerate_candidates(
            &series,
            Axis::X,
            &labels,
            "feeding",
            LengthRange::new(60, 80, 5),
            1,
            DEFAULT_EPSILON,
            TpMembership::StartInside,
        );
        assert!(matches!(
            err,
            Err(Error::EmptyLengthRange { limit: 50, .. })
        ));
    }

    #[test]
    fn enumeration_skips_flat_candidates() {
        let mut values = noise(48, 400);
        for v in &mut values[120..160] {
            *v = 1.0; // flat stretch inside the label
        }
        let series = MultiAxisSeries::from_values([(Axis::X, values)], 100.0).unwrap();
        let labels = vec![LabelInterval::new(100, 199, "feeding").unwrap()];
        let scores = enumerate_candidates(
            &series,
            Axis::X,
            &labels,
            "feeding",
            LengthRange::new(20, 20, 1),
            1,
            DEFAULT_EPSILON,
            TpMembership::StartInside,
        )
        .unwrap();
        // Starts 120..=140 are windows fully inside the flat stretch.
        assert!(scores
            .iter()
            .all(|c| { c.query_position < 120 || c.query_position > 140 }));
        assert!(!scores.is_empty(), "straddling windows are kept");
    }

    fn score(tp: usize, len: usize, thr: f64, pos: usize, fp: usize) -> CandidateScore {
        CandidateScore {
            query_position: pos,
            length: len,
            true_positives: tp,
            false_positives: fp,
            threshold_distance: thr,
            matched_positions: vec![pos],
            stop_distance: None,
        }
    }

    #[test]
    fn selection_prefers_tp_then_length_then_tight_threshold_then_position() {
        let series = MultiAxisSeries::from_values([(Axis::X, noise(49, 200))], 100.0).unwrap();

        let pick = |cands: &[CandidateScore]| {
            select_template(&series, Axis::X, "feeding", cands)
                .unwrap()
                .source_position
        };

        // Tighter threshold wins among equals.
        assert_eq!(pick(&[score(3, 20, 0.8, 5, 0), score(3, 20, 0.5, 9, 0)]), 9);
        // Longer wins over tighter.
        assert_eq!(pick(&[score(3, 24, 0.9, 5, 0), score(3, 20, 0.1, 9, 0)]), 5);
        // More true positives beats everything.
        assert_eq!(
            pick(&[score(4, 8, 2.0, 30, 0), score(3, 24, 0.1, 5, 0)]),
            30
        );
        // Earliest position settles exact ties.
        assert_eq!(pick(&[score(3, 20, 0.5, 9, 0), score(3, 20, 0.5, 5, 0)]), 5);
        // Dirty candidates never win, whatever their TP count.
        assert_eq!(
            pick(&[score(9, 20, 0.5, 9, 1), score(1, 20, 0.5, 30, 0)]),
            30
        );
    }

    #[test]
    fn selection_with_no_clean_candidate_names_the_class() {
        let series = MultiAxisSeries::from_values([(Axis::X, noise(50, 200))], 100.0).unwrap();
        let err = select_template(&series, Axis::X, "preening", &[score(0, 20, 0.0, 5, 1)]);
        match err {
            Err(Error::NoConservedTemplate { class, .. }) => assert_eq!(class, "preening"),
            other => panic!("expected NoConservedTemplate, got {other:?}"),
        }
    }

    fn two_axis_training() -> (MultiAxisSeries, Vec<LabelInterval>) {
        let n = 6000;
        let mut x = noise(51, n);
        let mut z = noise(52, n);
        let shape_x = bump(60, 6.0);
        let shape_z: Vec<f64> = bump(60, 4.5).iter().map(|v| -v).collect();
        let mut labels = Vec::new();
        for at in [500usize, 1500, 2500, 3500, 4500] {
            plant(&mut x, at, &shape_x);
            plant(&mut z, at, &shape_z);
            labels.push(LabelInterval::new(at - 40, at + 99, "feeding").unwrap());
        }
        let series = MultiAxisSeries::from_values([(Axis::X, x), (Axis::Z, z)], 100.0).unwrap();
        (series, labels)
    }

    fn feeding_config() -> BuildConfig {
        BuildConfig {
            classes: vec![ClassSpec {
                class: "feeding".into(),
                axes: vec![Axis::X, Axis::Z],
                anchor: Axis::X,
                lengths: LengthRange::new(40, 60, 10),
                stride: 2,
            }],
            epsilon: DEFAULT_EPSILON,
            membership: TpMembership::StartInside,
            allow_partial: false,
            series_id: "unit-fixture".into(),
        }
    }

    #[test]
    fn build_learns_a_two_axis_template_with_per_axis_thresholds() {
        let (series, labels) = two_axis_training();
        let outcome = build_dictionary(&series, &labels, &feeding_config()).unwrap();
        assert!(outcome.failures.is_empty());
        let template = outcome.dictionary.template_for("feeding").unwrap();
        assert_eq!(template.anchor, Axis::X);
        assert_eq!(template.axes.len(), 2);
        assert!(template.axes[&Axis::X].threshold > 0.0);
        assert!(template.axes[&Axis::Z].threshold > 0.0);
        assert_eq!(template.axes[&Axis::X].values.len(), template.length);
        assert_eq!(template.axes[&Axis::Z].values.len(), template.length);
        assert!(
            outcome.dictionary.metadata.contains_key("search.feeding"),
            "provenance recorded"
        );
    }

    #[test]
    fn build_is_deterministic_across_runs() {
        let (series, labels) = two_axis_training();
        let a = build_dictionary(&series, &labels, &feeding_config()).unwrap();
        let b = build_dictionary(&series, &labels, &feeding_config()).unwrap();
        assert_eq!(a.dictionary, b.dictionary);
    }

    #[test]
    fn partial_builds_annotate_failing_classes() {
        let (series, labels) = two_axis_training();
        let mut labels = labels;
        // A class whose only labeled region is dead flat: every candidate
        // is skipped, so no template can exist.
        let mut x = series.axis(Axis::X).unwrap().values().to_vec();
        let z = series.axis(Axis::Z).unwrap().values().to_vec();
        for v in &mut x[5800..5900] {
            *v = 0.0;
        }
        let series = MultiAxisSeries::from_values([(Axis::X, x), (Axis::Z, z)], 100.0).unwrap();
        labels.push(LabelInterval::new(5800, 5899, "still").unwrap());

        let mut config = feeding_config();
        config.classes.push(ClassSpec {
            class: "still".into(),
            axes: vec![Axis::X],
            anchor: Axis::X,
            lengths: LengthRange::new(40, 60, 10),
            stride: 2,
        });

        // Strict mode refuses the whole build…
        assert!(build_dictionary(&series, &labels, &config).is_err());

        // …partial mode keeps the good class and annotates the bad one.
        config.allow_partial = true;
        let outcome = build_dictionary(&series, &labels, &config).unwrap();
        assert!(outcome.dictionary.template_for("feeding").is_some());
        assert!(outcome.dictionary.template_for("still").is_none());
        assert_eq!(outcome.failures.len(), 1);
        assert_eq!(outcome.failures[0].0, "still");
    }

    #[test]
    fn dictionary_refuses_duplicate_classes() {
        let (series, labels) = two_axis_training();
        let outcome = build_dictionary(&series, &labels, &feeding_config()).unwrap();
        let mut dict = outcome.dictionary;
        let dup = dict.template_for("feeding").unwrap().clone();
        assert!(matches!(dict.insert(dup), Err(Error::DuplicateClass(_))));
    }
}
