//! Scanning an unlabeled stream with a dictionary.
//!
//! A stream position matches a template when every axis of the template
//! is strictly below its threshold at that position (ties excluded). Raw
//! matches of one class are then thinned greedily in ascending
//! anchor-axis distance, so overlapping detections collapse onto the most
//! confident one; detections of different classes never suppress each
//! other.
//!
//! [`match_windowed`] processes the stream in bounded-memory chunks and
//! is contractually byte-identical to [`match_stream`]. The trick is that
//! the FFT profile is only a prefilter: every surviving position is
//! re-scored directly from the original samples, which is a pure function
//! of the window and the template and therefore cannot depend on where
//! chunk boundaries fell. The prefilter margin is wide enough that FFT
//! rounding can never hide a position the direct test would accept.

use std::collections::{BTreeMap, BTreeSet};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::profile::{window_distance, ExclusionZone, ProfileEngine};
use crate::series::{mean_std, z_normalize, Axis, MultiAxisSeries};

/// Relative and absolute slack added to a template's threshold when the
/// FFT profile preselects positions for direct re-scoring. Orders of
/// magnitude beyond observed FFT error; costs only a few extra direct
/// distance evaluations.
const PREFILTER_REL: f64 = 1e-4;
const PREFILTER_ABS: f64 = 1e-6;

/// One detected behavior instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchEvent {
    pub class: String,
    /// 0-based sample index where the matched window starts.
    pub start_index: usize,
    /// `start_index / sample_rate`, in seconds from the stream origin.
    pub start_time: f64,
    /// Matched window length (the template's length).
    pub length: usize,
    /// Distance per template axis; every entry is strictly below that
    /// axis's threshold.
    pub axis_distances: BTreeMap<Axis, f64>,
}

/// A threshold crossing before overlap suppression.
struct RawMatch {
    template: usize,
    position: usize,
    anchor_distance: f64,
    distances: BTreeMap<Axis, f64>,
}

/// Template axis values z-normalized once up front, so the per-window
/// direct distance never re-derives them.
struct PreparedTemplate {
    z_axes: BTreeMap<Axis, Vec<f64>>,
}

fn prepare_templates(series: &MultiAxisSeries, dict: &Dictionary) -> Result<Vec<PreparedTemplate>> {
    if let Some(max_m) = dict.max_template_len() {
        if max_m > series.len() {
            return Err(Error::WindowLength {
                m: max_m,
                n: series.len(),
            });
        }
    }
    dict.templates()
        .iter()
        .map(|t| {
            let mut z_axes = BTreeMap::new();
            for (&axis, at) in &t.axes {
                if !series.has_axis(axis) {
                    return Err(Error::AxisMissing {
                        class: t.class.clone(),
                        axis,
                    });
                }
                if mean_std(&at.values).1 < dict.epsilon {
                    return Err(Error::FlatQuery {
                        epsilon: dict.epsilon,
                    });
                }
                z_axes.insert(axis, z_normalize(&at.values, dict.epsilon)?);
            }
            Ok(PreparedTemplate { z_axes })
        })
        .collect()
}

/// Collect threshold crossings on one contiguous span of the stream.
/// `offset` translates span-local positions back to stream coordinates.
// `!(d < threshold)` rather than `d >= threshold`: flat stream windows
// produce +inf distances and must be rejected, and the negated form also
// rejects any NaN instead of silently admitting it.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn collect_raw_matches(
    axes: &BTreeMap<Axis, &[f64]>,
    dict: &Dictionary,
    prepared: &[PreparedTemplate],
    offset: usize,
    out: &mut Vec<RawMatch>,
) -> Result<()> {
    // One engine per distinct anchor axis; non-anchor axes are only ever
    // probed directly and need no FFT machinery.
    let mut engines: BTreeMap<Axis, ProfileEngine> = BTreeMap::new();
    for template in dict.templates() {
        if let std::collections::btree_map::Entry::Vacant(slot) = engines.entry(template.anchor) {
            slot.insert(ProfileEngine::new(axes[&template.anchor], dict.epsilon)?);
        }
    }

    for (ti, template) in dict.templates().iter().enumerate() {
        let m = template.length;
        if axes[&template.anchor].len() < m {
            continue;
        }
        let anchor = &template.axes[&template.anchor];
        let profile = engines[&template.anchor].profile(&anchor.values)?;
        let cut = anchor.threshold * (1.0 + PREFILTER_REL) + PREFILTER_ABS;
        let z = &prepared[ti].z_axes;

        for (i, &coarse) in profile.distances().iter().enumerate() {
            if coarse >= cut {
                continue;
            }
            let da = window_distance(
                &axes[&template.anchor][i..i + m],
                &z[&template.anchor],
                dict.epsilon,
            );
            if !(da < anchor.threshold) {
                continue;
            }
            let mut distances = BTreeMap::new();
            distances.insert(template.anchor, da);
            let mut all_below = true;
            for (&axis, at) in &template.axes {
                if axis == template.anchor {
                    continue;
                }
                let d = window_distance(&axes[&axis][i..i + m], &z[&axis], dict.epsilon);
                if !(d < at.threshold) {
                    all_below = false;
                    break;
                }
                distances.insert(axis, d);
            }
            if all_below {
                out.push(RawMatch {
                    template: ti,
                    position: offset + i,
                    anchor_distance: da,
                    distances,
                });
            }
        }
    }
    Ok(())
}

/// Thin raw matches into events: per class, accept in ascending anchor
/// distance (ties by position), each acceptance excluding ±⌈m/2⌉.
fn reduce_to_events(
    mut raw: Vec<RawMatch>,
    dict: &Dictionary,
    sample_rate: f64,
) -> Vec<MatchEvent> {
    // Chunk overlap can present the same crossing twice; the copies are
    // byte-identical (direct distances are pure functions of the data),
    // so keeping the first is exact.
    raw.sort_by_key(|r| (r.template, r.position));
    raw.dedup_by(|a, b| a.template == b.template && a.position == b.position);

    let mut events = Vec::new();
    for (ti, template) in dict.templates().iter().enumerate() {
        let half = ExclusionZone::for_query_len(0, template.length).half_width;
        let mut mine: Vec<&RawMatch> = raw.iter().filter(|r| r.template == ti).collect();
        mine.sort_by(|a, b| {
            a.anchor_distance
                .partial_cmp(&b.anchor_distance)
                .expect("distances below threshold are finite")
                .then(a.position.cmp(&b.position))
        });
        let mut taken: BTreeSet<usize> = BTreeSet::new();
        for r in mine {
            let lo = r.position.saturating_sub(half);
            if taken.range(lo..=r.position + half).next().is_some() {
                continue;
            }
            taken.insert(r.position);
            events.push(MatchEvent {
                class: template.class.clone(),
                start_index: r.position,
                start_time: r.position as f64 / sample_rate,
                length: template.length,
                axis_distances: r.distances.clone(),
            });
        }
    }
    events.sort_by(|a, b| {
        a.start_index
            .cmp(&b.start_index)
            .then_with(|| a.class.cmp(&b.class))
    });
    events
}

fn axis_slices(series: &MultiAxisSeries, lo: usize, hi: usize) -> BTreeMap<Axis, &[f64]> {
    series
        .axes()
        .map(|(axis, ts)| (axis, &ts.values()[lo..hi]))
        .collect()
}

/// Match the whole stream in one pass.
pub fn match_stream(series: &MultiAxisSeries, dict: &Dictionary) -> Result<Vec<MatchEvent>> {
    let prepared = prepare_templates(series, dict)?;
    let mut raw = Vec::new();
    collect_raw_matches(
        &axis_slices(series, 0, series.len()),
        dict,
        &prepared,
        0,
        &mut raw,
    )?;
    Ok(reduce_to_events(raw, dict, series.sample_rate_hz()))
}

/// Match the stream in bounded-memory chunks of `chunk` samples whose
/// neighbors share `overlap` samples. Event-for-event identical to
/// [`match_stream`]: every window is scored from the same samples either
/// way, and overlap duplicates collapse before reduction.
///
/// `overlap` must cover a full template plus its exclusion half-width so
/// no window (or suppression decision) can fall between chunks, and
/// `chunk` must exceed `2·overlap` so successive chunks make progress.
pub fn match_windowed(
    series: &MultiAxisSeries,
    dict: &Dictionary,
    chunk: usize,
    overlap: usize,
) -> Result<Vec<MatchEvent>> {
    let prepared = prepare_templates(series, dict)?;
    let max_m = match dict.max_template_len() {
        Some(m) => m,
        None => return Ok(Vec::new()),
    };
    let min_overlap = max_m + ExclusionZone::for_query_len(0, max_m).half_width;
    if overlap < min_overlap || chunk <= 2 * overlap {
        return Err(Error::ChunkGeometry {
            chunk,
            overlap,
            min_overlap,
        });
    }

    let n = series.len();
    let mut raw = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + chunk).min(n);
        collect_raw_matches(
            &axis_slices(series, start, end),
            dict,
            &prepared,
            start,
            &mut raw,
        )?;
        if end == n {
            break;
        }
        start += chunk - overlap;
    }
    Ok(reduce_to_events(raw, dict, series.sample_rate_hz()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{AxisTemplate, QueryTemplate};
    use crate::series::DEFAULT_EPSILON;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0f64..1.0)).collect()
    }

    fn bump(m: usize, amplitude: f64) -> Vec<f64> {
        (0..m)
            .map(|i| {
                let u = i as f64 / (m - 1) as f64;
                let env = (std::f64::consts::PI * u).sin().powi(2);
                amplitude * env * (2.0 * std::f64::consts::PI * 2.5 * u).cos()
            })
            .collect()
    }

    /// Overwrite (not add) so the stream carries an exact copy.
    fn emplace(values: &mut [f64], at: usize, shape: &[f64]) {
        values[at..at + shape.len()].copy_from_slice(shape);
    }

    fn single_axis_dict(class: &str, values: Vec<f64>, threshold: f64) -> Dictionary {
        let mut dict = Dictionary::new("test", DEFAULT_EPSILON);
        let mut axes = BTreeMap::new();
        axes.insert(Axis::X, AxisTemplate { values, threshold });
        dict.insert(QueryTemplate {
            class: class.into(),
            anchor: Axis::X,
            length: axes[&Axis::X].values.len(),
            source_position: 0,
            axes,
        })
        .unwrap();
        dict
    }

    fn x_series(values: Vec<f64>) -> MultiAxisSeries {
        MultiAxisSeries::from_values([(Axis::X, values)], 100.0).unwrap()
    }

    #[test]
    fn empty_dictionary_matches_nothing() {
        let series = x_series(noise(1, 4096));
        let dict = Dictionary::new("test", DEFAULT_EPSILON);
        assert!(match_stream(&series, &dict).unwrap().is_empty());
        assert!(match_windowed(&series, &dict, 2048, 256)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn one_exact_plant_yields_one_event_at_the_plant() {
        let shape = bump(64, 5.0);
        let mut values = noise(2, 20_000);
        emplace(&mut values, 7_321, &shape);
        let dict = single_axis_dict("feeding", shape, 1.0);
        let events = match_stream(&x_series(values), &dict).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].start_index, 7_321);
        assert_eq!(events[0].class, "feeding");
        assert_eq!(events[0].length, 64);
        assert_eq!(events[0].axis_distances[&Axis::X], 0.0);
        assert!((events[0].start_time - 73.21).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_strict_so_an_exact_tie_is_excluded() {
        let shape = bump(64, 5.0);
        let mut values = noise(3, 8_192);
        emplace(&mut values, 4_000, &shape);
        // The plant sits at distance exactly 0.0; a threshold of 0.0 must
        // therefore match nothing at all.
        let dict = single_axis_dict("feeding", shape, 0.0);
        assert!(match_stream(&x_series(values), &dict).unwrap().is_empty());
    }

    #[test]
    fn reduction_is_greedy_best_first_with_class_exclusion() {
        // A period-3 wave planted over 30 samples makes the windows at
        // p, p+3, …, p+12 exact copies of an 18-sample template cut from
        // it: five zero-distance crossings. Exclusion half-width is 9, so
        // greedy acceptance keeps p, drops p+3..=p+9, keeps p+12.
        let p = 1_000;
        let wave: Vec<f64> = (0..30)
            .map(|k| 4.0 * (2.0 * std::f64::consts::PI * k as f64 / 3.0).sin())
            .collect();
        let mut values = noise(4, 4_096);
        emplace(&mut values, p, &wave);
        let template: Vec<f64> = wave[..18].to_vec();
        let dict = single_axis_dict("pecking", template, 1e-3);
        let events = match_stream(&x_series(values), &dict).unwrap();
        let starts: Vec<usize> = events.iter().map(|e| e.start_index).collect();
        assert_eq!(starts, vec![p, p + 12]);
        for pair in starts.windows(2) {
            assert!(pair[1] - pair[0] >= 9, "same-class separation");
        }
    }

    #[test]
    fn multi_axis_conjunction_requires_every_axis() {
        let shape_x = bump(48, 5.0);
        let shape_z = bump(48, 3.0).iter().map(|v| -v).collect::<Vec<_>>();
        let n = 20_000;
        let mut x = noise(5, n);
        let mut z = noise(6, n);
        // Both axes agree at 4_000; at 12_000 only X carries the shape.
        emplace(&mut x, 4_000, &shape_x);
        emplace(&mut z, 4_000, &shape_z);
        emplace(&mut x, 12_000, &shape_x);
        let series = MultiAxisSeries::from_values([(Axis::X, x), (Axis::Z, z)], 100.0).unwrap();

        let mut axes = BTreeMap::new();
        axes.insert(
            Axis::X,
            AxisTemplate {
                values: shape_x,
                threshold: 1.0,
            },
        );
        axes.insert(
            Axis::Z,
            AxisTemplate {
                values: shape_z,
                threshold: 1.0,
            },
        );
        let mut dict = Dictionary::new("test", DEFAULT_EPSILON);
        dict.insert(QueryTemplate {
            class: "feeding".into(),
            anchor: Axis::X,
            length: 48,
            source_position: 0,
            axes,
        })
        .unwrap();

        let events = match_stream(&series, &dict).unwrap();
        assert_eq!(events.len(), 1, "the X-only site must not fire");
        assert_eq!(events[0].start_index, 4_000);
        assert!(events[0].axis_distances[&Axis::X] < 1.0);
        assert!(events[0].axis_distances[&Axis::Z] < 1.0);
    }

    #[test]
    fn missing_axis_is_a_domain_error_naming_the_class() {
        let shape = bump(32, 4.0);
        let mut axes = BTreeMap::new();
        axes.insert(
            Axis::Z,
            AxisTemplate {
                values: shape,
                threshold: 1.0,
            },
        );
        let mut dict = Dictionary::new("test", DEFAULT_EPSILON);
        dict.insert(QueryTemplate {
            class: "preening".into(),
            anchor: Axis::Z,
            length: 32,
            source_position: 0,
            axes,
        })
        .unwrap();
        let err = match_stream(&x_series(noise(7, 1_000)), &dict);
        match err {
            Err(Error::AxisMissing { class, axis }) => {
                assert_eq!(class, "preening");
                assert_eq!(axis, Axis::Z);
            }
            other => panic!("expected AxisMissing, got {other:?}"),
        }
    }

    #[test]
    fn chunk_geometry_is_validated() {
        let shape = bump(64, 5.0);
        let dict = single_axis_dict("feeding", shape, 1.0);
        let series = x_series(noise(8, 10_000));
        // overlap below max_m + ceil(max_m/2) = 96.
        assert!(matches!(
            match_windowed(&series, &dict, 4_096, 95),
            Err(Error::ChunkGeometry {
                min_overlap: 96,
                ..
            })
        ));
        // chunk must exceed twice the overlap.
        assert!(matches!(
            match_windowed(&series, &dict, 200, 100),
            Err(Error::ChunkGeometry { .. })
        ));
    }

    #[test]
    fn chunked_matching_is_identical_to_whole_stream() {
        let n = 30_000;
        let chunk = 8_192;
        let shape_a = bump(50, 5.0);
        let shape_b: Vec<f64> = bump(80, 4.0).iter().map(|v| -v).collect();
        let mut values = noise(9, n);
        // One plant straddles the first chunk boundary at 8_192.
        for &at in &[1_500usize, 8_160, 14_000, 22_000] {
            emplace(&mut values, at, &shape_a);
        }
        for &at in &[5_000usize, 16_300, 27_500] {
            emplace(&mut values, at, &shape_b);
        }
        let series = x_series(values);

        let mut dict = single_axis_dict("feeding", shape_a, 2.0);
        let mut axes = BTreeMap::new();
        axes.insert(
            Axis::X,
            AxisTemplate {
                values: shape_b,
                threshold: 2.0,
            },
        );
        dict.insert(QueryTemplate {
            class: "preening".into(),
            anchor: Axis::X,
            length: 80,
            source_position: 0,
            axes,
        })
        .unwrap();

        let whole = match_stream(&series, &dict).unwrap();
        let feeding = whole.iter().filter(|e| e.class == "feeding").count();
        let preening = whole.iter().filter(|e| e.class == "preening").count();
        assert_eq!((feeding, preening), (4, 3), "all plants found once each");
        assert!(whole.iter().any(|e| e.start_index == 8_160));

        for overlap in [120usize, 200, 512] {
            let chunked = match_windowed(&series, &dict, chunk, overlap).unwrap();
            assert_eq!(chunked, whole, "overlap={overlap}");
        }
        // Chunk larger than the stream degenerates to one chunk.
        let one = match_windowed(&series, &dict, 65_536, 300).unwrap();
        assert_eq!(one, whole);
    }

    #[test]
    fn training_replay_stays_inside_labeled_regions() {
        use crate::dictionary::{
            build_dictionary, BuildConfig, ClassSpec, LengthRange, TpMembership,
        };
        use crate::series::LabelInterval;

        let n = 8_000;
        let mut x = noise(10, n);
        let shape = bump(60, 6.0);
        let mut labels = Vec::new();
        for at in [600usize, 2_100, 3_600, 5_100, 6_600] {
            for (i, &s) in shape.iter().enumerate() {
                x[at + i] += s;
            }
            labels.push(LabelInterval::new(at - 40, at + 99, "feeding").unwrap());
        }
        let series = x_series(x);
        let config = BuildConfig {
            classes: vec![ClassSpec {
                class: "feeding".into(),
                axes: vec![Axis::X],
                anchor: Axis::X,
                lengths: LengthRange::new(40, 60, 10),
                stride: 2,
            }],
            epsilon: DEFAULT_EPSILON,
            membership: TpMembership::StartInside,
            allow_partial: false,
            series_id: "train".into(),
        };
        let dict = build_dictionary(&series, &labels, &config)
            .unwrap()
            .dictionary;

        // Replaying the training stream can only fire inside labeled
        // regions: the stored threshold sits strictly below the nearest
        // out-of-region distance by construction of the sweep.
        let events = match_stream(&series, &dict).unwrap();
        assert!(!events.is_empty());
        for event in &events {
            assert!(
                labels.iter().any(|l| l.contains(event.start_index)),
                "event at {} escaped the labels",
                event.start_index
            );
        }
    }
}
