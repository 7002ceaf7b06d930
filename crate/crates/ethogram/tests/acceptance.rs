//! The release gate: one test per shipping criterion. Each prints a
//! `criterion N: PASS — …` line (visible with `--nocapture`); the test
//! name doubles as the pass/fail line in plain `cargo test` output.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ethogram::dictionary::{
    build_dictionary, enumerate_candidates, select_template, BuildConfig, CandidateScore,
    ClassSpec, LengthRange, TpMembership,
};
use ethogram::evaluate::{
    bags_from_labels, frequency_profile, metrics, mil_score, Bag, ConfusionMatrix,
};
use ethogram::matcher::{match_stream, match_windowed, MatchEvent};
use ethogram::profile::{apply_exclusion, fast_profile, naive_profile, ExclusionZone};
use ethogram::series::{Axis, LabelInterval, MultiAxisSeries, DEFAULT_EPSILON};
use ethogram::synth::{synth_generate, ClassSynth, SynthSpec, Waveform};

// ---------------------------------------------------------------- helpers

fn random_series(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    // A mix of textures: random walk with iid jitter, plus an occasional
    // dead-flat stretch to exercise the infinite-distance path.
    let mut values = Vec::with_capacity(n);
    let mut level = 0.0f64;
    while values.len() < n {
        if rng.gen_bool(0.05) {
            let hold = rng.gen_range(2..40).min(n - values.len());
            values.extend(std::iter::repeat_n(level, hold));
        } else {
            level += rng.gen_range(-0.5..0.5);
            values.push(level + rng.gen_range(-0.1..0.1));
        }
    }
    values
}

fn affine(values: &[f64], a: f64, b: f64) -> Vec<f64> {
    values.iter().map(|&v| a * v + b).collect()
}

fn affine_series(series: &MultiAxisSeries, a: f64, b: f64) -> MultiAxisSeries {
    MultiAxisSeries::from_values(
        series
            .axes()
            .map(|(axis, ts)| (axis, affine(ts.values(), a, b))),
        series.sample_rate_hz(),
    )
    .unwrap()
}

/// Three behavior classes with deliberately dissimilar waveforms.
fn three_class_spec(duration_s: f64, count: usize, noise_std: f64) -> SynthSpec {
    SynthSpec {
        duration_s,
        sample_rate_hz: 100.0,
        noise_std,
        classes: vec![
            ClassSynth {
                class: "feeding".into(),
                waveform: Waveform::ValleyPeak,
                axes: vec![Axis::X, Axis::Z],
                amplitudes: vec![1.0, 0.7],
                duration_s: 1.0,
                count,
                padding_s: 1.0,
            },
            ClassSynth {
                class: "preening".into(),
                waveform: Waveform::TransientFlat,
                axes: vec![Axis::X],
                amplitudes: vec![0.9],
                duration_s: 1.2,
                count,
                padding_s: 1.0,
            },
            ClassSynth {
                class: "dustbathing".into(),
                waveform: Waveform::Oscillation,
                axes: vec![Axis::X, Axis::Y],
                amplitudes: vec![0.8, 0.6],
                duration_s: 0.9,
                count,
                padding_s: 1.0,
            },
        ],
    }
}

fn three_class_search(series_id: &str) -> BuildConfig {
    BuildConfig {
        classes: vec![
            ClassSpec {
                class: "feeding".into(),
                axes: vec![Axis::X, Axis::Z],
                anchor: Axis::X,
                lengths: LengthRange::new(80, 120, 20),
                stride: 4,
            },
            ClassSpec {
                class: "preening".into(),
                axes: vec![Axis::X],
                anchor: Axis::X,
                lengths: LengthRange::new(100, 140, 20),
                stride: 4,
            },
            ClassSpec {
                class: "dustbathing".into(),
                axes: vec![Axis::X, Axis::Y],
                anchor: Axis::X,
                lengths: LengthRange::new(70, 110, 20),
                stride: 4,
            },
        ],
        epsilon: DEFAULT_EPSILON,
        membership: TpMembership::StartInside,
        allow_partial: false,
        series_id: series_id.into(),
    }
}

// ---------------------------------------------------- criterion 1: oracle

#[test]
fn criterion_1_fast_profile_matches_the_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC01);
    let mut worst_rel = 0.0f64;
    let trials = 120;

    for trial in 0..trials {
        let n = rng.gen_range(16..=4096);
        let max_m = (n / 2).clamp(4, 256);
        let m = rng.gen_range(4..=max_m);
        let t = random_series(&mut rng, n);
        // Half the queries are windows of the series itself, so exact
        // and near-exact matches are exercised, not just the bulk.
        let q: Vec<f64> = if rng.gen_bool(0.5) {
            let at = rng.gen_range(0..=n - m);
            t[at..at + m].to_vec()
        } else {
            random_series(&mut rng, m)
        };
        let q_flat = q.iter().all(|&v| (v - q[0]).abs() < 1e-12);

        let naive = naive_profile(&t, &q, DEFAULT_EPSILON);
        let fast = fast_profile(&t, &q, DEFAULT_EPSILON);
        if q_flat {
            assert!(naive.is_err() && fast.is_err(), "flat query must error");
            continue;
        }
        let (naive, fast) = (naive.unwrap(), fast.unwrap());
        assert_eq!(naive.len(), fast.len());
        for (i, (&nv, &fv)) in naive.distances().iter().zip(fast.distances()).enumerate() {
            if nv.is_infinite() || fv.is_infinite() {
                assert_eq!(nv, fv, "trial {trial} entry {i}: flat-window mismatch");
                continue;
            }
            let rel = (fv - nv).abs() / nv.max(1e-12);
            assert!(
                rel <= 1e-6,
                "trial {trial} entry {i}: naive {nv} vs fast {fv} (rel {rel:.3e})"
            );
            worst_rel = worst_rel.max(rel);
        }
    }

    // One query across a million samples inside the latency budget. The
    // query is taken from the first window past the midpoint with real
    // spread, so it never lands on a dead-flat stretch.
    let t = random_series(&mut rng, 1_000_000);
    let at = (500_000..)
        .find(|&i| {
            let w = &t[i..i + 100];
            w.iter().cloned().fold(f64::MIN, f64::max) - w.iter().cloned().fold(f64::MAX, f64::min)
                > 0.1
        })
        .unwrap();
    let q = t[at..at + 100].to_vec();
    let start = Instant::now();
    let profile = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(profile.len(), 1_000_000 - 100 + 1);
    assert!(
        elapsed.as_secs_f64() <= 1.0,
        "1e6-point profile took {elapsed:?}"
    );

    println!(
        "criterion 1: PASS — {trials} random pairs, worst relative error {worst_rel:.2e}; \
         1e6-point profile in {elapsed:?}"
    );
}

// --------------------------------------------------- criterion 2: metrics

#[test]
fn criterion_2_published_confusion_matrices_reproduce() {
    #[allow(clippy::type_complexity)]
    let cases: [(&str, (usize, usize, usize, usize), (f64, f64, f64), i64); 3] = [
        ("feeding", (17, 7, 4, 43), (0.71, 0.81, 0.85), 70),
        ("preening", (10, 1, 4, 56), (0.91, 0.71, 0.93), 80),
        ("dustbathing", (1, 0, 0, 70), (1.00, 1.00, 1.00), 99),
    ];
    let round2 = |v: f64| (v * 100.0).round() / 100.0;

    for (class, (tp, fp, fnn, tn), (precision, recall, accuracy), default_pct) in cases {
        let cm = ConfusionMatrix {
            target_class: class.into(),
            true_positives: tp,
            false_positives: fp,
            false_negatives: fnn,
            true_negatives: tn,
        };
        assert_eq!(cm.total_bags(), 71);
        let m = metrics(&cm);
        assert_eq!(round2(m.precision.unwrap()), precision, "{class} precision");
        assert_eq!(round2(m.recall.unwrap()), recall, "{class} recall");
        assert_eq!(round2(m.accuracy.unwrap()), accuracy, "{class} accuracy");
        assert_eq!(
            (m.default_rate.unwrap() * 100.0).round() as i64,
            default_pct,
            "{class} default rate"
        );
    }
    println!("criterion 2: PASS — three published matrices, metrics match to 2 dp");
}

// --------------------------------------- criterion 3: symbolic-series run

const SYMBOLS: &str = "dbehiorhfbesoqhebesoweqhfebesopwehfufwbeibe";
const PER_SYMBOL: usize = 4;

/// Letters map to spaced values; q/w/p (the symbols that follow the three
/// `beso` occurrences) sit far apart so no five-symbol pattern repeats.
fn symbol_value(c: char) -> f64 {
    match c {
        'q' => 60.0,
        'w' => -40.0,
        'p' => 120.0,
        _ => (c as u8 - b'a' + 1) as f64,
    }
}

fn encode_symbols(text: &str) -> Vec<f64> {
    text.chars()
        .flat_map(|c| std::iter::repeat_n(symbol_value(c), PER_SYMBOL))
        .collect()
}

#[test]
fn criterion_3_symbolic_candidate_ranking() {
    let series =
        MultiAxisSeries::from_values([(Axis::X, encode_symbols(SYMBOLS))], PER_SYMBOL as f64)
            .unwrap();
    // Three labeled spans, one per `beso` occurrence (symbols 9, 16, 26),
    // each five symbols long so five-symbol candidates stay searchable.
    let labels: Vec<LabelInterval> = [(9usize, 13usize), (16, 20), (26, 30)]
        .iter()
        .map(|&(a, b)| {
            LabelInterval::new(a * PER_SYMBOL, b * PER_SYMBOL + PER_SYMBOL - 1, "green").unwrap()
        })
        .collect();

    let candidates = enumerate_candidates(
        &series,
        Axis::X,
        &labels,
        "green",
        LengthRange::new(2 * PER_SYMBOL, 5 * PER_SYMBOL, PER_SYMBOL),
        1,
        DEFAULT_EPSILON,
        TpMembership::StartInside,
    )
    .unwrap();

    let at = |pos: usize, len: usize| -> &CandidateScore {
        candidates
            .iter()
            .find(|c| c.query_position == pos && c.length == len)
            .unwrap_or_else(|| panic!("no candidate at {pos} len {len}"))
    };

    for sym in [9usize, 16, 26] {
        let pos = sym * PER_SYMBOL;
        // Two symbols ("be"): its very first zero-distance occurrence
        // lies outside every labeled span, so the sweep rejects it.
        let be = at(pos, 2 * PER_SYMBOL);
        assert_eq!(
            (be.true_positives, be.false_positives),
            (0, 1),
            "be @ {sym}"
        );
        assert_eq!(
            be.stop_distance,
            Some(0.0),
            "be @ {sym} stops on an exact match"
        );

        // Three and four symbols ("bes", "beso"): all three occurrences
        // are labeled, nothing outside comes close.
        for len_symbols in [3usize, 4] {
            let c = at(pos, len_symbols * PER_SYMBOL);
            assert_eq!(c.true_positives, 3, "len {len_symbols} @ {sym}");
            assert_eq!(c.false_positives, 0, "len {len_symbols} @ {sym}");
            assert_eq!(c.matched_positions, vec![36, 64, 104]);
            assert_eq!(c.threshold_distance, 0.0);
        }
    }

    // No five-symbol candidate is conserved: each of `besoq`, `besow`,
    // `besop` differs in its last symbol, so none reaches three clean hits.
    let best_len5 = candidates
        .iter()
        .filter(|c| c.length == 5 * PER_SYMBOL && c.is_clean())
        .map(|c| c.true_positives)
        .max()
        .unwrap_or(0);
    assert!(best_len5 < 3, "a five-symbol candidate scored {best_len5}");

    // Ranking: equal hit counts, so the longer of bes/beso wins.
    let winner = select_template(&series, Axis::X, "green", &candidates).unwrap();
    assert_eq!(winner.length, 4 * PER_SYMBOL, "length-4 pattern selected");
    assert_eq!(winner.source_position, 36);
    assert_eq!(winner.anchor_template().threshold, 0.0);
    assert_eq!(
        winner.anchor_template().values,
        encode_symbols("beso"),
        "template is the beso block"
    );

    println!(
        "criterion 3: PASS — two-symbol pattern rejected (first occurrence out of region), \
         three/four-symbol patterns 3 hits clean, four-symbol wins, no conserved five-symbol"
    );
}

// --------------------------------------- criterion 4: planted end-to-end

#[test]
fn criterion_4_planted_three_class_pipeline() {
    let start = Instant::now();

    let train_spec = three_class_spec(240.0, 12, 0.05);
    let mut test_spec = train_spec.clone();
    test_spec.noise_std = 0.025;
    let train = synth_generate(&train_spec, 41).unwrap();
    let test = synth_generate(&test_spec, 42).unwrap();

    let outcome =
        build_dictionary(&train.series, &train.labels, &three_class_search("train")).unwrap();
    let dict = outcome.dictionary;
    assert_eq!(dict.templates().len(), 3);

    // Each learned template covers at least half of the plant it was
    // cut next to.
    for template in dict.templates() {
        let t0 = template.source_position;
        let t1 = t0 + template.length;
        let best = train
            .plants
            .iter()
            .filter(|p| p.class == template.class)
            .map(|p| {
                t1.min(p.position + p.length)
                    .saturating_sub(t0.max(p.position))
            })
            .max()
            .unwrap();
        let plant_len = train
            .plants
            .iter()
            .find(|p| p.class == template.class)
            .unwrap()
            .length;
        assert!(
            2 * best >= plant_len,
            "{}: overlap {best} of plant {plant_len}",
            template.class
        );
    }

    // Held-out stream: every bag of a class contains a match of that
    // class (FN=0) and no bag of another class does (FP=0).
    let events = match_stream(&test.series, &dict).unwrap();
    let bags = bags_from_labels(&test.labels).unwrap();
    for class in ["feeding", "preening", "dustbathing"] {
        let score = mil_score(&events, &bags, class).unwrap();
        let cm = &score.matrix;
        assert_eq!(cm.false_positives, 0, "{class} FP");
        assert_eq!(cm.false_negatives, 0, "{class} FN");
        assert_eq!(cm.true_positives, 12, "{class} TP");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 60.0, "took {elapsed:?}");
    println!(
        "criterion 4: PASS — 3 classes × 12 plants recovered, held-out FP=0 FN=0, in {elapsed:?}"
    );
}

// --------------------------------------- criterion 5: chunked equivalence

#[test]
fn criterion_5_chunked_matching_equals_whole_stream() {
    // One dictionary reused across twenty fresh streams.
    let spec = three_class_spec(120.0, 6, 0.05);
    let train = synth_generate(&spec, 401).unwrap();
    let dict = build_dictionary(&train.series, &train.labels, &three_class_search("train"))
        .unwrap()
        .dictionary;
    let max_m = dict.max_template_len().unwrap();
    let min_overlap = max_m + max_m.div_ceil(2);

    let geometries = [(2048usize, min_overlap), (1500, 400)];
    let mut straddles = 0usize;
    let mut total_events = 0usize;

    for seed in 0..20u64 {
        let stream = synth_generate(&spec, 500 + seed).unwrap();
        let whole = match_stream(&stream.series, &dict).unwrap();
        total_events += whole.len();
        for &(chunk, overlap) in &geometries {
            let chunked = match_windowed(&stream.series, &dict, chunk, overlap).unwrap();
            assert_eq!(whole, chunked, "seed {seed} chunk {chunk}/{overlap}");
        }
        // Count plants cut by a chunk boundary so the equality above is
        // known to cover the interesting case, not just interior plants.
        let n = stream.series.len();
        for &(chunk, overlap) in &geometries {
            let mut begin = 0usize;
            loop {
                let end = (begin + chunk).min(n);
                if end == n {
                    break;
                }
                straddles += stream
                    .plants
                    .iter()
                    .filter(|p| p.position < end && end < p.position + p.length)
                    .count();
                begin += chunk - overlap;
            }
        }
    }
    assert!(straddles > 0, "no plant ever straddled a chunk boundary");
    println!(
        "criterion 5: PASS — 20 streams × {} geometries byte-identical \
         ({total_events} events, {straddles} boundary-straddling plants)",
        geometries.len()
    );
}

// ------------------------------------------- criterion 6: invariance suite

#[test]
fn criterion_6_documented_invariances_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC06);

    // Distance profiles are invariant under affine maps of the data
    // (same map on series and query; negative scales flip both signs).
    for trial in 0..30 {
        let n = rng.gen_range(300..2000);
        let m = rng.gen_range(8..=64);
        let t = random_series(&mut rng, n);
        // Retry the cut until the query has real spread; a query from a
        // dead-flat stretch is rejected by design, not worth this trial.
        let q = loop {
            let at = rng.gen_range(0..=n - m);
            let w = &t[at..at + m];
            let spread = w.iter().cloned().fold(f64::MIN, f64::max)
                - w.iter().cloned().fold(f64::MAX, f64::min);
            if spread > 0.05 {
                break w.to_vec();
            }
        };
        let (a, b) = loop {
            let a = rng.gen_range(-3.0f64..3.0);
            if a.abs() > 0.05 {
                break (a, rng.gen_range(-10.0f64..10.0));
            }
        };
        let base = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();
        let mapped = fast_profile(&affine(&t, a, b), &affine(&q, a, b), DEFAULT_EPSILON).unwrap();
        for (i, (&dv, &mv)) in base.distances().iter().zip(mapped.distances()).enumerate() {
            if dv.is_infinite() || mv.is_infinite() {
                assert_eq!(dv, mv, "trial {trial} entry {i}");
            } else {
                assert!(
                    (dv - mv).abs() <= 1e-6,
                    "trial {trial} entry {i}: {dv} vs {mv} (a={a}, b={b})"
                );
            }
        }
    }

    // Dictionaries and event lists built from an affine copy of the data
    // land on the same positions, lengths and matches.
    let spec = three_class_spec(120.0, 6, 0.05);
    let train = synth_generate(&spec, 601).unwrap();
    let test = synth_generate(&spec, 602).unwrap();
    let (a, b) = (2.5f64, -4.0f64);

    let dict = build_dictionary(&train.series, &train.labels, &three_class_search("t")).unwrap();
    let dict_mapped = build_dictionary(
        &affine_series(&train.series, a, b),
        &train.labels,
        &three_class_search("t"),
    )
    .unwrap();
    for (orig, mapped) in dict
        .dictionary
        .templates()
        .iter()
        .zip(dict_mapped.dictionary.templates())
    {
        assert_eq!(orig.class, mapped.class);
        assert_eq!(orig.source_position, mapped.source_position);
        assert_eq!(orig.length, mapped.length);
        for (axis, tmpl) in &orig.axes {
            let m = &mapped.axes[axis];
            assert!(
                (tmpl.threshold - m.threshold).abs() <= 1e-6 * (1.0 + tmpl.threshold),
                "{}/{axis}: thresholds {} vs {}",
                orig.class,
                tmpl.threshold,
                m.threshold
            );
        }
    }

    let events = match_stream(&test.series, &dict.dictionary).unwrap();
    let events_mapped =
        match_stream(&affine_series(&test.series, a, b), &dict_mapped.dictionary).unwrap();
    assert_eq!(events.len(), events_mapped.len());
    for (e, em) in events.iter().zip(&events_mapped) {
        assert_eq!(
            (&e.class, e.start_index, e.length),
            (&em.class, em.start_index, em.length)
        );
        for (axis, d) in &e.axis_distances {
            assert!((d - em.axis_distances[axis]).abs() <= 1e-6);
        }
    }
    assert!(!events.is_empty(), "affine check needs real matches");

    // Masking a profile twice with the same zone changes nothing more.
    for _ in 0..20 {
        let n = rng.gen_range(50..400);
        let m = rng.gen_range(4..=16);
        let t = random_series(&mut rng, n);
        let q: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        let zone = ExclusionZone::for_query_len(rng.gen_range(0..n - m + 1), m);
        let once = apply_exclusion(fast_profile(&t, &q, DEFAULT_EPSILON).unwrap(), &zone);
        let twice = apply_exclusion(once.clone(), &zone);
        assert_eq!(once.distances(), twice.distances());
    }

    // Confusion matrices partition the bags: tp+fp+fn+tn = bag count.
    for trial in 0..50 {
        let classes = ["feeding", "preening", "dustbathing"];
        let mut bags_src = Vec::new();
        let mut cursor = 0usize;
        for _ in 0..rng.gen_range(1..30) {
            let width = rng.gen_range(5..50);
            bags_src.push(
                LabelInterval::new(cursor, cursor + width, classes[rng.gen_range(0..3)]).unwrap(),
            );
            cursor += width + rng.gen_range(2..20);
        }
        let bags: Vec<Bag> = bags_from_labels(&bags_src).unwrap();
        let events: Vec<MatchEvent> = (0..rng.gen_range(0..40))
            .map(|_| MatchEvent {
                class: classes[rng.gen_range(0..3)].into(),
                start_index: rng.gen_range(0..cursor + 30),
                start_time: 0.0,
                length: rng.gen_range(4..20),
                axis_distances: [(Axis::X, rng.gen_range(0.0..5.0))].into_iter().collect(),
            })
            .collect();
        let target = classes[rng.gen_range(0..3)];
        let score = mil_score(&events, &bags, target).unwrap();
        let cm = score.matrix;
        assert_eq!(
            cm.true_positives + cm.false_positives + cm.false_negatives + cm.true_negatives,
            bags.len(),
            "trial {trial}"
        );
    }

    println!(
        "criterion 6: PASS — affine profile/dictionary/event invariance, \
         exclusion idempotence, matrix closure"
    );
}

// ------------------------------------------------ criterion 7: full day

#[test]
fn criterion_7_full_day_archive_in_chunked_mode() {
    // A 24-hour, 100 Hz, three-axis archive: 8.64M samples per axis,
    // recorded at the quieter held-out noise level.
    let day_spec = three_class_spec(86_400.0, 40, 0.025);
    let archive = synth_generate(&day_spec, 701).unwrap();
    assert_eq!(archive.series.len(), 8_640_000);
    assert_eq!(archive.series.axes().count(), 3);

    // Dictionary learned on a small separate recording.
    let train = synth_generate(&three_class_spec(240.0, 12, 0.05), 41).unwrap();
    let dict = build_dictionary(&train.series, &train.labels, &three_class_search("train"))
        .unwrap()
        .dictionary;
    assert_eq!(dict.templates().len(), 3);
    let max_m = dict.max_template_len().unwrap();

    let start = Instant::now();
    let events =
        match_windowed(&archive.series, &dict, 1 << 17, max_m + max_m.div_ceil(2)).unwrap();
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() <= 300.0,
        "day-scale match took {elapsed:?}"
    );
    assert!(
        events.len() >= 120,
        "expected at least the 120 plants to match, got {}",
        events.len()
    );

    // Hour-by-hour counts bin every event exactly once.
    let profile = frequency_profile(&events, (0.0, 86_400.0), 3600.0, 3600.0).unwrap();
    assert_eq!(profile.window_starts.len(), 24);
    assert_eq!(profile.total(), events.len());

    println!(
        "criterion 7: PASS — 8.64M × 3 samples matched in {elapsed:?} ({} events), \
         hourly bins sum to the event count",
        events.len()
    );
}
