//! Seeded synthetic accelerometer archives with planted behavior motifs.
//!
//! The generator is the test oracle for the whole pipeline: it knows
//! exactly where every motif was planted, while the emitted labels are
//! deliberately weak — each interval pads the plant by a configurable
//! slack on both sides, so a learner only ever sees "somewhere in here".
//! Padded intervals never overlap, not even across classes, which keeps
//! the labels usable both as training regions and as evaluation bags.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Axis, LabelInterval, MultiAxisSeries, MIN_SUBSEQUENCE_LEN};

/// Parameterized plant shapes. All are Hann-windowed so they enter and
/// leave the noise floor smoothly, and their internal cycle counts are
/// chosen far apart so z-normalized windows of different classes stay
/// nearly orthogonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    /// A dip followed by a surge: one full (negated) sine period under
    /// the envelope. Head-down, head-up.
    ValleyPeak,
    /// A sharp three-cycle burst in the first 30% of the window, then
    /// exactly zero: the informative part is that the tail is quiet.
    TransientFlat,
    /// Four full cycles under the envelope: a sustained shake.
    Oscillation,
}

/// Render one plant shape. `amplitude` may be negative to invert the
/// shape (useful for giving each axis its own polarity).
pub fn waveform_samples(waveform: Waveform, m: usize, amplitude: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    (0..m)
        .map(|i| {
            let u = i as f64 / (m - 1).max(1) as f64;
            let env = (PI * u).sin().powi(2);
            amplitude
                * match waveform {
                    Waveform::ValleyPeak => -env * (2.0 * PI * u).sin(),
                    Waveform::TransientFlat => {
                        if u < 0.3 {
                            let v = u / 0.3;
                            (PI * v).sin().powi(2) * (6.0 * PI * v).cos()
                        } else {
                            0.0
                        }
                    }
                    Waveform::Oscillation => env * (8.0 * PI * u).sin(),
                }
        })
        .collect()
}

/// One behavior class to plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSynth {
    pub class: String,
    pub waveform: Waveform,
    /// Axes carrying the shape; other axes see only noise.
    pub axes: Vec<Axis>,
    /// Per-axis amplitude, aligned with `axes`.
    pub amplitudes: Vec<f64>,
    /// Plant duration in seconds.
    pub duration_s: f64,
    /// How many instances to plant.
    pub count: usize,
    /// Weak-label slack added on each side of every plant, in seconds.
    #[serde(default = "default_padding_s")]
    pub padding_s: f64,
}

fn default_padding_s() -> f64 {
    1.0
}

fn default_sample_rate() -> f64 {
    crate::series::DEFAULT_SAMPLE_RATE_HZ
}

/// Full description of a synthetic archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub duration_s: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    /// Standard deviation of the zero-mean Gaussian background.
    pub noise_std: f64,
    #[serde(default)]
    pub classes: Vec<ClassSynth>,
}

impl SynthSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("bad synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidConfig("duration_s must be positive".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::BadSampleRate {
                rate: self.sample_rate_hz,
            });
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig(
                "noise_std must be positive; a dead-flat background has no shapes to normalize"
                    .into(),
            ));
        }
        for c in &self.classes {
            crate::series::validate_class_name(&c.class)?;
            if c.axes.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "class {:?} plants on no axes",
                    c.class
                )));
            }
            if c.axes.len() != c.amplitudes.len() {
                return Err(Error::InvalidConfig(format!(
                    "class {:?}: {} axes but {} amplitudes",
                    c.class,
                    c.axes.len(),
                    c.amplitudes.len()
                )));
            }
            if !(c.padding_s >= 0.0 && c.padding_s.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "class {:?}: padding_s must be non-negative",
                    c.class
                )));
            }
            let m = (c.duration_s * self.sample_rate_hz).round() as usize;
            if m < MIN_SUBSEQUENCE_LEN {
                return Err(Error::InvalidConfig(format!(
                    "class {:?}: {}s at {} Hz is {} samples; need at least {}",
                    c.class, c.duration_s, self.sample_rate_hz, m, MIN_SUBSEQUENCE_LEN
                )));
            }
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }
}

/// Ground truth for one planted instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plant {
    pub class: String,
    pub position: usize,
    pub length: usize,
}

/// A generated archive: the three-axis stream, the weak labels handed to
/// a learner, and the exact plant positions withheld for oracle checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub series: MultiAxisSeries,
    pub labels: Vec<LabelInterval>,
    pub plants: Vec<Plant>,
}

const MAX_PLACEMENT_TRIES: usize = 10_000;

/// Generate an archive. Deterministic for a given `(spec, seed)` pair.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<SynthOutput> {
    spec.validate()?;
    let n = spec.samples();
    if n == 0 {
        return Err(Error::InvalidConfig("empty archive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, spec.noise_std)
        .map_err(|e| Error::InvalidConfig(format!("noise model: {e}")))?;

    // Background first, in fixed axis order, so plant scheduling never
    // perturbs the noise stream.
    let mut axes: Vec<(Axis, Vec<f64>)> = Axis::ALL
        .iter()
        .map(|&a| (a, (0..n).map(|_| normal.sample(&mut rng)).collect()))
        .collect();

    let mut taken: Vec<(usize, usize)> = Vec::new(); // padded spans, inclusive
    let mut labels = Vec::new();
    let mut plants = Vec::new();

    for c in &spec.classes {
        let m = (c.duration_s * spec.sample_rate_hz).round() as usize;
        let pad = (c.padding_s * spec.sample_rate_hz).round() as usize;
        for _ in 0..c.count {
            if n < m + 2 * pad {
                return Err(Error::InfeasibleSchedule {
                    class: c.class.clone(),
                    wanted: c.count,
                });
            }
            let hi = n - m - pad; // inclusive upper bound for the start
            let mut placed = None;
            for _ in 0..MAX_PLACEMENT_TRIES {
                let p = rng.gen_range(pad..=hi);
                let span = (p - pad, p + m - 1 + pad);
                if taken.iter().all(|&(s, e)| span.1 < s || span.0 > e) {
                    placed = Some((p, span));
                    break;
                }
            }
            let (p, span) = placed.ok_or_else(|| Error::InfeasibleSchedule {
                class: c.class.clone(),
                wanted: c.count,
            })?;
            taken.push(span);
            labels.push(LabelInterval::new(span.0, span.1, &c.class)?);
            plants.push(Plant {
                class: c.class.clone(),
                position: p,
                length: m,
            });
            for (&axis, &amplitude) in c.axes.iter().zip(&c.amplitudes) {
                let shape = waveform_samples(c.waveform, m, amplitude);
                let track = &mut axes.iter_mut().find(|(a, _)| *a == axis).unwrap().1;
                for (i, s) in shape.into_iter().enumerate() {
                    track[p + i] += s;
                }
            }
        }
    }

    labels.sort_by(|a, b| (a.start, &a.class).cmp(&(b.start, &b.class)));
    plants.sort_by(|a, b| (a.position, &a.class).cmp(&(b.position, &b.class)));
    let series = MultiAxisSeries::from_values(axes, spec.sample_rate_hz)?;
    Ok(SynthOutput {
        series,
        labels,
        plants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::bags_from_labels;

    fn demo_spec() -> SynthSpec {
        SynthSpec {
            duration_s: 120.0,
            sample_rate_hz: 100.0,
            noise_std: 0.3,
            classes: vec![
                ClassSynth {
                    class: "feeding".into(),
                    waveform: Waveform::ValleyPeak,
                    axes: vec![Axis::X, Axis::Z],
                    amplitudes: vec![2.5, -2.0],
                    duration_s: 0.8,
                    count: 5,
                    padding_s: 1.0,
                },
                ClassSynth {
                    class: "preening".into(),
                    waveform: Waveform::TransientFlat,
                    axes: vec![Axis::Y],
                    amplitudes: vec![3.0],
                    duration_s: 1.2,
                    count: 4,
                    padding_s: 0.5,
                },
            ],
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = demo_spec();
        let a = synth_generate(&spec, 7).unwrap();
        let b = synth_generate(&spec, 7).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&spec, 8).unwrap();
        assert_ne!(
            a.series.axis(Axis::X).unwrap().values()[..100],
            c.series.axis(Axis::X).unwrap().values()[..100]
        );
    }

    #[test]
    fn every_plant_sits_inside_exactly_one_same_class_interval() {
        let out = synth_generate(&demo_spec(), 11).unwrap();
        assert_eq!(out.plants.len(), 9);
        assert_eq!(out.labels.len(), 9);
        for plant in &out.plants {
            let hosts: Vec<&LabelInterval> = out
                .labels
                .iter()
                .filter(|l| {
                    l.contains(plant.position) && l.contains(plant.position + plant.length - 1)
                })
                .collect();
            assert_eq!(hosts.len(), 1, "plant at {} needs one host", plant.position);
            assert_eq!(hosts[0].class, plant.class);
        }
        // Global non-overlap means the labels double as evaluation bags.
        assert!(bags_from_labels(&out.labels).is_ok());
    }

    #[test]
    fn zero_plants_is_pure_noise() {
        let mut spec = demo_spec();
        spec.classes.clear();
        let out = synth_generate(&spec, 3).unwrap();
        assert!(out.labels.is_empty());
        assert!(out.plants.is_empty());
        assert_eq!(out.series.len(), 12_000);
    }

    #[test]
    fn crowded_schedules_are_rejected() {
        let mut spec = demo_spec();
        spec.duration_s = 10.0;
        spec.classes[0].count = 60;
        assert!(matches!(
            synth_generate(&spec, 1),
            Err(Error::InfeasibleSchedule { .. })
        ));
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = demo_spec();
        let text = toml::to_string(&spec).unwrap();
        let back = SynthSpec::from_toml_str(&text).unwrap();
        assert_eq!(spec, back);

        let hand_written = r#"
            duration_s = 60.0
            noise_std = 0.25

            [[classes]]
            class = "dustbathing"
            waveform = "oscillation"
            axes = ["x", "y", "z"]
            amplitudes = [1.5, 1.5, 2.0]
            duration_s = 2.0
            count = 3
        "#;
        let parsed = SynthSpec::from_toml_str(hand_written).unwrap();
        assert_eq!(parsed.sample_rate_hz, 100.0, "default rate applies");
        assert_eq!(parsed.classes[0].padding_s, 1.0, "default padding");
        assert_eq!(parsed.classes[0].waveform, Waveform::Oscillation);
    }

    #[test]
    fn spec_validation_catches_mismatches() {
        let mut spec = demo_spec();
        spec.classes[0].amplitudes.pop();
        assert!(spec.validate().is_err());

        let mut spec = demo_spec();
        spec.noise_std = 0.0;
        assert!(spec.validate().is_err());

        let mut spec = demo_spec();
        spec.classes[0].duration_s = 0.01; // one sample at 100 Hz
        assert!(spec.validate().is_err());
    }

    #[test]
    fn waveforms_have_their_documented_silhouettes() {
        let vp = waveform_samples(Waveform::ValleyPeak, 100, 2.0);
        let min_at = vp
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let max_at = vp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(min_at < max_at, "valley comes before peak");

        let tf = waveform_samples(Waveform::TransientFlat, 100, 2.0);
        assert!(tf[30..].iter().all(|&v| v == 0.0), "tail is exactly flat");
        assert!(tf[..30].iter().any(|&v| v.abs() > 0.5), "head is loud");

        let osc = waveform_samples(Waveform::Oscillation, 100, 2.0);
        let sign_changes = osc.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert!(sign_changes >= 6, "sustained oscillation");
    }
}
