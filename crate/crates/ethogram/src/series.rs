//! Core series types and the normalization primitives everything else is
//! built on.
//!
//! All indices are 0-based in memory. File formats and log output use
//! 1-based sample indices; the conversion happens at the I/O boundary and
//! nowhere else.
//!
//! Z-normalization uses the population standard deviation (divide by `n`,
//! not `n - 1`). A window whose standard deviation falls below the caller's
//! epsilon is *flat*: it has no shape, z-normalizes to all zeros, and is
//! excluded from distance computations downstream.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Shortest subsequence that still has a meaningful z-normalized shape.
/// Below this, nearly every window is an affine image of every other.
pub const MIN_SUBSEQUENCE_LEN: usize = 4;

/// Default flatness threshold for the standard deviation of a window.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Default sampling rate for tri-axial accelerometer archives.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 100.0;

/// Accelerometer axis identifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[serde(alias = "X")]
    X,
    #[serde(alias = "Y")]
    Y,
    #[serde(alias = "Z")]
    Z,
}

impl Axis {
    /// All axes in canonical (output-column) order.
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "X"),
            Axis::Y => write!(f, "Y"),
            Axis::Z => write!(f, "Z"),
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            other => Err(Error::InvalidConfig(format!(
                "unknown axis {other:?}, expected X, Y, or Z"
            ))),
        }
    }
}

/// A uniformly sampled scalar series.
///
/// Values are guaranteed finite and the sample rate positive; both are
/// checked once at construction so the numeric kernels can skip the
/// checks entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    sample_rate_hz: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::BadSampleRate {
                rate: sample_rate_hz,
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue { index, value });
            }
        }
        Ok(Self {
            values,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Seconds from the first sample to index `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    /// Borrow the subsequence of length `m` starting at `start`.
    ///
    /// Enforces the crate-wide minimum length of [`MIN_SUBSEQUENCE_LEN`].
    pub fn subsequence(&self, start: usize, m: usize) -> Result<&[f64]> {
        if m < MIN_SUBSEQUENCE_LEN {
            return Err(Error::SubsequenceTooShort {
                m,
                min: MIN_SUBSEQUENCE_LEN,
            });
        }
        let n = self.values.len();
        if start.checked_add(m).is_none_or(|end| end > n) {
            return Err(Error::SubsequenceOutOfBounds { start, m, n });
        }
        Ok(&self.values[start..start + m])
    }

    /// Per-window mean and population standard deviation for every window
    /// of length `m`. See [`sliding_mean_std`].
    pub fn sliding_mean_std(&self, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        sliding_mean_std(&self.values, m)
    }
}

/// A set of equally long, equally sampled axis series.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAxisSeries {
    axes: BTreeMap<Axis, TimeSeries>,
}

impl MultiAxisSeries {
    pub fn new(axes: BTreeMap<Axis, TimeSeries>) -> Result<Self> {
        let mut iter = axes.iter();
        let (first_axis, first) = iter.next().ok_or(Error::EmptyInput)?;
        for (axis, series) in iter.clone() {
            if series.len() != first.len() {
                return Err(Error::AxisLengthMismatch(format!(
                    "{first_axis} has {} samples, {axis} has {}",
                    first.len(),
                    series.len()
                )));
            }
        }
        for (axis, series) in iter {
            if series.sample_rate_hz() != first.sample_rate_hz() {
                return Err(Error::AxisLengthMismatch(format!(
                    "{first_axis} sampled at {} Hz, {axis} at {} Hz",
                    first.sample_rate_hz(),
                    series.sample_rate_hz()
                )));
            }
        }
        Ok(Self { axes })
    }

    /// Build from per-axis value vectors sharing one sample rate.
    pub fn from_values(
        axes: impl IntoIterator<Item = (Axis, Vec<f64>)>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (axis, values) in axes {
            map.insert(axis, TimeSeries::new(values, sample_rate_hz)?);
        }
        Self::new(map)
    }

    pub fn axis(&self, axis: Axis) -> Option<&TimeSeries> {
        self.axes.get(&axis)
    }

    pub fn axes(&self) -> impl Iterator<Item = (Axis, &TimeSeries)> {
        self.axes.iter().map(|(a, s)| (*a, s))
    }

    pub fn has_axis(&self, axis: Axis) -> bool {
        self.axes.contains_key(&axis)
    }

    /// Number of samples per axis (all axes are equally long).
    pub fn len(&self) -> usize {
        self.axes.values().next().map_or(0, TimeSeries::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.axes
            .values()
            .next()
            .map_or(DEFAULT_SAMPLE_RATE_HZ, TimeSeries::sample_rate_hz)
    }
}

/// A weakly labeled region: the behavior occurs somewhere inside
/// `[start, end]` (inclusive, 0-based), but its exact onset is unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelInterval {
    pub start: usize,
    pub end: usize,
    pub class: String,
}

impl LabelInterval {
    pub fn new(start: usize, end: usize, class: impl Into<String>) -> Result<Self> {
        if start > end {
            return Err(Error::IntervalReversed { start, end });
        }
        let class = class.into();
        validate_class_name(&class)?;
        Ok(Self { start, end, class })
    }

    /// Does the window *start* position fall inside this interval?
    pub fn contains(&self, position: usize) -> bool {
        self.start <= position && position <= self.end
    }

    /// Width in samples (inclusive bounds).
    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Class names flow into every file format as bare tokens, so they are
/// restricted to `[A-Za-z0-9_-]+` at the point of entry.
pub fn validate_class_name(class: &str) -> Result<()> {
    let ok = !class.is_empty()
        && class
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(Error::BadClassName(class.to_string()))
    }
}

/// Check that intervals of the same class do not overlap.
///
/// Cross-class overlap is tolerated here (a region may genuinely carry two
/// behaviors in sloppy annotations); bag-level evaluation applies its own,
/// stricter rule.
pub fn validate_labels(labels: &[LabelInterval]) -> Result<()> {
    let mut by_class: BTreeMap<&str, Vec<&LabelInterval>> = BTreeMap::new();
    for label in labels {
        by_class.entry(&label.class).or_default().push(label);
    }
    for (class, mut intervals) in by_class {
        intervals.sort_by_key(|iv| iv.start);
        for pair in intervals.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(Error::OverlappingLabels {
                    class: class.to_string(),
                    a_start: pair[0].start,
                    a_end: pair[0].end,
                    b_start: pair[1].start,
                    b_end: pair[1].end,
                });
            }
        }
    }
    Ok(())
}

/// Mean and population standard deviation of a slice, two-pass.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Z-normalize a window: subtract its mean, divide by its population
/// standard deviation.
///
/// A flat window (std below `epsilon`) has no shape; it maps to all zeros
/// rather than amplifying noise by a near-zero divisor.
pub fn z_normalize(values: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mean, std) = mean_std(values);
    if std < epsilon {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

/// Kahan-compensated accumulator. The sliding statistics walk adds and
/// removes one sample per step; without compensation the drift over a
/// multi-million-sample archive would eat the 1e-9 accuracy budget.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Refresh the running sums from scratch this often, capping any residual
/// drift independently of stream length.
const REFRESH_INTERVAL: usize = 1 << 16;

/// Mean and population standard deviation of every length-`m` window of
/// `values`, in O(n).
///
/// Returns `(means, stds)`, each of length `n - m + 1`. Uses compensated
/// running sums with periodic refresh, so the result stays within 1e-9 of
/// a direct per-window computation even for multi-million-sample streams.
pub fn sliding_mean_std(values: &[f64], m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = values.len();
    if m == 0 || m > n {
        return Err(Error::WindowLength { m, n });
    }
    let count = n - m + 1;
    let mut means = Vec::with_capacity(count);
    let mut stds = Vec::with_capacity(count);
    let inv_m = 1.0 / m as f64;

    let mut sum = Compensated::default();
    let mut sum_sq = Compensated::default();
    let fill = |sum: &mut Compensated, sum_sq: &mut Compensated, window: &[f64]| {
        *sum = Compensated::default();
        *sum_sq = Compensated::default();
        for &v in window {
            sum.add(v);
            sum_sq.add(v * v);
        }
    };
    fill(&mut sum, &mut sum_sq, &values[..m]);

    for i in 0..count {
        if i > 0 {
            if i % REFRESH_INTERVAL == 0 {
                fill(&mut sum, &mut sum_sq, &values[i..i + m]);
            } else {
                let incoming = values[i + m - 1];
                let outgoing = values[i - 1];
                sum.add(incoming);
                sum.add(-outgoing);
                sum_sq.add(incoming * incoming);
                sum_sq.add(-(outgoing * outgoing));
            }
        }
        let mean = sum.value() * inv_m;
        let var = (sum_sq.value() * inv_m - mean * mean).max(0.0);
        let mut std = var.sqrt();
        // E[x^2] - mean^2 cancels when a window's spread is tiny next to
        // its mean, and the subsequent sqrt amplifies the damage. Such
        // windows are rare in real signals, so recompute them directly;
        // the threshold scales with mean^2 because so does the error.
        if std < 1e-4 * (1.0 + mean * mean) {
            std = mean_std(&values[i..i + m]).1;
        }
        means.push(mean);
        stds.push(std);
    }
    Ok((means, stds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn z_normalize_three_point_ramp() {
        // Population std of [1,2,3] is sqrt(2/3); the ends land on
        // +-sqrt(3/2) exactly.
        let z = z_normalize(&[1.0, 2.0, 3.0], DEFAULT_EPSILON).unwrap();
        let expected = 1.224_744_871_391_589_f64;
        assert!((z[0] + expected).abs() < 1e-12);
        assert!(z[1].abs() < 1e-12);
        assert!((z[2] - expected).abs() < 1e-12);
    }

    #[test]
    fn z_normalize_flat_window_is_all_zeros() {
        let z = z_normalize(&[7.5; 64], DEFAULT_EPSILON).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn z_normalize_rejects_empty() {
        assert!(matches!(
            z_normalize(&[], DEFAULT_EPSILON),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn z_normalize_is_idempotent() {
        let xs: Vec<f64> = (0..97)
            .map(|i| ((i * 37) % 17) as f64 * 0.3 - 2.0)
            .collect();
        let once = z_normalize(&xs, DEFAULT_EPSILON).unwrap();
        let twice = z_normalize(&once, DEFAULT_EPSILON).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn sliding_stats_small_fixture() {
        let (means, stds) = sliding_mean_std(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(means, vec![1.5, 2.5, 3.5]);
        for s in stds {
            assert!((s - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sliding_stats_rejects_bad_window() {
        assert!(sliding_mean_std(&[1.0, 2.0], 0).is_err());
        assert!(sliding_mean_std(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn sliding_stats_match_direct_on_long_noisy_stream() {
        // One million samples, checked against direct two-pass statistics
        // at scattered positions: the compensated walk must hold 1e-9.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let m = 173;
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-8.0f64..8.0) + 9.81).collect();
        let (means, stds) = sliding_mean_std(&values, m).unwrap();
        let check = |i: usize| {
            let (dm, ds) = mean_std(&values[i..i + m]);
            assert!(
                (means[i] - dm).abs() < 1e-9,
                "mean drift at {i}: {} vs {dm}",
                means[i]
            );
            assert!(
                (stds[i] - ds).abs() < 1e-9,
                "std drift at {i}: {} vs {ds}",
                stds[i]
            );
        };
        for k in 0..1000 {
            check(k * 997 % (n - m + 1));
        }
        check(n - m); // last window
    }

    #[test]
    fn subsequence_bounds_and_minimum_length() {
        let ts = TimeSeries::new((0..10).map(|i| i as f64).collect(), 100.0).unwrap();
        assert_eq!(ts.subsequence(2, 4).unwrap(), &[2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(
            ts.subsequence(0, 3),
            Err(Error::SubsequenceTooShort { m: 3, min: 4 })
        ));
        assert!(matches!(
            ts.subsequence(7, 4),
            Err(Error::SubsequenceOutOfBounds { .. })
        ));
    }

    #[test]
    fn time_series_rejects_non_finite_and_bad_rate() {
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN], 100.0),
            Err(Error::NonFiniteValue { index: 1, .. })
        ));
        assert!(TimeSeries::new(vec![1.0], 0.0).is_err());
        assert!(TimeSeries::new(vec![], 100.0).is_err());
    }

    #[test]
    fn multi_axis_requires_equal_lengths() {
        let err =
            MultiAxisSeries::from_values([(Axis::X, vec![0.0; 5]), (Axis::Z, vec![0.0; 6])], 100.0);
        assert!(matches!(err, Err(Error::AxisLengthMismatch(_))));
    }

    #[test]
    fn label_intervals_validate_overlap_per_class() {
        let labels = vec![
            LabelInterval::new(0, 10, "feeding").unwrap(),
            LabelInterval::new(5, 15, "preening").unwrap(), // cross-class overlap is fine here
            LabelInterval::new(20, 30, "feeding").unwrap(),
        ];
        validate_labels(&labels).unwrap();

        let clash = vec![
            LabelInterval::new(0, 10, "feeding").unwrap(),
            LabelInterval::new(10, 20, "feeding").unwrap(),
        ];
        assert!(matches!(
            validate_labels(&clash),
            Err(Error::OverlappingLabels { .. })
        ));
    }

    #[test]
    fn class_names_are_token_safe() {
        assert!(validate_class_name("dust-bathing_2").is_ok());
        assert!(validate_class_name("").is_err());
        assert!(validate_class_name("two words").is_err());
        assert!(validate_class_name("a,b").is_err());
    }

    proptest! {
        #[test]
        fn z_normalize_affine_invariant(
            xs in proptest::collection::vec(-50.0f64..50.0, 4..200),
            a in 0.01f64..100.0,
            b in -1e3f64..1e3,
        ) {
            let z = z_normalize(&xs, DEFAULT_EPSILON).unwrap();
            let transformed: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let zt = z_normalize(&transformed, DEFAULT_EPSILON).unwrap();
            // Skip windows the transform flattens below the threshold.
            prop_assume!(z.iter().any(|&v| v != 0.0) == zt.iter().any(|&v| v != 0.0));
            for (p, q) in z.iter().zip(&zt) {
                prop_assert!((p - q).abs() < 1e-9, "{p} vs {q}");
            }
        }

        #[test]
        fn sliding_stats_agree_with_direct(
            xs in proptest::collection::vec(-100.0f64..100.0, 2..400),
            m_frac in 0.0f64..1.0,
        ) {
            let n = xs.len();
            let m = 1 + ((n - 1) as f64 * m_frac) as usize;
            let (means, stds) = sliding_mean_std(&xs, m).unwrap();
            prop_assert_eq!(means.len(), n - m + 1);
            for i in 0..means.len() {
                let (dm, ds) = mean_std(&xs[i..i + m]);
                prop_assert!((means[i] - dm).abs() < 1e-9);
                prop_assert!((stds[i] - ds).abs() < 1e-9);
            }
        }

        #[test]
        fn z_normalized_output_has_zero_mean_unit_std(
            xs in proptest::collection::vec(-50.0f64..50.0, 8..100),
        ) {
            let z = z_normalize(&xs, DEFAULT_EPSILON).unwrap();
            prop_assume!(z.iter().any(|&v| v != 0.0));
            let (mean, std) = mean_std(&z);
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((std - 1.0).abs() < 1e-9);
        }
    }
}
