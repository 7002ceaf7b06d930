//! Z-normalized Euclidean distance profiles.
//!
//! The distance profile of a query `Q` (length `m`) against a series `T`
//! (length `n`) is the vector of distances between the z-normalized query
//! and every z-normalized length-`m` window of `T` — `n - m + 1` entries.
//!
//! Two implementations with one contract:
//!
//! * [`naive_profile`] — the definition, window by window, O(n·m). Slow,
//!   obviously correct, and the oracle the fast path is tested against.
//! * [`ProfileEngine`] / [`fast_profile`] — O(n log n) via an FFT sliding
//!   dot product and running window statistics, using the identity
//!   `d(i)^2 = 2m · (1 - qt_i / (m · sigma_i))` for a z-normalized query,
//!   where `qt_i` is the raw dot product of the query with window `i`.
//!
//! Flat windows (std below epsilon) have no shape and get `+inf`; a flat
//! query is a domain error. Finite entries always lie in `[0, 2*sqrt(m)]`.
//!
//! The correlation identity cancels catastrophically near zero distance:
//! an exact match computed through the FFT lands at ~1e-6 rather than 0.
//! The engine therefore recomputes any entry below [`REFINE_BELOW`]
//! directly from the window values, which pins near-matches to the same
//! values the naive definition produces.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::series::{mean_std, sliding_mean_std, z_normalize, MIN_SUBSEQUENCE_LEN};

/// Entries below this are recomputed directly from the window values.
/// Well above the FFT noise floor, well below any distance that matters
/// for thresholding.
const REFINE_BELOW: f64 = 1e-2;

/// One query's distances against every window of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    distances: Vec<f64>,
    query_len: usize,
}

impl DistanceProfile {
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Length of the query this profile was computed for.
    pub fn query_len(&self) -> usize {
        self.query_len
    }

    /// Largest possible finite entry: both z-normalized vectors have norm
    /// `sqrt(m)`, so their distance cannot exceed `2*sqrt(m)`.
    pub fn max_distance(&self) -> f64 {
        2.0 * (self.query_len as f64).sqrt()
    }
}

/// A closed index band `[center - half_width, center + half_width]`,
/// clipped to the profile, whose entries are treated as trivial matches
/// of whatever was found at `center`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExclusionZone {
    pub center: usize,
    pub half_width: usize,
}

impl ExclusionZone {
    pub fn new(center: usize, half_width: usize) -> Self {
        Self { center, half_width }
    }

    /// The conventional zone for query length `m`: half-width `ceil(m/2)`.
    /// Neighbors closer than half a window are offsets of the same event,
    /// not independent matches.
    pub fn for_query_len(center: usize, m: usize) -> Self {
        Self::new(center, m.div_ceil(2))
    }

    /// First masked index.
    pub fn lo(&self) -> usize {
        self.center.saturating_sub(self.half_width)
    }

    /// Last masked index before clipping to the profile length.
    pub fn hi(&self) -> usize {
        self.center.saturating_add(self.half_width)
    }
}

/// Mask the zone to `+inf`. Idempotent; repeated application with several
/// zones masks exactly the union of the bands.
pub fn apply_exclusion(mut profile: DistanceProfile, zone: &ExclusionZone) -> DistanceProfile {
    if profile.distances.is_empty() {
        return profile;
    }
    let hi = zone.hi().min(profile.distances.len() - 1);
    for d in &mut profile.distances[zone.lo()..=hi] {
        *d = f64::INFINITY;
    }
    profile
}

fn check_window(m: usize, n: usize) -> Result<()> {
    if m < MIN_SUBSEQUENCE_LEN {
        return Err(Error::SubsequenceTooShort {
            m,
            min: MIN_SUBSEQUENCE_LEN,
        });
    }
    if m > n {
        return Err(Error::WindowLength { m, n });
    }
    Ok(())
}

/// Distance from one raw window to an already z-normalized query.
/// Returns `+inf` for flat windows. This is the definitional computation;
/// the matcher uses it to pin candidate distances independently of any
/// chunking of the surrounding stream.
pub(crate) fn window_distance(window: &[f64], z_query: &[f64], epsilon: f64) -> f64 {
    debug_assert_eq!(window.len(), z_query.len());
    let (mean, std) = mean_std(window);
    if std < epsilon {
        return f64::INFINITY;
    }
    // Divide rather than multiply by a reciprocal so an exact repeat of
    // the query z-normalizes bit-identically and lands on distance 0.
    let mut sum_sq = 0.0;
    for (w, q) in window.iter().zip(z_query) {
        let diff = (w - mean) / std - q;
        sum_sq += diff * diff;
    }
    let cap = 4.0 * window.len() as f64;
    sum_sq.min(cap).sqrt()
}

/// The distance profile computed exactly as defined: z-normalize every
/// window, take Euclidean distances. O(n·m); the oracle for
/// [`fast_profile`].
pub fn naive_profile(t: &[f64], q: &[f64], epsilon: f64) -> Result<DistanceProfile> {
    let (n, m) = (t.len(), q.len());
    check_window(m, n)?;
    let (_, q_std) = mean_std(q);
    if q_std < epsilon {
        return Err(Error::FlatQuery { epsilon });
    }
    let zq = z_normalize(q, epsilon)?;
    let distances = (0..n - m + 1)
        .map(|i| window_distance(&t[i..i + m], &zq, epsilon))
        .collect();
    Ok(DistanceProfile {
        distances,
        query_len: m,
    })
}

/// Rolling per-window moments for one window length: means in `.0`,
/// standard deviations in `.1`, shared between the cache and borrowers.
pub type WindowMoments = Arc<(Vec<f64>, Vec<f64>)>;

/// FFT-backed profile machinery for one series, reusable across many
/// queries: the series spectrum is computed once, and per-length window
/// statistics are cached on first use.
///
/// This is the batched interface the dictionary builder leans on — a
/// candidate search issues thousands of queries against one training
/// series, and everything except the query-side FFT is shared.
pub struct ProfileEngine {
    values: Vec<f64>,
    epsilon: f64,
    fft_len: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    stats: Mutex<BTreeMap<usize, WindowMoments>>,
}

impl ProfileEngine {
    pub fn new(values: &[f64], epsilon: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = values.len();
        // Next power of two at or above n: large enough that the circular
        // convolution is uncontaminated on the lags we read.
        let fft_len = n.next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        let mut spectrum: Vec<Complex<f64>> = values
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(fft_len)
            .collect();
        let mut scratch = vec![Complex::new(0.0, 0.0); forward.get_inplace_scratch_len()];
        forward.process_with_scratch(&mut spectrum, &mut scratch);

        Ok(Self {
            values: values.to_vec(),
            epsilon,
            fft_len,
            spectrum,
            forward,
            inverse,
            stats: Mutex::new(BTreeMap::new()),
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

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Cached per-window mean/std for windows of length `m`.
    pub fn window_stats(&self, m: usize) -> Result<WindowMoments> {
        if let Some(hit) = self.stats.lock().unwrap().get(&m) {
            return Ok(Arc::clone(hit));
        }
        let computed = Arc::new(sliding_mean_std(&self.values, m)?);
        let mut cache = self.stats.lock().unwrap();
        Ok(Arc::clone(cache.entry(m).or_insert_with(|| computed)))
    }

    /// Sliding dot products of `weights` against every window, via one
    /// forward FFT of the reversed weights and one inverse FFT.
    fn sliding_dot(&self, weights: &[f64]) -> Vec<f64> {
        let (n, m) = (self.values.len(), weights.len());
        let mut buf: Vec<Complex<f64>> = weights
            .iter()
            .rev()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.fft_len)
            .collect();
        let mut scratch = vec![Complex::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        let scale = 1.0 / self.fft_len as f64;
        (0..n - m + 1).map(|i| buf[i + m - 1].re * scale).collect()
    }

    /// Distance profile of `query` against the whole series.
    pub fn profile(&self, query: &[f64]) -> Result<DistanceProfile> {
        let (n, m) = (self.values.len(), query.len());
        check_window(m, n)?;
        let (_, q_std) = mean_std(query);
        if q_std < self.epsilon {
            return Err(Error::FlatQuery {
                epsilon: self.epsilon,
            });
        }
        let zq = z_normalize(query, self.epsilon)?;
        let qt = self.sliding_dot(&zq);
        let stats = self.window_stats(m)?;
        let (_, stds) = (&stats.0, &stats.1);
        let m_f = m as f64;
        let cap = 4.0 * m_f;

        let distances: Vec<f64> = qt
            .iter()
            .zip(stds)
            .enumerate()
            .map(|(i, (&dot, &std))| {
                if std < self.epsilon {
                    return f64::INFINITY;
                }
                // Query is z-normalized: zero mean, unit std, so the
                // Pearson term reduces to dot / (m * std).
                let sq = (2.0 * m_f * (1.0 - dot / (m_f * std))).clamp(0.0, cap);
                let d = sq.sqrt();
                if d < REFINE_BELOW {
                    window_distance(&self.values[i..i + m], &zq, self.epsilon)
                } else {
                    d
                }
            })
            .collect();
        Ok(DistanceProfile {
            distances,
            query_len: m,
        })
    }

    /// Profiles for several queries, in input order.
    pub fn profile_batch(&self, queries: &[&[f64]]) -> Result<Vec<DistanceProfile>> {
        queries.iter().map(|q| self.profile(q)).collect()
    }
}

/// One-shot convenience over [`ProfileEngine`] for a single query.
pub fn fast_profile(t: &[f64], q: &[f64], epsilon: f64) -> Result<DistanceProfile> {
    ProfileEngine::new(t, epsilon)?.profile(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DEFAULT_EPSILON;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_series(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-2.0f64..2.0)).collect()
    }

    #[test]
    fn naive_profile_is_zero_at_an_exact_repeat() {
        let mut t = noisy_series(3, 256);
        let motif: Vec<f64> = t[40..72].to_vec();
        t[200..232].copy_from_slice(&motif);
        let p = naive_profile(&t, &motif, DEFAULT_EPSILON).unwrap();
        assert_eq!(p.len(), 256 - 32 + 1);
        assert_eq!(p.distances()[40], 0.0);
        assert_eq!(p.distances()[200], 0.0);
    }

    #[test]
    fn naive_profile_full_length_self_match_is_single_zero() {
        let t = noisy_series(4, 64);
        let p = naive_profile(&t, &t, DEFAULT_EPSILON).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.distances()[0], 0.0);
    }

    #[test]
    fn flat_query_is_a_domain_error() {
        let t = noisy_series(5, 100);
        assert!(matches!(
            naive_profile(&t, &[3.0; 8], DEFAULT_EPSILON),
            Err(Error::FlatQuery { .. })
        ));
        assert!(matches!(
            fast_profile(&t, &[3.0; 8], DEFAULT_EPSILON),
            Err(Error::FlatQuery { .. })
        ));
    }

    #[test]
    fn flat_windows_are_infinite_in_both_paths() {
        let mut t = noisy_series(6, 200);
        for v in &mut t[80..140] {
            *v = 0.25; // a dead-flat stretch
        }
        let q: Vec<f64> = t[0..16].to_vec();
        let naive = naive_profile(&t, &q, DEFAULT_EPSILON).unwrap();
        let fast = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();
        // Windows fully inside the flat stretch have no shape.
        for i in 80..=(140 - 16) {
            assert!(naive.distances()[i].is_infinite(), "naive at {i}");
            assert!(fast.distances()[i].is_infinite(), "fast at {i}");
        }
        // And the two paths agree on exactly which entries are finite.
        for (a, b) in naive.distances().iter().zip(fast.distances()) {
            assert_eq!(a.is_finite(), b.is_finite());
        }
    }

    #[test]
    fn query_length_bounds_are_enforced() {
        let t = noisy_series(7, 64);
        assert!(matches!(
            naive_profile(&t, &t[0..3], DEFAULT_EPSILON),
            Err(Error::SubsequenceTooShort { .. })
        ));
        let long = noisy_series(8, 65);
        assert!(matches!(
            fast_profile(&t, &long, DEFAULT_EPSILON),
            Err(Error::WindowLength { .. })
        ));
    }

    #[test]
    fn fast_matches_naive_on_seeded_cases() {
        for seed in 0..24u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let n = rng.gen_range(32..1500);
            let m = rng.gen_range(MIN_SUBSEQUENCE_LEN..=(n / 2).max(MIN_SUBSEQUENCE_LEN));
            let t = noisy_series(2000 + seed, n);
            let q = noisy_series(3000 + seed, m);
            let naive = naive_profile(&t, &q, DEFAULT_EPSILON).unwrap();
            let fast = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();
            for (i, (a, b)) in naive.distances().iter().zip(fast.distances()).enumerate() {
                if *a < 1e-3 {
                    assert!((a - b).abs() < 1e-8, "seed {seed} entry {i}: {a} vs {b}");
                } else {
                    assert!(
                        ((a - b) / a).abs() < 1e-6,
                        "seed {seed} entry {i}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn fast_profile_pins_exact_matches_to_zero() {
        let mut t = noisy_series(9, 2048);
        let motif: Vec<f64> = t[100..228].to_vec();
        t[1700..1828].copy_from_slice(&motif);
        let p = fast_profile(&t, &motif, DEFAULT_EPSILON).unwrap();
        assert!(p.distances()[100] <= 1e-6, "got {}", p.distances()[100]);
        assert!(p.distances()[1700] <= 1e-6, "got {}", p.distances()[1700]);
    }

    #[test]
    fn profiles_are_invariant_to_affine_query_and_series_transforms() {
        let t = noisy_series(10, 512);
        let q = noisy_series(11, 48);
        let base = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();

        let q_scaled: Vec<f64> = q.iter().map(|v| 4.2 * v - 17.0).collect();
        let scaled_q = fast_profile(&t, &q_scaled, DEFAULT_EPSILON).unwrap();

        let t_scaled: Vec<f64> = t.iter().map(|v| 0.031 * v + 9.81).collect();
        let scaled_t = fast_profile(&t_scaled, &q, DEFAULT_EPSILON).unwrap();

        for i in 0..base.len() {
            let b = base.distances()[i];
            assert!((scaled_q.distances()[i] - b).abs() <= 1e-6 * b.max(1.0));
            assert!((scaled_t.distances()[i] - b).abs() <= 1e-6 * b.max(1.0));
        }
    }

    #[test]
    fn engine_reuse_is_identical_to_one_shot() {
        let t = noisy_series(12, 777);
        let engine = ProfileEngine::new(&t, DEFAULT_EPSILON).unwrap();
        let q1 = noisy_series(13, 32);
        let q2 = noisy_series(14, 64);
        let batch = engine.profile_batch(&[&q1, &q2]).unwrap();
        assert_eq!(batch[0], fast_profile(&t, &q1, DEFAULT_EPSILON).unwrap());
        assert_eq!(batch[1], fast_profile(&t, &q2, DEFAULT_EPSILON).unwrap());
    }

    #[test]
    fn exclusion_masks_clip_and_union() {
        let t = noisy_series(15, 64);
        let q = noisy_series(16, 8);
        let p = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();
        let len = p.len();

        // Center 10, half-width 3 masks [7, 13].
        let masked = apply_exclusion(p.clone(), &ExclusionZone::new(10, 3));
        for (i, d) in masked.distances().iter().enumerate() {
            assert_eq!(
                d.is_infinite(),
                (7..=13).contains(&i) || p.distances()[i].is_infinite()
            );
        }

        // A zone near the left edge clips to [0, 4].
        let edge = apply_exclusion(p.clone(), &ExclusionZone::new(1, 3));
        assert!(edge.distances()[..5].iter().all(|d| d.is_infinite()));

        // Half-width 0 masks exactly one entry.
        let single = apply_exclusion(p.clone(), &ExclusionZone::new(20, 0));
        assert!(single.distances()[20].is_infinite());
        assert_eq!(
            single.distances()[..20],
            p.distances()[..20],
            "neighbors untouched"
        );

        // A zone past the right edge clips to the profile end.
        let tail = apply_exclusion(p.clone(), &ExclusionZone::new(len - 1, 5));
        assert!(tail.distances()[len - 6..].iter().all(|d| d.is_infinite()));

        // Idempotence, and order-independence of a union of zones.
        let z1 = ExclusionZone::new(30, 4);
        let z2 = ExclusionZone::new(33, 2);
        let once = apply_exclusion(p.clone(), &z1);
        assert_eq!(once, apply_exclusion(once.clone(), &z1));
        let ab = apply_exclusion(apply_exclusion(p.clone(), &z1), &z2);
        let ba = apply_exclusion(apply_exclusion(p.clone(), &z2), &z1);
        assert_eq!(ab, ba);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn finite_entries_respect_the_theoretical_range(
            seed in 0u64..500,
            n in 24usize..400,
            m_frac in 0.0f64..1.0,
        ) {
            let m = (MIN_SUBSEQUENCE_LEN as f64
                + m_frac * (n / 2 - MIN_SUBSEQUENCE_LEN) as f64) as usize;
            let t = noisy_series(seed, n);
            let q = noisy_series(seed ^ 0xdead, m);
            let p = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();
            let cap = p.max_distance();
            for &d in p.distances() {
                if d.is_finite() {
                    prop_assert!(d >= 0.0);
                    prop_assert!(d <= cap, "{d} > {cap}");
                }
            }
        }

        #[test]
        fn exclusion_is_idempotent_and_monotone(
            seed in 0u64..500,
            center in 0usize..120,
            half in 0usize..40,
        ) {
            let t = noisy_series(seed, 160);
            let q = noisy_series(seed + 1, 16);
            let p = fast_profile(&t, &q, DEFAULT_EPSILON).unwrap();
            let zone = ExclusionZone::new(center.min(p.len() - 1), half);
            let once = apply_exclusion(p.clone(), &zone);
            let twice = apply_exclusion(once.clone(), &zone);
            prop_assert_eq!(&once, &twice);
            // Monotone: masking never un-masks.
            for (a, b) in p.distances().iter().zip(once.distances()) {
                prop_assert!(b.is_infinite() || a == b);
            }
        }
    }
}
