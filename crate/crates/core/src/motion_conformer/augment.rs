//! Geometric augmentation of windows and span masking of model inputs.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::motion_data::ForecastWindow;
use crate::tensor::{Mat, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeoAugSpec {
    pub enabled: bool,
    /// Yaw is drawn uniformly from `[-yaw_range, yaw_range]` radians.
    pub yaw_range: f64,
    pub scale_range: [f64; 2],
}

impl Default for GeoAugSpec {
    fn default() -> Self {
        Self { enabled: true, yaw_range: core::f64::consts::PI, scale_range: [0.9, 1.1] }
    }
}

impl GeoAugSpec {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }
}

/// Rotates every point by `yaw` about the vertical (y) axis and scales by
/// `scale`, about the origin.
pub fn yaw_scale(w: &ForecastWindow, yaw: f64, scale: f64) -> ForecastWindow {
    let (s, c) = (libm::sin(yaw), libm::cos(yaw));
    let apply = |data: &mut [f64]| {
        for p in data.chunks_exact_mut(3) {
            let (x, y, z) = (p[0], p[1], p[2]);
            p[0] = scale * (c * x + s * z);
            p[1] = scale * y;
            p[2] = scale * (-s * x + c * z);
        }
    };
    let mut out = w.clone();
    apply(out.input.data_mut());
    apply(out.target.data_mut());
    out
}

/// One random yaw and one random scale per window, identical for input and
/// target.
pub fn geometric_augment<R: Rng + ?Sized>(w: &ForecastWindow, spec: &GeoAugSpec, rng: &mut R) -> ForecastWindow {
    if !spec.enabled {
        return w.clone();
    }
    let yaw = if spec.yaw_range > 0.0 { rng.random_range(-spec.yaw_range..=spec.yaw_range) } else { 0.0 };
    let [lo, hi] = spec.scale_range;
    let scale = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    yaw_scale(w, yaw, scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecAugSpec {
    pub enabled: bool,
    pub time_masks: usize,
    pub time_mask_max: usize,
    pub channel_masks: usize,
    pub channel_mask_max: usize,
}

impl Default for SpecAugSpec {
    fn default() -> Self {
        Self { enabled: true, time_masks: 2, time_mask_max: 10, channel_masks: 2, channel_mask_max: 6 }
    }
}

impl SpecAugSpec {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskAxis {
    Time,
    Channel,
}

/// A contiguous span `[start, start + width)` on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSpan {
    pub axis: MaskAxis,
    pub start: usize,
    pub width: usize,
}

/// Draws the spans for one `[rows, cols]` input. Widths are uniform in
/// `0..=max`, clamped to the axis length.
pub fn sample_masks<R: Rng + ?Sized>(rows: usize, cols: usize, spec: &SpecAugSpec, rng: &mut R) -> Vec<MaskSpan> {
    let mut spans = Vec::new();
    if !spec.enabled {
        return spans;
    }
    let mut draw = |axis, count: usize, max: usize, len: usize, spans: &mut Vec<MaskSpan>| {
        for _ in 0..count {
            let width = rng.random_range(0..=max.min(len));
            let start = rng.random_range(0..=len - width);
            spans.push(MaskSpan { axis, start, width });
        }
    };
    draw(MaskAxis::Time, spec.time_masks, spec.time_mask_max, rows, &mut spans);
    draw(MaskAxis::Channel, spec.channel_masks, spec.channel_mask_max, cols, &mut spans);
    spans
}

pub fn apply_masks<T: Real>(x: &mut Mat<T>, spans: &[MaskSpan]) {
    let cols = x.cols();
    for s in spans {
        match s.axis {
            MaskAxis::Time => {
                for r in s.start..s.start + s.width {
                    x.row_mut(r).fill(T::zero());
                }
            }
            MaskAxis::Channel => {
                for r in 0..x.rows() {
                    x.row_mut(r)[s.start..(s.start + s.width).min(cols)].fill(T::zero());
                }
            }
        }
    }
}

/// Masks random time and channel spans of a model input with zeros.
pub fn spec_augment<T: Real, R: Rng + ?Sized>(x: &Mat<T>, spec: &SpecAugSpec, rng: &mut R) -> Mat<T> {
    let spans = sample_masks(x.rows(), x.cols(), spec, rng);
    let mut out = x.clone();
    apply_masks(&mut out, &spans);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mpjpe;
    use crate::motion_data::{center_window, make_windows, synth_corpus, MotionParams, PersonMode, WindowSpec};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn window(seed: u64) -> ForecastWindow {
        let seq = synth_corpus(seed, 1, 25.0, 40, 1, &MotionParams::default()).unwrap();
        let spec = WindowSpec::new(10, 5, 1).unwrap();
        center_window(&make_windows(&seq[0], &spec, PersonMode::Separate)[3]).unwrap()
    }

    fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
        libm::sqrt((0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum())
    }

    #[test]
    fn zero_yaw_unit_scale_is_identity() {
        let w = window(1);
        assert_eq!(yaw_scale(&w, 0.0, 1.0), w);
        let spec = GeoAugSpec { enabled: true, yaw_range: 0.0, scale_range: [1.0, 1.0] };
        assert_eq!(geometric_augment(&w, &spec, &mut ChaCha8Rng::seed_from_u64(0)), w);
    }

    #[test]
    fn half_turn_mirrors_x_and_z() {
        let w = window(2);
        let r = yaw_scale(&w, core::f64::consts::PI, 1.0);
        for (a, b) in w.input.data().chunks(3).zip(r.input.data().chunks(3)) {
            assert!((b[0] + a[0]).abs() < 1e-9);
            assert_eq!(b[1], a[1]);
            assert!((b[2] + a[2]).abs() < 1e-9);
        }
        let q = yaw_scale(&w, core::f64::consts::FRAC_PI_2, 1.0);
        let (a, b) = (w.target.point(0, 0, 4), q.target.point(0, 0, 4));
        // R_y(π/2): x' = z, z' = −x
        assert!((b[0] - a[2]).abs() < 1e-9 && (b[2] + a[0]).abs() < 1e-9);
    }

    #[test]
    fn oracle_error_scales_with_scale_factor() {
        let w = window(3);
        let pred = {
            let mut p = w.target.clone();
            p.translate([30.0, -10.0, 5.0]);
            p
        };
        let mut pw = w.clone();
        pw.target = pred;
        let s = 1.07;
        let (aw, ap) = (yaw_scale(&w, 0.9, s), yaw_scale(&pw, 0.9, s));
        for f in 0..w.t_out() {
            let before = mpjpe(&w.target, &pw.target, f).unwrap();
            let after = mpjpe(&aw.target, &ap.target, f).unwrap();
            assert!((after - s * before).abs() < 1e-9);
        }
    }

    #[test]
    fn disabled_spec_is_identity() {
        let x = Mat::<f64>::from_fn(50, 39, |r, c| (r * 39 + c) as f64 + 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(spec_augment(&x, &SpecAugSpec::disabled(), &mut rng), x);
    }

    #[test]
    fn single_time_mask_zeros_consecutive_frames() {
        let mut x = Mat::<f64>::from_fn(50, 39, |r, c| (r * 39 + c) as f64 + 1.0);
        let orig = x.clone();
        apply_masks(&mut x, &[MaskSpan { axis: MaskAxis::Time, start: 12, width: 5 }]);
        let zero_rows: Vec<usize> = (0..50).filter(|&r| x.row(r).iter().all(|&v| v == 0.0)).collect();
        assert_eq!(zero_rows, (12..17).collect::<Vec<_>>());
        for r in (0..50).filter(|r| !(12..17).contains(r)) {
            assert_eq!(x.row(r), orig.row(r));
        }
    }

    proptest! {
        #[test]
        fn mask_count_matches_union_area(seed in any::<u64>(), rows in 5usize..60, cols in 3usize..80) {
            let spec = SpecAugSpec { enabled: true, time_masks: 3, time_mask_max: 10, channel_masks: 3, channel_mask_max: 6 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spans = sample_masks(rows, cols, &spec, &mut rng);
            let mut x = Mat::<f64>::from_fn(rows, cols, |_, _| 1.0);
            apply_masks(&mut x, &spans);
            let zeros = x.data().iter().filter(|&&v| v == 0.0).count();
            // inclusion–exclusion over the time-row set and channel-column set
            let mut time = alloc::vec![false; rows];
            let mut chan = alloc::vec![false; cols];
            for s in &spans {
                let max = match s.axis { MaskAxis::Time => 10, MaskAxis::Channel => 6 };
                prop_assert!(s.width <= max);
                let flags = match s.axis { MaskAxis::Time => &mut time, MaskAxis::Channel => &mut chan };
                flags[s.start..s.start + s.width].iter_mut().for_each(|f| *f = true);
            }
            let tr = time.iter().filter(|&&f| f).count();
            let cc = chan.iter().filter(|&&f| f).count();
            prop_assert_eq!(zeros, tr * cols + cc * rows - tr * cc);
        }

        #[test]
        fn augmentation_preserves_distance_ratios(seed in any::<u64>()) {
            let w = window(seed % 50);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = geometric_augment(&w, &GeoAugSpec::default(), &mut rng);
            let pairs = [
                (w.input.point(0, 0, 0), w.target.point(4, 0, 12), a.input.point(0, 0, 0), a.target.point(4, 0, 12)),
                (w.input.point(9, 0, 3), w.input.point(2, 0, 9), a.input.point(9, 0, 3), a.input.point(2, 0, 9)),
                (w.target.point(1, 0, 7), w.target.point(3, 0, 1), a.target.point(1, 0, 7), a.target.point(3, 0, 1)),
            ];
            let ratios: Vec<f64> = pairs.iter().map(|(p, q, pa, qa)| distance(*pa, *qa) / distance(*p, *q)).collect();
            prop_assert!(ratios.iter().all(|r| (0.9 - 1e-9..=1.1 + 1e-9).contains(r)));
            prop_assert!((ratios[0] - ratios[1]).abs() < 1e-9 && (ratios[1] - ratios[2]).abs() < 1e-9);
        }
    }
}
