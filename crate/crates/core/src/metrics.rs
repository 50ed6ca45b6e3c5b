//! Forecast accuracy and real-time metrics.
//!
//! MPJPE and VIM compare a prediction against ground truth at one output
//! frame. FADE inflates MPJPE by the share of the horizon spent computing the
//! forecast; FCE is the distance a limb can travel at 2000 mm/s before the
//! next forecast is ready.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::motion_data::{center_window, DataError, ForecastWindow, PoseTensor};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape([usize; 3], [usize; 3]),
    #[error("frame index {index} out of range for {frames} frames")]
    FrameIndex { index: usize, frames: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("horizon {horizon_ms} ms maps to frame {index}, outside 0..{t_out}")]
    Horizon { horizon_ms: u32, index: i64, t_out: usize },
    #[error("no windows to evaluate")]
    Empty,
    #[error("windows differ in shape or frame rate")]
    MixedWindows,
    #[error("fps measurement needs at least 10 timed iterations, got {0}")]
    TooFewIterations(usize),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
}

/// Failure reported by a [`Forecaster`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForecastError {
    #[error("input shape {got:?} does not match the model's {expected:?}")]
    Shape { expected: [usize; 3], got: [usize; 3] },
    #[error("model produced a non-finite value")]
    NonFinite,
    #[error("{0}")]
    Other(String),
}

/// Anything that maps a centered window to a centered prediction of shape
/// `[t_out][persons][joints][3]`.
pub trait Forecaster {
    fn name(&self) -> String;

    /// Trainable parameter count; zero for static methods.
    fn param_count(&self) -> usize {
        0
    }

    fn forecast(&self, window: &ForecastWindow) -> Result<PoseTensor, ForecastError>;
}

impl<F: Forecaster + ?Sized> Forecaster for &F {
    fn name(&self) -> String {
        (**self).name()
    }
    fn param_count(&self) -> usize {
        (**self).param_count()
    }
    fn forecast(&self, window: &ForecastWindow) -> Result<PoseTensor, ForecastError> {
        (**self).forecast(window)
    }
}

fn check_pair(gt: &PoseTensor, pred: &PoseTensor, frame: usize) -> Result<(), MetricError> {
    if gt.shape() != pred.shape() {
        return Err(MetricError::Shape(gt.shape(), pred.shape()));
    }
    if frame >= gt.frames() {
        return Err(MetricError::FrameIndex { index: frame, frames: gt.frames() });
    }
    if !(gt.frame(frame).iter().all(|v| v.is_finite()) && pred.frame(frame).iter().all(|v| v.is_finite())) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

/// Mean Euclidean joint error at one frame, averaged over persons and joints.
pub fn mpjpe(gt: &PoseTensor, pred: &PoseTensor, frame: usize) -> Result<f64, MetricError> {
    check_pair(gt, pred, frame)?;
    let total: f64 = gt
        .frame(frame)
        .chunks_exact(3)
        .zip(pred.frame(frame).chunks_exact(3))
        .map(|(a, b)| libm::sqrt((0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()))
        .sum();
    Ok(total / (gt.persons() * gt.joints()) as f64)
}

/// Norm of the stacked `3·J` error vector of each person at one frame,
/// averaged over persons.
pub fn vim(gt: &PoseTensor, pred: &PoseTensor, frame: usize) -> Result<f64, MetricError> {
    check_pair(gt, pred, frame)?;
    let mut total = 0.0;
    for p in 0..gt.persons() {
        let sq: f64 =
            gt.person_frame(frame, p).iter().zip(pred.person_frame(frame, p)).map(|(a, b)| (a - b) * (a - b)).sum();
        total += libm::sqrt(sq);
    }
    Ok(total / gt.persons() as f64)
}

/// Forecast-after-delay error at horizon `t_ms` for a model running at `fps`.
pub fn fade(mpjpe_t: f64, t_ms: f64, fps: f64) -> Result<f64, MetricError> {
    if !(t_ms > 0.0) {
        return Err(MetricError::NonPositive("horizon", t_ms));
    }
    if !(fps > 0.0) {
        return Err(MetricError::NonPositive("fps", fps));
    }
    Ok(mpjpe_t + mpjpe_t * (1000.0 / t_ms) * (1.0 / fps))
}

/// Fast-change error in mm for a model running at `fps`.
pub fn fce(fps: f64) -> Result<f64, MetricError> {
    if !(fps > 0.0) {
        return Err(MetricError::NonPositive("fps", fps));
    }
    Ok(2000.0 / fps)
}

/// Table rendering: integers from 100 up, one decimal below.
pub fn display_value(v: f64) -> String {
    if !v.is_finite() {
        return "-".to_string();
    }
    if libm::fabs(v) >= 100.0 {
        format!("{}", libm::round(v) as i64)
    } else {
        let r = libm::round(v * 10.0) / 10.0;
        // 99.96 rounds to 100.0 and should read as an integer
        if libm::fabs(r) >= 100.0 {
            format!("{}", r as i64)
        } else {
            format!("{r:.1}")
        }
    }
}

/// Rounded integer rendering used for the FCE column.
pub fn display_integer(v: f64) -> String {
    if v.is_finite() {
        format!("{}", libm::round(v) as i64)
    } else {
        "-".to_string()
    }
}

// ---------------------------------------------------------------------------
// Horizons
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSet {
    horizons_ms: Vec<u32>,
    fps: f64,
}

impl HorizonSet {
    /// Horizons are sorted and deduplicated.
    pub fn new(mut horizons_ms: Vec<u32>, fps: f64) -> Result<Self, MetricError> {
        if !(fps > 0.0) {
            return Err(MetricError::NonPositive("fps", fps));
        }
        if let Some(&h) = horizons_ms.iter().find(|&&h| h == 0) {
            return Err(MetricError::NonPositive("horizon", h as f64));
        }
        horizons_ms.sort_unstable();
        horizons_ms.dedup();
        Ok(Self { horizons_ms, fps })
    }

    pub fn horizons_ms(&self) -> &[u32] {
        &self.horizons_ms
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// `round(h · fps / 1000) − 1`, e.g. 1000 ms at 25 fps is index 24.
    pub fn frame_index(&self, horizon_ms: u32, t_out: usize) -> Result<usize, MetricError> {
        let index = libm::round(horizon_ms as f64 * self.fps / 1000.0) as i64 - 1;
        if index < 0 || index as usize >= t_out {
            return Err(MetricError::Horizon { horizon_ms, index, t_out });
        }
        Ok(index as usize)
    }

    pub fn frame_indices(&self, t_out: usize) -> Result<Vec<usize>, MetricError> {
        self.horizons_ms.iter().map(|&h| self.frame_index(h, t_out)).collect()
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model_name: String,
    pub param_count: usize,
    pub horizons_ms: Vec<u32>,
    pub mpjpe_mm: Vec<f64>,
    pub vim: Vec<f64>,
    /// Forecasts per second at batch size 1; absent when not measured.
    pub fps: Option<f64>,
    pub fce_mm: Option<f64>,
    pub fade_mm: Option<Vec<f64>>,
    pub sample_count: usize,
}

impl MetricReport {
    /// Fills `fps`, `fce_mm` and `fade_mm` from a throughput figure.
    pub fn with_fps(mut self, fps: f64) -> Result<Self, MetricError> {
        let fade_mm = self
            .mpjpe_mm
            .iter()
            .zip(&self.horizons_ms)
            .map(|(&m, &h)| fade(m, h as f64, fps))
            .collect::<Result<Vec<_>, _>>()?;
        self.fce_mm = Some(fce(fps)?);
        self.fade_mm = Some(fade_mm);
        self.fps = Some(fps);
        Ok(self)
    }

    pub fn mpjpe_at(&self, horizon_ms: u32) -> Option<f64> {
        self.horizons_ms.iter().position(|&h| h == horizon_ms).map(|i| self.mpjpe_mm[i])
    }

    pub fn fade_at(&self, horizon_ms: u32) -> Option<f64> {
        let i = self.horizons_ms.iter().position(|&h| h == horizon_ms)?;
        self.fade_mm.as_ref().map(|f| f[i])
    }
}

// ---------------------------------------------------------------------------
// Throughput
// ---------------------------------------------------------------------------

/// Monotonic time source in seconds.
pub trait Clock {
    fn now_seconds(&self) -> f64;
}

/// Runs `warmup` untimed forecasts, then `iters` timed forecasts at batch
/// size 1 and returns forecasts per second.
pub fn measure_fps<F: Forecaster + ?Sized, C: Clock + ?Sized>(
    model: &F,
    sample: &ForecastWindow,
    warmup: usize,
    iters: usize,
    clock: &C,
) -> Result<f64, MetricError> {
    if iters < 10 {
        return Err(MetricError::TooFewIterations(iters));
    }
    let centered = if sample.centered { sample.clone() } else { center_window(sample)? };
    for _ in 0..warmup {
        core::hint::black_box(model.forecast(core::hint::black_box(&centered))?);
    }
    let start = clock.now_seconds();
    for _ in 0..iters {
        core::hint::black_box(model.forecast(core::hint::black_box(&centered))?);
    }
    let elapsed = clock.now_seconds() - start;
    if !(elapsed > 0.0) {
        return Err(MetricError::NonPositive("elapsed time", elapsed));
    }
    Ok(iters as f64 / elapsed)
}

/// Whether and how [`evaluate`] times the model.
pub enum Timing<'a> {
    Skip,
    Measure { clock: &'a dyn Clock, warmup: usize, iters: usize },
}

/// Per-window predictions in global coordinates.
pub fn predict_global<F: Forecaster + ?Sized>(model: &F, window: &ForecastWindow) -> Result<PoseTensor, MetricError> {
    let centered = if window.centered { window.clone() } else { center_window(window)? };
    let mut pred = model.forecast(&centered)?;
    let expect = centered.target.shape();
    if pred.shape() != expect {
        return Err(ForecastError::Shape { expected: expect, got: pred.shape() }.into());
    }
    if !pred.all_finite() {
        return Err(ForecastError::NonFinite.into());
    }
    pred.translate(centered.offset);
    Ok(pred)
}

/// Accumulates per-horizon MPJPE/VIM sums.
#[derive(Debug, Clone)]
pub struct HorizonAccumulator {
    indices: Vec<usize>,
    mpjpe_sum: Vec<f64>,
    vim_sum: Vec<f64>,
    count: usize,
}

impl HorizonAccumulator {
    pub fn new(horizons: &HorizonSet, t_out: usize) -> Result<Self, MetricError> {
        let indices = horizons.frame_indices(t_out)?;
        let n = indices.len();
        Ok(Self { indices, mpjpe_sum: alloc::vec![0.0; n], vim_sum: alloc::vec![0.0; n], count: 0 })
    }

    pub fn add(&mut self, target: &PoseTensor, pred: &PoseTensor) -> Result<(), MetricError> {
        for (k, &i) in self.indices.iter().enumerate() {
            self.mpjpe_sum[k] += mpjpe(target, pred, i)?;
            self.vim_sum[k] += vim(target, pred, i)?;
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(self, model_name: String, param_count: usize, horizons: &HorizonSet) -> MetricReport {
        let n = self.count.max(1) as f64;
        MetricReport {
            model_name,
            param_count,
            horizons_ms: horizons.horizons_ms().to_vec(),
            mpjpe_mm: self.mpjpe_sum.iter().map(|s| s / n).collect(),
            vim: self.vim_sum.iter().map(|s| s / n).collect(),
            fps: None,
            fce_mm: None,
            fade_mm: None,
            sample_count: self.count,
        }
    }
}

pub(crate) fn check_uniform(windows: &[ForecastWindow]) -> Result<&ForecastWindow, MetricError> {
    let first = windows.first().ok_or(MetricError::Empty)?;
    let uniform = windows.iter().all(|w| {
        w.input.shape() == first.input.shape() && w.target.shape() == first.target.shape() && w.fps == first.fps
    });
    if uniform {
        Ok(first)
    } else {
        Err(MetricError::MixedWindows)
    }
}

/// Dataset-level evaluation: centers each window, forecasts, restores global
/// coordinates and averages per-horizon errors over all samples.
pub fn evaluate<F: Forecaster + ?Sized>(
    model: &F,
    windows: &[ForecastWindow],
    horizons: &HorizonSet,
    timing: Timing<'_>,
) -> Result<MetricReport, MetricError> {
    let first = check_uniform(windows)?;
    let mut acc = HorizonAccumulator::new(horizons, first.t_out())?;
    for w in windows {
        let global_target = if w.centered { crate::motion_data::uncenter_window(w)?.target } else { w.target.clone() };
        let pred = predict_global(model, w)?;
        acc.add(&global_target, &pred)?;
    }
    let report = acc.finish(model.name(), model.param_count(), horizons);
    match timing {
        Timing::Skip => Ok(report),
        Timing::Measure { clock, warmup, iters } => {
            let fps = measure_fps(model, first, warmup, iters, clock)?;
            report.with_fps(fps)
        }
    }
}
