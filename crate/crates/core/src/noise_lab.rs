//! Noisy-input experiments: corruption, paired noisy/clean corpora,
//! measurable-versus-real evaluation and unsupervised finetuning.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::metrics::{predict_global, Forecaster, HorizonAccumulator, HorizonSet, MetricError, MetricReport};
use crate::motion_conformer::{train, MotionConformer, SpecAugSpec, TrainConfig, TrainError, TrainHistory};
use crate::motion_data::{
    fill_invalid_frames, make_windows, DataError, ForecastWindow, JointLayout, MotionSequence, PersonMode, WindowSpec,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("invalid noise spec: {0}")]
    Spec(String),
    #[error("noisy and clean corpora are misaligned: {0}")]
    Misaligned(String),
    #[error("corpus is empty")]
    Empty,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Score threshold applied to imported estimator outputs.
pub const IMPORT_VALIDITY_THRESHOLD: f64 = 0.1;

// ---------------------------------------------------------------------------
// Gaussian corruption
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Standard deviation of each coordinate perturbation, mm.
    pub std: f64,
    /// Perturbations are clamped to `[-clip, clip]`, mm.
    pub clip: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { std: 25.0, clip: 125.0, seed: 0 }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.std.is_finite() && self.std > 0.0) {
            return Err(NoiseError::Spec(format!("std must be positive, got {}", self.std)));
        }
        if !(self.clip.is_finite() && self.clip >= self.std) {
            return Err(NoiseError::Spec(format!("clip {} must be at least std {}", self.clip, self.std)));
        }
        Ok(())
    }

    fn normal(&self) -> Normal<f64> {
        Normal::new(0.0, self.std).expect("validated std")
    }
}

/// Adds an independent clamped Gaussian draw to every value.
pub fn perturb_in_place<R: Rng + ?Sized>(data: &mut [f64], spec: &NoiseSpec, rng: &mut R) {
    let normal = spec.normal();
    for v in data {
        *v += normal.sample(rng).clamp(-spec.clip, spec.clip);
    }
}

/// Gaussian-corrupted copy of `seq`, deterministic in `spec.seed`.
pub fn add_gaussian_noise(seq: &MotionSequence, spec: &NoiseSpec) -> Result<MotionSequence, NoiseError> {
    spec.validate()?;
    let mut data = seq.data().clone();
    perturb_in_place(data.data_mut(), spec, &mut ChaCha8Rng::seed_from_u64(spec.seed));
    Ok(seq.with_data(data)?)
}

// ---------------------------------------------------------------------------
// Synthetic estimator noise
// ---------------------------------------------------------------------------

/// Emulated pose-estimator error: per-person bone-length distortion fixed for
/// the whole sequence, temporally correlated jitter, and occasional failed
/// frames with a low score and displaced joints. Synthetic stand-in for real
/// estimator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorNoise {
    /// Std of the relative length error of each bone (0.1 = 10 %).
    pub limb_scale_std: f64,
    /// Stationary std of the AR(1) jitter, mm.
    pub jitter_std: f64,
    /// AR(1) coefficient in `[0, 1)`.
    pub jitter_corr: f64,
    /// Probability that a person's frame is a failed detection.
    pub failure_rate: f64,
    pub seed: u64,
}

impl Default for EstimatorNoise {
    fn default() -> Self {
        Self { limb_scale_std: 0.1, jitter_std: 25.0, jitter_corr: 0.5, failure_rate: 0.02, seed: 0 }
    }
}

impl EstimatorNoise {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let ok = (0.0..0.5).contains(&self.limb_scale_std)
            && self.jitter_std >= 0.0
            && (0.0..1.0).contains(&self.jitter_corr)
            && (0.0..1.0).contains(&self.failure_rate);
        if ok {
            Ok(())
        } else {
            Err(NoiseError::Spec("estimator noise parameters out of range".into()))
        }
    }
}

/// `(parent, child)` pairs of a spanning forest grown from both hips over the
/// layout edges, in breadth-first order.
fn bone_tree(layout: &JointLayout) -> Vec<(usize, usize)> {
    let n = layout.len();
    let mut seen = vec![false; n];
    let mut queue = alloc::collections::VecDeque::new();
    for h in [layout.left_hip(), layout.right_hip()] {
        seen[h] = true;
        queue.push_back(h);
    }
    let mut bones = Vec::new();
    while let Some(p) = queue.pop_front() {
        for e in layout.edges() {
            let c = match *e {
                [a, b] if a == p => b,
                [a, b] if b == p => a,
                _ => continue,
            };
            if !seen[c] {
                seen[c] = true;
                bones.push((p, c));
                queue.push_back(c);
            }
        }
    }
    bones
}

/// Produces a synthetic "estimator output" for `seq` with validity scores.
/// Sequence `index` selects an independent random stream.
pub fn simulate_estimator(seq: &MotionSequence, spec: &EstimatorNoise, index: u64) -> Result<MotionSequence, NoiseError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let (frames, persons, joints) = (seq.frames(), seq.persons(), seq.joints());
    let bones = bone_tree(seq.layout());
    let mut data = seq.data().clone();
    let mut scores = vec![1.0; frames * persons];
    let innovation = spec.jitter_std * libm::sqrt(1.0 - spec.jitter_corr * spec.jitter_corr);
    for p in 0..persons {
        let scales: Vec<f64> = bones.iter().map(|_| 1.0 + spec.limb_scale_std * unit.sample(&mut rng)).collect();
        let mut jitter: Vec<f64> = (0..joints * 3).map(|_| spec.jitter_std * unit.sample(&mut rng)).collect();
        for f in 0..frames {
            let clean = seq.data().person_frame(f, p);
            let frame = data.person_frame_mut(f, p);
            for (&(a, b), s) in bones.iter().zip(&scales) {
                for k in 0..3 {
                    frame[3 * b + k] = frame[3 * a + k] + s * (clean[3 * b + k] - clean[3 * a + k]);
                }
            }
            let failed = rng.random::<f64>() < spec.failure_rate;
            for (k, v) in frame.iter_mut().enumerate() {
                if f > 0 {
                    jitter[k] = spec.jitter_corr * jitter[k] + innovation * unit.sample(&mut rng);
                }
                *v += jitter[k];
                if failed {
                    *v += 400.0 * unit.sample(&mut rng);
                }
            }
            scores[f * persons + p] = if failed { rng.random_range(0.0..0.05) } else { rng.random_range(0.5..1.0) };
        }
    }
    Ok(MotionSequence::new(seq.name.clone(), data, seq.fps(), seq.layout().clone(), Some(scores))?)
}

// ---------------------------------------------------------------------------
// Paired corpora
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Gaussian { spec: NoiseSpec },
    EstimatorImport,
}

/// Frame-aligned noisy and clean versions of the same sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedCorpus {
    noisy: Vec<MotionSequence>,
    clean: Vec<MotionSequence>,
    pub provenance: Provenance,
}

impl PairedCorpus {
    pub fn new(noisy: Vec<MotionSequence>, clean: Vec<MotionSequence>, provenance: Provenance) -> Result<Self, NoiseError> {
        if noisy.len() != clean.len() {
            return Err(NoiseError::Misaligned(format!("{} noisy vs {} clean sequences", noisy.len(), clean.len())));
        }
        for (n, c) in noisy.iter().zip(&clean) {
            if n.data().shape() != c.data().shape() {
                return Err(NoiseError::Misaligned(format!(
                    "`{}` has shape {:?} but its clean partner `{}` has {:?}",
                    n.name,
                    n.data().shape(),
                    c.name,
                    c.data().shape()
                )));
            }
            if n.layout() != c.layout() || n.fps() != c.fps() {
                return Err(NoiseError::Misaligned(format!("`{}` differs in layout or fps from its partner", n.name)));
            }
        }
        Ok(Self { noisy, clean, provenance })
    }

    pub fn noisy_sequences(&self) -> &[MotionSequence] {
        &self.noisy
    }

    pub fn clean_sequences(&self) -> &[MotionSequence] {
        &self.clean
    }
}

/// Access to a paired corpus, one sequence at a time.
pub trait PairedSource {
    fn len(&self) -> usize;
    fn noisy(&self, i: usize) -> &MotionSequence;
    fn clean(&self, i: usize) -> &MotionSequence;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PairedSource for PairedCorpus {
    fn len(&self) -> usize {
        self.noisy.len()
    }

    fn noisy(&self, i: usize) -> &MotionSequence {
        &self.noisy[i]
    }

    fn clean(&self, i: usize) -> &MotionSequence {
        &self.clean[i]
    }
}

/// Where the noisy half comes from.
pub enum NoiseSource {
    Gaussian(NoiseSpec),
    /// Estimator outputs in the same order as the clean list. Sequences with
    /// validity scores are repaired with [`fill_invalid_frames`] first.
    Imported(Vec<MotionSequence>),
}

pub fn build_noisy_benchmark(clean: Vec<MotionSequence>, source: NoiseSource) -> Result<PairedCorpus, NoiseError> {
    match source {
        NoiseSource::Gaussian(spec) => {
            spec.validate()?;
            let noisy = clean
                .iter()
                .enumerate()
                .map(|(i, seq)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                    rng.set_stream(i as u64);
                    let mut data = seq.data().clone();
                    perturb_in_place(data.data_mut(), &spec, &mut rng);
                    seq.with_data(data)
                })
                .collect::<Result<Vec<_>, _>>()?;
            PairedCorpus::new(noisy, clean, Provenance::Gaussian { spec })
        }
        NoiseSource::Imported(raw) => {
            let noisy = raw
                .iter()
                .map(|s| match s.validity() {
                    Some(_) => fill_invalid_frames(s, IMPORT_VALIDITY_THRESHOLD),
                    None => Ok(s.clone()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            PairedCorpus::new(noisy, clean, Provenance::EstimatorImport)
        }
    }
}

/// Mean per-joint displacement between noisy and clean poses over every frame.
pub fn time_zero_error<S: PairedSource + ?Sized>(corpus: &S) -> Result<f64, NoiseError> {
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..corpus.len() {
        let (n, c) = (corpus.noisy(i).data().data(), corpus.clean(i).data().data());
        for (a, b) in n.chunks_exact(3).zip(c.chunks_exact(3)) {
            sum += libm::sqrt((0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum());
            count += 1;
        }
    }
    if count == 0 {
        return Err(NoiseError::Empty);
    }
    Ok(sum / count as f64)
}

fn noisy_windows<S: PairedSource + ?Sized>(corpus: &S, spec: &WindowSpec, mode: PersonMode) -> Vec<ForecastWindow> {
    (0..corpus.len()).flat_map(|i| make_windows(corpus.noisy(i), spec, mode)).collect()
}

// ---------------------------------------------------------------------------
// Dual evaluation
// ---------------------------------------------------------------------------

/// Error against noisy targets (observable in a live system) and against
/// clean targets (true error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub measurable: MetricReport,
    pub real: MetricReport,
}

/// Forecasts from noisy inputs, scored against both noisy and clean targets.
pub fn evaluate_dual<F: Forecaster + ?Sized, S: PairedSource + ?Sized>(
    model: &F,
    corpus: &S,
    spec: &WindowSpec,
    horizons: &HorizonSet,
    mode: PersonMode,
) -> Result<DualReport, NoiseError> {
    let mut measurable = HorizonAccumulator::new(horizons, spec.t_out)?;
    let mut real = HorizonAccumulator::new(horizons, spec.t_out)?;
    let mut fps = None;
    for i in 0..corpus.len() {
        let noisy = make_windows(corpus.noisy(i), spec, mode);
        let clean = make_windows(corpus.clean(i), spec, mode);
        if noisy.len() != clean.len() {
            return Err(NoiseError::Misaligned(format!("sequence {i} yields a different window count")));
        }
        for (nw, cw) in noisy.iter().zip(&clean) {
            match fps {
                None => fps = Some(nw.fps),
                Some(f) if f != nw.fps => return Err(MetricError::MixedWindows.into()),
                _ => {}
            }
            if horizons.fps() != nw.fps {
                return Err(MetricError::MixedWindows.into());
            }
            let pred = predict_global(model, nw)?;
            measurable.add(&nw.target, &pred)?;
            real.add(&cw.target, &pred)?;
        }
    }
    if fps.is_none() {
        return Err(NoiseError::Empty);
    }
    Ok(DualReport {
        measurable: measurable.finish(model.name(), model.param_count(), horizons),
        real: real.finish(model.name(), model.param_count(), horizons),
    })
}

// ---------------------------------------------------------------------------
// Unsupervised finetuning
// ---------------------------------------------------------------------------

/// Finetuning defaults derived from a pretraining config: a tenth of the
/// learning rate and no SpecAug.
pub fn finetune_config(pretrain: &TrainConfig) -> TrainConfig {
    TrainConfig {
        learning_rate: pretrain.learning_rate * 0.1,
        spec_aug: SpecAugSpec::disabled(),
        input_noise: None,
        ..pretrain.clone()
    }
}

/// Continues training with noisy windows as both input and target. Only the
/// noisy half of `corpus` is read. Validation uses every `val_every`-th noisy
/// window.
pub fn finetune_on_noisy<S: PairedSource + ?Sized>(
    model: &mut MotionConformer<f32>,
    corpus: &S,
    spec: &WindowSpec,
    mode: PersonMode,
    cfg: &TrainConfig,
    val_every: usize,
) -> Result<TrainHistory, NoiseError> {
    let windows = noisy_windows(corpus, spec, mode);
    if windows.is_empty() {
        return Err(NoiseError::Empty);
    }
    let val: Vec<ForecastWindow> = windows.iter().step_by(val_every.max(1)).cloned().collect();
    Ok(train(model, &windows, &val, cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneOutcome {
    pub history: TrainHistory,
    pub before: DualReport,
    pub after: DualReport,
}

/// [`finetune_on_noisy`] bracketed by dual evaluations on the same corpus.
pub fn finetune_unsupervised<S: PairedSource + ?Sized>(
    model: &mut MotionConformer<f32>,
    corpus: &S,
    spec: &WindowSpec,
    horizons: &HorizonSet,
    mode: PersonMode,
    cfg: &TrainConfig,
) -> Result<FinetuneOutcome, NoiseError> {
    let before = evaluate_dual(&*model, corpus, spec, horizons, mode)?;
    let history = finetune_on_noisy(model, corpus, spec, mode, cfg, 10)?;
    let after = evaluate_dual(&*model, corpus, spec, horizons, mode)?;
    Ok(FinetuneOutcome { history, before, after })
}
