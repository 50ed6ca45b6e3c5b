//! Conformer encoder adapted to motion.
//!
//! ```text
//! input [t_in, J·3] (centered mm) ── ÷ coord_scale ── Linear → d_model ── + positional embedding
//!   (reduction here when position = start)
//!   n_blocks × ConformerBlock:
//!       x + ½·FF(x) → x + MHSA(x) → x + Conv(x) → x + ½·FF(x) → LayerNorm
//!       Conv = LN → Linear(d, 2d) → GLU → depthwise conv → LN → SiLU → Linear(d, d)
//!   (reduction here when position = end)
//!   reduction = strided depthwise conv (kernel 2r−1, stride r) → Linear(d, d)
//! head Linear(d_model → J·3) · coord_scale + last input frame ── output [t_out, J·3]
//! ```
//!
//! There is no batch normalization anywhere; the convolution module uses a
//! per-sample layer norm instead. The head starts at zero, so an untrained
//! model repeats the last input frame.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{ParamId, ParamSet, Tape, Var};
use crate::metrics::{ForecastError, Forecaster};
use crate::motion_data::{ForecastWindow, PoseTensor};
use crate::tensor::{Mat, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("input shape {got:?} does not match expected {expected:?}")]
    Shape { expected: (usize, usize), got: (usize, usize) },
    #[error("parameter `{name}`: {reason}")]
    Param { name: String, reason: String },
    #[error("forward pass produced a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionPosition {
    Start,
    #[default]
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_blocks: usize,
    pub n_heads: usize,
    pub conv_kernel: usize,
    pub ff_expansion: usize,
    pub dropout: f64,
    pub t_in: usize,
    pub t_out: usize,
    /// Total joints seen by the model (persons × joints per person).
    pub joints: usize,
    pub reduction_factor: usize,
    pub reduction_position: ReductionPosition,
    /// Inputs are divided by this (mm) before the first projection and the
    /// head output is multiplied by it.
    pub coord_scale_mm: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::toy(50, 25, 13)
    }
}

impl ModelConfig {
    /// Default desk-scale configuration.
    pub fn toy(t_in: usize, t_out: usize, joints: usize) -> Self {
        Self {
            d_model: 96,
            n_blocks: 4,
            n_heads: 4,
            conv_kernel: 9,
            ff_expansion: 4,
            dropout: 0.1,
            t_in,
            t_out,
            joints,
            reduction_factor: 2,
            reduction_position: ReductionPosition::End,
            coord_scale_mm: 1000.0,
        }
    }

    /// Small configuration for fast experiments and tests.
    pub fn tiny(t_in: usize, t_out: usize, joints: usize) -> Self {
        Self { d_model: 32, n_blocks: 2, n_heads: 4, conv_kernel: 7, ff_expansion: 2, dropout: 0.0, ..Self::toy(t_in, t_out, joints) }
    }

    /// Roughly nine million parameters at 13 joints.
    pub fn paper_scale(t_in: usize, t_out: usize, joints: usize) -> Self {
        Self { d_model: 256, n_blocks: 6, n_heads: 4, conv_kernel: 15, ff_expansion: 4, ..Self::toy(t_in, t_out, joints) }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::Config(m));
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return err(format!("d_model {} must be a positive multiple of n_heads {}", self.d_model, self.n_heads));
        }
        if self.conv_kernel % 2 == 0 {
            return err(format!("conv_kernel {} must be odd", self.conv_kernel));
        }
        if self.ff_expansion == 0 || self.joints == 0 || self.t_out == 0 {
            return err("ff_expansion, joints and t_out must be positive".into());
        }
        if self.reduction_factor == 0 || self.t_in != self.reduction_factor * self.t_out {
            return err(format!(
                "t_in {} must equal reduction_factor {} × t_out {}",
                self.t_in, self.reduction_factor, self.t_out
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.coord_scale_mm.is_finite() && self.coord_scale_mm > 0.0) {
            return err("coord_scale_mm must be positive".into());
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.joints * 3
    }

    /// Sequence length inside the conformer blocks.
    pub fn block_length(&self) -> usize {
        match self.reduction_position {
            ReductionPosition::Start => self.t_out,
            ReductionPosition::End => self.t_in,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Norm {
    gamma: ParamId,
    beta: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct FeedForward {
    norm: Norm,
    up: Dense,
    down: Dense,
}

#[derive(Debug, Clone, Copy)]
struct Attention {
    norm: Norm,
    qkv: Dense,
    out: Dense,
}

#[derive(Debug, Clone, Copy)]
struct ConvModule {
    norm: Norm,
    pointwise_in: Dense,
    depthwise: Dense,
    inner_norm: Norm,
    pointwise_out: Dense,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    ff1: FeedForward,
    attn: Attention,
    conv: ConvModule,
    ff2: FeedForward,
    norm: Norm,
}

#[derive(Debug, Clone)]
struct Layout {
    input: Dense,
    position: ParamId,
    blocks: Vec<Block>,
    reduce_conv: Dense,
    reduce_mix: Dense,
    head: Dense,
}

struct Init<'a, T> {
    params: &'a mut ParamSet<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> Init<'_, T> {
    fn uniform(&mut self, name: String, rows: usize, cols: usize, bound: f64) -> ParamId {
        let rng = &mut self.rng;
        let m = Mat::from_fn(rows, cols, |_, _| T::of(rng.random_range(-bound..=bound)));
        self.params.add(name, m)
    }

    fn constant(&mut self, name: String, rows: usize, cols: usize, v: f64) -> ParamId {
        let mut m = Mat::zeros(rows, cols);
        m.fill(T::of(v));
        self.params.add(name, m)
    }

    fn dense(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Dense {
        let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        Dense {
            w: self.uniform(format!("{name}.weight"), fan_in, fan_out, bound),
            b: self.constant(format!("{name}.bias"), 1, fan_out, 0.0),
        }
    }

    fn norm(&mut self, name: &str, d: usize) -> Norm {
        Norm {
            gamma: self.constant(format!("{name}.gamma"), 1, d, 1.0),
            beta: self.constant(format!("{name}.beta"), 1, d, 0.0),
        }
    }

    fn depthwise(&mut self, name: &str, k: usize, d: usize) -> Dense {
        let bound = 1.0 / libm::sqrt(k as f64);
        Dense {
            w: self.uniform(format!("{name}.weight"), k, d, bound),
            b: self.constant(format!("{name}.bias"), 1, d, 0.0),
        }
    }

    fn feed_forward(&mut self, name: &str, d: usize, e: usize) -> FeedForward {
        FeedForward {
            norm: self.norm(&format!("{name}.norm"), d),
            up: self.dense(&format!("{name}.up"), d, d * e),
            down: self.dense(&format!("{name}.down"), d * e, d),
        }
    }
}

/// Evaluation (deterministic) or training (dropout active).
pub enum Mode<'r> {
    Eval,
    Train(&'r mut ChaCha8Rng),
}

#[derive(Debug, Clone)]
pub struct MotionConformer<T> {
    cfg: ModelConfig,
    params: ParamSet<T>,
    layout: Layout,
    /// Completed training epochs, carried through checkpoints.
    pub epochs_trained: usize,
}

impl<T: Real> MotionConformer<T> {
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut params = ParamSet::new();
        let d = cfg.d_model;
        let layout = {
            let mut init = Init { params: &mut params, rng: ChaCha8Rng::seed_from_u64(seed) };
            let input = init.dense("input", cfg.channels(), d);
            let position = init.uniform("position".into(), cfg.t_in, d, 0.02);
            let blocks = (0..cfg.n_blocks)
                .map(|i| {
                    let p = format!("blocks.{i}");
                    Block {
                        ff1: init.feed_forward(&format!("{p}.ff1"), d, cfg.ff_expansion),
                        attn: Attention {
                            norm: init.norm(&format!("{p}.attn.norm"), d),
                            qkv: init.dense(&format!("{p}.attn.qkv"), d, 3 * d),
                            out: init.dense(&format!("{p}.attn.out"), d, d),
                        },
                        conv: ConvModule {
                            norm: init.norm(&format!("{p}.conv.norm"), d),
                            pointwise_in: init.dense(&format!("{p}.conv.pointwise_in"), d, 2 * d),
                            depthwise: init.depthwise(&format!("{p}.conv.depthwise"), cfg.conv_kernel, d),
                            inner_norm: init.norm(&format!("{p}.conv.inner_norm"), d),
                            pointwise_out: init.dense(&format!("{p}.conv.pointwise_out"), d, d),
                        },
                        ff2: init.feed_forward(&format!("{p}.ff2"), d, cfg.ff_expansion),
                        norm: init.norm(&format!("{p}.norm"), d),
                    }
                })
                .collect();
            let reduce_conv = init.depthwise("reduce.conv", 2 * cfg.reduction_factor - 1, d);
            let reduce_mix = init.dense("reduce.mix", d, d);
            let head = Dense {
                w: init.constant("head.weight".into(), d, cfg.channels(), 0.0),
                b: init.constant("head.bias".into(), 1, cfg.channels(), 0.0),
            };
            Layout { input, position, blocks, reduce_conv, reduce_mix, head }
        };
        Ok(Self { cfg, params, layout, epochs_trained: 0 })
    }

    /// Rebuilds a model from stored parameters; names and shapes must match
    /// what `cfg` produces.
    pub fn from_params(cfg: ModelConfig, stored: ParamSet<T>, epochs_trained: usize) -> Result<Self, ModelError> {
        let mut model = Self::new(cfg, 0)?;
        if stored.len() != model.params.len() {
            return Err(ModelError::Param {
                name: String::from("*"),
                reason: format!("{} tensors stored, {} expected", stored.len(), model.params.len()),
            });
        }
        for ((name, value), (want_name, want)) in stored.iter().zip(model.params.iter()) {
            if name != want_name {
                return Err(ModelError::Param { name: name.into(), reason: format!("expected `{want_name}`") });
            }
            if value.shape() != want.shape() {
                return Err(ModelError::Param {
                    name: name.into(),
                    reason: format!("shape {:?}, expected {:?}", value.shape(), want.shape()),
                });
            }
        }
        model.params = stored;
        model.epochs_trained = epochs_trained;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.scalar_count()
    }

    pub fn check_input(&self, x: &Mat<T>) -> Result<(), ModelError> {
        let expected = (self.cfg.t_in, self.cfg.channels());
        if x.shape() != expected {
            return Err(ModelError::Shape { expected, got: x.shape() });
        }
        Ok(())
    }

    /// Records one sample's forward pass on `tape`, returning the
    /// `[t_out, J·3]` prediction.
    pub fn forward_on<'p>(&'p self, tape: &mut Tape<'p, T>, x: &Mat<T>, mode: &mut Mode<'_>) -> Var {
        let cfg = &self.cfg;
        let ly = &self.layout;
        let inv_scale = T::of(1.0 / cfg.coord_scale_mm);
        let xin = tape.constant(x.map(|v| v * inv_scale));
        let mut h = self.dense(tape, xin, ly.input);
        let pos = tape.param(ly.position);
        h = tape.add(h, pos);
        if cfg.reduction_position == ReductionPosition::Start {
            h = self.reduce(tape, h);
        }
        for block in &ly.blocks {
            h = self.block(tape, h, block, mode);
        }
        if cfg.reduction_position == ReductionPosition::End {
            h = self.reduce(tape, h);
        }
        let y = self.dense(tape, h, ly.head);
        let y = tape.scale(y, T::of(cfg.coord_scale_mm));
        let last = x.row(cfg.t_in - 1);
        let base = Mat::from_fn(cfg.t_out, cfg.channels(), |_, c| last[c]);
        let base = tape.constant(base);
        tape.add(base, y)
    }

    /// Batched inference in evaluation mode.
    pub fn forward(&self, batch: &[Mat<T>]) -> Result<Vec<Mat<T>>, ModelError> {
        batch
            .iter()
            .map(|x| {
                self.check_input(x)?;
                let mut tape = Tape::new(&self.params);
                let y = self.forward_on(&mut tape, x, &mut Mode::Eval);
                let out = tape.value(y).clone();
                if !out.all_finite() {
                    return Err(ModelError::NonFinite);
                }
                Ok(out)
            })
            .collect()
    }

    /// Mean joint distance between the prediction for `x` and `target`;
    /// gradients are added into `grads`.
    pub fn loss_and_grad(&self, x: &Mat<T>, target: &Mat<T>, mode: &mut Mode<'_>, grads: &mut [Mat<T>]) -> T {
        let mut tape = Tape::new(&self.params);
        let y = self.forward_on(&mut tape, x, mode);
        let loss = tape.joint_distance(y, target.clone());
        tape.backward(loss, grads);
        tape.value(loss).get(0, 0)
    }

    pub fn loss(&self, x: &Mat<T>, target: &Mat<T>) -> T {
        let mut tape = Tape::new(&self.params);
        let y = self.forward_on(&mut tape, x, &mut Mode::Eval);
        let loss = tape.joint_distance(y, target.clone());
        tape.value(loss).get(0, 0)
    }

    fn dense(&self, tape: &mut Tape<'_, T>, x: Var, d: Dense) -> Var {
        let (w, b) = (tape.param(d.w), tape.param(d.b));
        tape.linear(x, w, b)
    }

    fn norm(&self, tape: &mut Tape<'_, T>, x: Var, n: Norm) -> Var {
        let (g, b) = (tape.param(n.gamma), tape.param(n.beta));
        tape.layer_norm(x, g, b)
    }

    fn dropout(&self, tape: &mut Tape<'_, T>, x: Var, mode: &mut Mode<'_>) -> Var {
        let p = self.cfg.dropout;
        match mode {
            Mode::Train(rng) if p > 0.0 => {
                let keep = T::of(1.0 / (1.0 - p));
                let n = tape.value(x).len();
                let mask = (0..n).map(|_| if rng.random::<f64>() < p { T::zero() } else { keep }).collect();
                tape.mask_mul(x, mask)
            }
            _ => x,
        }
    }

    fn feed_forward(&self, tape: &mut Tape<'_, T>, x: Var, ff: &FeedForward, mode: &mut Mode<'_>) -> Var {
        let h = self.norm(tape, x, ff.norm);
        let h = self.dense(tape, h, ff.up);
        let h = tape.silu(h);
        let h = self.dropout(tape, h, mode);
        let h = self.dense(tape, h, ff.down);
        self.dropout(tape, h, mode)
    }

    fn attention(&self, tape: &mut Tape<'_, T>, x: Var, at: &Attention, mode: &mut Mode<'_>) -> Var {
        let d = self.cfg.d_model;
        let heads = self.cfg.n_heads;
        let dh = d / heads;
        let h = self.norm(tape, x, at.norm);
        let qkv = self.dense(tape, h, at.qkv);
        let inv = T::of(1.0 / libm::sqrt(dh as f64));
        let mut outs = Vec::with_capacity(heads);
        for i in 0..heads {
            let q = tape.slice_cols(qkv, i * dh, dh);
            let k = tape.slice_cols(qkv, d + i * dh, dh);
            let v = tape.slice_cols(qkv, 2 * d + i * dh, dh);
            let s = tape.matmul_nt(q, k);
            let s = tape.scale(s, inv);
            let p = tape.softmax_rows(s);
            outs.push(tape.matmul(p, v));
        }
        let o = if heads == 1 { outs[0] } else { tape.concat_cols(outs) };
        let o = self.dense(tape, o, at.out);
        self.dropout(tape, o, mode)
    }

    fn conv_module(&self, tape: &mut Tape<'_, T>, x: Var, cm: &ConvModule, mode: &mut Mode<'_>) -> Var {
        let k = self.cfg.conv_kernel;
        let h = self.norm(tape, x, cm.norm);
        let h = self.dense(tape, h, cm.pointwise_in);
        let h = tape.glu(h);
        let w = tape.param(cm.depthwise.w);
        let h = tape.depthwise_conv(h, w, 1, k / 2);
        let b = tape.param(cm.depthwise.b);
        let h = tape.add_row(h, b);
        let h = self.norm(tape, h, cm.inner_norm);
        let h = tape.silu(h);
        let h = self.dense(tape, h, cm.pointwise_out);
        self.dropout(tape, h, mode)
    }

    fn block(&self, tape: &mut Tape<'_, T>, x: Var, b: &Block, mode: &mut Mode<'_>) -> Var {
        let half = T::of(0.5);
        let f = self.feed_forward(tape, x, &b.ff1, mode);
        let f = tape.scale(f, half);
        let x = tape.add(x, f);
        let a = self.attention(tape, x, &b.attn, mode);
        let x = tape.add(x, a);
        let c = self.conv_module(tape, x, &b.conv, mode);
        let x = tape.add(x, c);
        let f = self.feed_forward(tape, x, &b.ff2, mode);
        let f = tape.scale(f, half);
        let x = tape.add(x, f);
        self.norm(tape, x, b.norm)
    }

    fn reduce(&self, tape: &mut Tape<'_, T>, x: Var) -> Var {
        let r = self.cfg.reduction_factor;
        let w = tape.param(self.layout.reduce_conv.w);
        let h = tape.depthwise_conv(x, w, r, r - 1);
        let b = tape.param(self.layout.reduce_conv.b);
        let h = tape.add_row(h, b);
        self.dense(tape, h, self.layout.reduce_mix)
    }

    /// Flattens a window's input to `[t_in, persons·joints·3]`.
    pub fn window_input(w: &ForecastWindow) -> Mat<T> {
        let rows = w.t_in();
        let cols = w.total_joints() * 3;
        Mat::from_vec(rows, cols, w.input.data().iter().map(|&v| T::of(v)).collect())
    }

    pub fn window_target(w: &ForecastWindow) -> Mat<T> {
        let rows = w.t_out();
        let cols = w.total_joints() * 3;
        Mat::from_vec(rows, cols, w.target.data().iter().map(|&v| T::of(v)).collect())
    }
}

impl<T: Real> Forecaster for MotionConformer<T> {
    fn name(&self) -> String {
        "MotionConformer".into()
    }

    fn param_count(&self) -> usize {
        self.params.scalar_count()
    }

    fn forecast(&self, w: &ForecastWindow) -> Result<PoseTensor, ForecastError> {
        let x = Self::window_input(w);
        let expected = [self.cfg.t_in, 1, self.cfg.joints];
        if x.shape() != (self.cfg.t_in, self.cfg.channels()) {
            return Err(ForecastError::Shape { expected, got: [w.t_in(), w.persons(), w.joints()] });
        }
        let y = self.forward(core::slice::from_ref(&x)).map_err(|e| match e {
            ModelError::NonFinite => ForecastError::NonFinite,
            other => ForecastError::Other(format!("{other}")),
        })?;
        let data = y[0].data().iter().map(|v| v.as_f64()).collect();
        PoseTensor::from_vec(self.cfg.t_out, w.persons(), w.joints(), data)
            .map_err(|e| ForecastError::Other(format!("{e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::repeat_last_frame;
    use crate::motion_data::center_window;
    use alloc::vec;

    fn random_input<T: Real>(rows: usize, cols: usize, seed: u64) -> Mat<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| T::of(rng.random_range(-800.0..800.0)))
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let bad = |f: fn(&mut ModelConfig)| {
            let mut c = ModelConfig::tiny(50, 25, 13);
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.n_heads = 3));
        assert!(bad(|c| c.conv_kernel = 4));
        assert!(bad(|c| c.t_in = 49));
        assert!(bad(|c| c.dropout = 1.0));
        assert!(bad(|c| c.reduction_factor = 0));
    }

    #[test]
    fn output_shapes_single_and_multi_person() {
        for joints in [13, 26] {
            let m = MotionConformer::<f32>::new(ModelConfig::tiny(50, 25, joints), 1).unwrap();
            let batch: Vec<_> = (0..3).map(|s| random_input(50, joints * 3, s)).collect();
            let out = m.forward(&batch).unwrap();
            assert_eq!(out.len(), 3);
            assert!(out.iter().all(|o| o.shape() == (25, joints * 3)));
        }
        let m = MotionConformer::<f32>::new(ModelConfig::tiny(50, 25, 13), 1).unwrap();
        assert!(matches!(m.forward(&[random_input(40, 39, 0)]), Err(ModelError::Shape { .. })));
    }

    #[test]
    fn reduction_position_changes_block_length_only() {
        let mut cfg = ModelConfig::tiny(50, 25, 13);
        assert_eq!(cfg.block_length(), 50);
        let end = MotionConformer::<f32>::new(cfg.clone(), 3).unwrap();
        cfg.reduction_position = ReductionPosition::Start;
        assert_eq!(cfg.block_length(), 25);
        let start = MotionConformer::<f32>::new(cfg, 3).unwrap();
        let x = random_input(50, 39, 9);
        assert_eq!(end.forward(&[x.clone()]).unwrap()[0].shape(), start.forward(&[x]).unwrap()[0].shape());
        assert_eq!(end.param_count(), start.param_count());
    }

    #[test]
    fn zero_head_repeats_last_frame() {
        let m = MotionConformer::<f32>::new(ModelConfig::tiny(8, 4, 13), 5).unwrap();
        let x = random_input::<f32>(8, 39, 2);
        let y = &m.forward(&[x.clone()]).unwrap()[0];
        for r in 0..4 {
            assert_eq!(y.row(r), x.row(7));
        }
        let seq = crate::motion_data::synth_corpus(1, 1, 25.0, 12, 1, &Default::default()).unwrap();
        let spec = crate::motion_data::WindowSpec::new(8, 4, 1).unwrap();
        let w = center_window(&crate::motion_data::make_windows(&seq[0], &spec, Default::default())[0]).unwrap();
        let m64 = MotionConformer::<f64>::new(ModelConfig::tiny(8, 4, 13), 5).unwrap();
        assert_eq!(m64.forecast(&w).unwrap(), repeat_last_frame(&w));
    }

    #[test]
    fn eval_is_deterministic_and_per_sample() {
        let mut m = MotionConformer::<f32>::new(ModelConfig::tiny(8, 4, 13), 5).unwrap();
        // give the head weights so the output depends on the whole network
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in m.params_mut().values_mut() {
            for x in v.data_mut() {
                *x = *x + rng.random_range(-0.05..0.05);
            }
        }
        let batch: Vec<_> = (0..4).map(|s| random_input::<f32>(8, 39, s)).collect();
        let a = m.forward(&batch).unwrap();
        assert_eq!(a, m.forward(&batch).unwrap());
        let perm = vec![batch[2].clone(), batch[0].clone(), batch[3].clone(), batch[1].clone()];
        let b = m.forward(&perm).unwrap();
        assert_eq!((&b[0], &b[1], &b[2], &b[3]), (&a[2], &a[0], &a[3], &a[1]));
    }

    #[test]
    fn parameter_count_depends_only_on_config() {
        let cfg = ModelConfig::tiny(50, 25, 13);
        let counts: Vec<usize> =
            (0..3).map(|s| MotionConformer::<f32>::new(cfg.clone(), s).unwrap().param_count()).collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]));
        let big = MotionConformer::<f32>::new(ModelConfig::paper_scale(50, 25, 13), 0).unwrap();
        assert!((8_500_000..10_000_000).contains(&big.param_count()), "{}", big.param_count());
    }

    #[test]
    fn gradients_match_central_differences() {
        let cfg = ModelConfig {
            d_model: 8,
            n_blocks: 1,
            n_heads: 1,
            conv_kernel: 3,
            ff_expansion: 2,
            dropout: 0.0,
            ..ModelConfig::tiny(4, 2, 2)
        };
        let mut m = MotionConformer::<f64>::new(cfg, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for v in m.params_mut().values_mut() {
            for x in v.data_mut() {
                *x += rng.random_range(-0.3..0.3);
            }
        }
        let x = random_input::<f64>(4, 6, 1);
        let target = random_input::<f64>(2, 6, 2);
        let mut grads = m.params().zeros_like();
        m.loss_and_grad(&x, &target, &mut Mode::Eval, &mut grads);

        let h = 1e-5;
        let mut worst = 0.0f64;
        for p in 0..m.params().len() {
            let n = m.params().values()[p].len();
            for i in 0..n {
                let orig = m.params().values()[p].data()[i];
                m.params_mut().values_mut()[p].data_mut()[i] = orig + h;
                let up = m.loss(&x, &target);
                m.params_mut().values_mut()[p].data_mut()[i] = orig - h;
                let down = m.loss(&x, &target);
                m.params_mut().values_mut()[p].data_mut()[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[p].data()[i];
                let scale = analytic.abs().max(numeric.abs());
                if scale > 1e-4 {
                    let rel = (analytic - numeric).abs() / scale;
                    assert!(rel < 1e-3, "{} [{i}]: analytic {analytic}, numeric {numeric}", m.params().names()[p]);
                    worst = worst.max(rel);
                } else {
                    assert!((analytic - numeric).abs() < 1e-6, "{} [{i}]: analytic {analytic}, numeric {numeric}", m.params().names()[p]);
                }
            }
        }
        assert!(worst < 1e-3);
    }

    #[test]
    fn from_params_checks_names_and_shapes() {
        let m = MotionConformer::<f32>::new(ModelConfig::tiny(8, 4, 13), 5).unwrap();
        let back = MotionConformer::from_params(m.config().clone(), m.params().clone(), 3).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.epochs_trained, 3);
        let other = MotionConformer::<f32>::new(ModelConfig::tiny(8, 4, 26), 5).unwrap();
        assert!(matches!(
            MotionConformer::from_params(m.config().clone(), other.params().clone(), 0),
            Err(ModelError::Param { .. })
        ));
    }
}
