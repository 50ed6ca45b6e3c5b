//! Non-neural reference forecasters.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::{ForecastError, Forecaster};
use crate::motion_data::{ForecastWindow, PoseTensor};
use crate::tensor::{matmul_tn_acc, Mat};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RidgeError {
    #[error("no training windows")]
    Empty,
    #[error("training windows differ in shape")]
    MixedShapes,
    #[error("ridge fitting expects centered windows")]
    NotCentered,
    #[error("ridge coefficient must be finite and nonnegative, got {0}")]
    Lambda(f64),
    #[error("normal equations are singular (pivot {pivot} at row {row})")]
    Singular { row: usize, pivot: f64 },
    #[error("window shape {got:?} does not match the model's {expected:?}")]
    Shape { expected: [usize; 3], got: [usize; 3] },
}

/// Every output frame repeats the last input frame.
pub fn repeat_last_frame(w: &ForecastWindow) -> PoseTensor {
    let last = w.input.frame(w.t_in() - 1);
    let mut out = Vec::with_capacity(last.len() * w.t_out());
    for _ in 0..w.t_out() {
        out.extend_from_slice(last);
    }
    PoseTensor::from_vec(w.t_out(), w.persons(), w.joints(), out).expect("shape follows the window")
}

/// Moves the last input pose rigidly by the joint-averaged last-frame delta
/// per output step. Each person gets its own delta, so the body shape is kept.
pub fn last_delta_average(w: &ForecastWindow) -> Result<PoseTensor, ForecastError> {
    let t_in = w.t_in();
    if t_in < 2 {
        return Err(ForecastError::Other(format!("last-delta average needs two input frames, got {t_in}")));
    }
    let joints = w.joints();
    let mut out = PoseTensor::zeros(w.t_out(), w.persons(), joints);
    for p in 0..w.persons() {
        let mut d = [0.0; 3];
        for j in 0..joints {
            let (a, b) = (w.input.point(t_in - 1, p, j), w.input.point(t_in - 2, p, j));
            for k in 0..3 {
                d[k] += a[k] - b[k];
            }
        }
        for v in d.iter_mut() {
            *v /= joints as f64;
        }
        for step in 0..w.t_out() {
            let k = (step + 1) as f64;
            for j in 0..joints {
                let a = w.input.point(t_in - 1, p, j);
                out.set_point(step, p, j, [a[0] + k * d[0], a[1] + k * d[1], a[2] + k * d[2]]);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RepeatLastFrame;

impl Forecaster for RepeatLastFrame {
    fn name(&self) -> String {
        "Repeat last frame".into()
    }
    fn forecast(&self, w: &ForecastWindow) -> Result<PoseTensor, ForecastError> {
        Ok(repeat_last_frame(w))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LastDeltaAverage;

impl Forecaster for LastDeltaAverage {
    fn name(&self) -> String {
        "Last delta average".into()
    }
    fn forecast(&self, w: &ForecastWindow) -> Result<PoseTensor, ForecastError> {
        last_delta_average(w)
    }
}

// ---------------------------------------------------------------------------
// Ridge regression
// ---------------------------------------------------------------------------

pub const DEFAULT_RIDGE_LAMBDA: f64 = 100.0;

/// Affine map from a flattened centered input window to a flattened target.
///
/// `weights` is `[d_in + 1, d_out]`; the last row is the unpenalized bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Mat<f64>,
    pub lambda: f64,
    /// `[t_in, persons, joints]` of the windows the model was fit on.
    pub input_shape: [usize; 3],
    /// `[t_out, persons, joints]`.
    pub output_shape: [usize; 3],
}

fn features(w: &ForecastWindow) -> impl Iterator<Item = f64> + '_ {
    w.input.data().iter().copied().chain(core::iter::once(1.0))
}

/// Solves `(XᵀX + λ·P) W = XᵀY` where `X` holds flattened inputs plus a
/// constant 1 column and `P` is the identity with a zero on the bias entry.
pub fn ridge_fit(train: &[ForecastWindow], lambda: f64) -> Result<RidgeModel, RidgeError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(RidgeError::Lambda(lambda));
    }
    let first = train.first().ok_or(RidgeError::Empty)?;
    if train.iter().any(|w| w.input.shape() != first.input.shape() || w.target.shape() != first.target.shape()) {
        return Err(RidgeError::MixedShapes);
    }
    if train.iter().any(|w| !w.centered) {
        return Err(RidgeError::NotCentered);
    }
    let d_in = first.input.data().len() + 1;
    let d_out = first.target.data().len();
    let n = train.len();

    let mut x = Mat::zeros(n, d_in);
    let mut y = Mat::zeros(n, d_out);
    for (i, w) in train.iter().enumerate() {
        for (dst, v) in x.row_mut(i).iter_mut().zip(features(w)) {
            *dst = v;
        }
        y.row_mut(i).copy_from_slice(w.target.data());
    }
    let mut gram = Mat::zeros(d_in, d_in);
    matmul_tn_acc(&x, &x, &mut gram);
    for i in 0..d_in - 1 {
        gram.set(i, i, gram.get(i, i) + lambda);
    }
    let mut rhs = Mat::zeros(d_in, d_out);
    matmul_tn_acc(&x, &y, &mut rhs);

    let chol = cholesky(gram)?;
    let weights = cholesky_solve(&chol, rhs);
    Ok(RidgeModel { weights, lambda, input_shape: first.input.shape(), output_shape: first.target.shape() })
}

/// Lower-triangular factor `L` with `A = L Lᵀ`.
fn cholesky(mut a: Mat<f64>) -> Result<Mat<f64>, RidgeError> {
    let n = a.rows();
    let scale = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= a.get(j, k) * a.get(j, k);
        }
        if !(diag > 1e-13 * scale) {
            return Err(RidgeError::Singular { row: j, pivot: diag });
        }
        let ljj = libm::sqrt(diag);
        a.set(j, j, ljj);
        for i in j + 1..n {
            let (ri, rj) = (i * n, j * n);
            let data = a.data();
            let mut s = data[ri + j];
            for k in 0..j {
                s -= data[ri + k] * data[rj + k];
            }
            a.set(i, j, s / ljj);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            a.set(i, j, 0.0);
        }
    }
    Ok(a)
}

/// Solves `L Lᵀ X = B` for every column of `B`.
fn cholesky_solve(l: &Mat<f64>, mut b: Mat<f64>) -> Mat<f64> {
    let n = l.rows();
    let m = b.cols();
    for i in 0..n {
        for k in 0..i {
            let lik = l.get(i, k);
            if lik == 0.0 {
                continue;
            }
            let (head, tail) = b.data_mut().split_at_mut(i * m);
            let src = &head[k * m..(k + 1) * m];
            for (d, &s) in tail[..m].iter_mut().zip(src) {
                *d -= lik * s;
            }
        }
        let lii = l.get(i, i);
        b.row_mut(i).iter_mut().for_each(|v| *v /= lii);
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = l.get(k, i);
            if lki == 0.0 {
                continue;
            }
            let (head, tail) = b.data_mut().split_at_mut(k * m);
            let src = &tail[..m];
            for (d, &s) in head[i * m..(i + 1) * m].iter_mut().zip(src) {
                *d -= lki * s;
            }
        }
        let lii = l.get(i, i);
        b.row_mut(i).iter_mut().for_each(|v| *v /= lii);
    }
    b
}

impl RidgeModel {
    /// `[x, 1] · W` reshaped to `[t_out][persons][joints][3]`.
    pub fn predict(&self, w: &ForecastWindow) -> Result<PoseTensor, RidgeError> {
        if w.input.shape() != self.input_shape {
            return Err(RidgeError::Shape { expected: self.input_shape, got: w.input.shape() });
        }
        let d_out = self.weights.cols();
        let mut out = alloc::vec![0.0; d_out];
        for (i, x) in features(w).enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &wij) in out.iter_mut().zip(self.weights.row(i)) {
                *o += x * wij;
            }
        }
        let [t, p, j] = self.output_shape;
        Ok(PoseTensor::from_vec(t, p, j, out).expect("weights match the output shape"))
    }

    /// Bias row reshaped to a pose tensor (the prediction for a zero input).
    pub fn bias(&self) -> &[f64] {
        self.weights.row(self.weights.rows() - 1)
    }
}

impl Forecaster for RidgeModel {
    fn name(&self) -> String {
        "Ridge regression".into()
    }
    fn param_count(&self) -> usize {
        self.weights.len()
    }
    fn forecast(&self, w: &ForecastWindow) -> Result<PoseTensor, ForecastError> {
        self.predict(w).map_err(|e| match e {
            RidgeError::Shape { expected, got } => ForecastError::Shape { expected, got },
            other => ForecastError::Other(format!("{other}")),
        })
    }
}
