//! Canonical motion sequences and every transformation between a recorded
//! sequence and a model-ready forecast sample.
//!
//! Coordinates are millimeters everywhere. The vertical axis is `y`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("invalid joint layout: {0}")]
    Layout(String),
    #[error("invalid motion sequence: {0}")]
    Sequence(String),
    #[error("invalid window spec: {0}")]
    Window(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("joint index {index} out of range for {joints} source joints")]
    JointIndex { index: usize, joints: usize },
    #[error("sequence has no validity scores")]
    MissingValidity,
    #[error("person {person} has no frame scored at or above {threshold}")]
    NoValidFrame { person: usize, threshold: f64 },
    #[error("window is already centered")]
    AlreadyCentered,
    #[error("window is not centered")]
    NotCentered,
    #[error("windows cannot be merged: {0}")]
    Merge(String),
}

// ---------------------------------------------------------------------------
// Joint layout
// ---------------------------------------------------------------------------

/// Ordered joint names plus the two hip joints used for centering and the
/// bone edges used for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLayout {
    names: Vec<String>,
    left_hip: usize,
    right_hip: usize,
    edges: Vec<[usize; 2]>,
}

/// Joint order of [`JointLayout::default13`].
pub const DEFAULT13_NAMES: [&str; 13] = [
    "nose",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

const DEFAULT13_EDGES: [[usize; 2]; 14] = [
    [0, 1],
    [0, 2],
    [1, 2],
    [1, 3],
    [3, 5],
    [2, 4],
    [4, 6],
    [1, 7],
    [2, 8],
    [7, 8],
    [7, 9],
    [9, 11],
    [8, 10],
    [10, 12],
];

/// The 32-joint skeleton exported by the Human3.6M tooling.
pub const H36M32_NAMES: [&str; 32] = [
    "hips",
    "right_up_leg",
    "right_leg",
    "right_foot",
    "right_toe_base",
    "right_toe_site",
    "left_up_leg",
    "left_leg",
    "left_foot",
    "left_toe_base",
    "left_toe_site",
    "spine",
    "spine1",
    "neck",
    "head",
    "head_site",
    "left_shoulder",
    "left_arm",
    "left_fore_arm",
    "left_hand",
    "left_hand_thumb",
    "left_thumb_site",
    "left_wrist_end",
    "left_wrist_site",
    "right_shoulder",
    "right_arm",
    "right_fore_arm",
    "right_hand",
    "right_hand_thumb",
    "right_thumb_site",
    "right_wrist_end",
    "right_wrist_site",
];

/// Source indices into [`H36M32_NAMES`] producing [`DEFAULT13_NAMES`].
/// The head joint stands in for the nose.
pub const H36M32_TO_DEFAULT13: [usize; 13] = [14, 17, 25, 18, 26, 19, 27, 6, 1, 7, 2, 8, 3];

impl JointLayout {
    pub fn new(
        names: Vec<String>,
        left_hip: usize,
        right_hip: usize,
        edges: Vec<[usize; 2]>,
    ) -> Result<Self, DataError> {
        let n = names.len();
        if n == 0 {
            return Err(DataError::Layout("no joints".into()));
        }
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(DataError::Layout(format!("duplicate joint name `{a}`")));
            }
        }
        if left_hip >= n || right_hip >= n || left_hip == right_hip {
            return Err(DataError::Layout(format!(
                "hip indices ({left_hip}, {right_hip}) must be distinct and below {n}"
            )));
        }
        if let Some(e) = edges.iter().find(|e| e[0] >= n || e[1] >= n) {
            return Err(DataError::Layout(format!("edge {e:?} references a missing joint")));
        }
        Ok(Self { names, left_hip, right_hip, edges })
    }

    /// 2 hips, 2 shoulders, nose, 2 knees, 2 ankles, 2 elbows, 2 wrists.
    pub fn default13() -> Self {
        Self::new(DEFAULT13_NAMES.iter().map(|s| s.to_string()).collect(), 7, 8, DEFAULT13_EDGES.to_vec())
            .expect("built-in layout is valid")
    }

    pub fn h36m32() -> Self {
        let edges = vec![
            [0, 1],
            [1, 2],
            [2, 3],
            [0, 6],
            [6, 7],
            [7, 8],
            [0, 11],
            [11, 12],
            [12, 13],
            [13, 14],
            [13, 17],
            [17, 18],
            [18, 19],
            [13, 25],
            [25, 26],
            [26, 27],
        ];
        Self::new(H36M32_NAMES.iter().map(|s| s.to_string()).collect(), 6, 1, edges)
            .expect("built-in layout is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn left_hip(&self) -> usize {
        self.left_hip
    }

    pub fn right_hip(&self) -> usize {
        self.right_hip
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
}

// ---------------------------------------------------------------------------
// Pose tensor
// ---------------------------------------------------------------------------

/// Dense `[frames][persons][joints][3]` coordinate tensor (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseTensor {
    frames: usize,
    persons: usize,
    joints: usize,
    data: Vec<f64>,
}

impl PoseTensor {
    pub fn zeros(frames: usize, persons: usize, joints: usize) -> Self {
        Self { frames, persons, joints, data: vec![0.0; frames * persons * joints * 3] }
    }

    pub fn from_vec(frames: usize, persons: usize, joints: usize, data: Vec<f64>) -> Result<Self, DataError> {
        if data.len() != frames * persons * joints * 3 {
            return Err(DataError::Sequence(format!(
                "{} values cannot fill [{frames}][{persons}][{joints}][3]",
                data.len()
            )));
        }
        Ok(Self { frames, persons, joints, data })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn persons(&self) -> usize {
        self.persons
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.frames, self.persons, self.joints]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, frame: usize, person: usize, joint: usize) -> usize {
        ((frame * self.persons + person) * self.joints + joint) * 3
    }

    #[inline]
    pub fn point(&self, frame: usize, person: usize, joint: usize) -> [f64; 3] {
        let o = self.offset(frame, person, joint);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set_point(&mut self, frame: usize, person: usize, joint: usize, p: [f64; 3]) {
        let o = self.offset(frame, person, joint);
        self.data[o..o + 3].copy_from_slice(&p);
    }

    /// All coordinates of one frame, `persons * joints * 3` values.
    pub fn frame(&self, frame: usize) -> &[f64] {
        let n = self.persons * self.joints * 3;
        &self.data[frame * n..(frame + 1) * n]
    }

    pub fn person_frame(&self, frame: usize, person: usize) -> &[f64] {
        let o = self.offset(frame, person, 0);
        &self.data[o..o + self.joints * 3]
    }

    pub fn person_frame_mut(&mut self, frame: usize, person: usize) -> &mut [f64] {
        let o = self.offset(frame, person, 0);
        let n = self.joints * 3;
        &mut self.data[o..o + n]
    }

    /// Copy of frames `start..start + len`.
    pub fn slice_frames(&self, start: usize, len: usize) -> Self {
        let n = self.persons * self.joints * 3;
        Self {
            frames: len,
            persons: self.persons,
            joints: self.joints,
            data: self.data[start * n..(start + len) * n].to_vec(),
        }
    }

    /// Single-person copy.
    pub fn person(&self, person: usize) -> Self {
        let mut data = Vec::with_capacity(self.frames * self.joints * 3);
        for f in 0..self.frames {
            data.extend_from_slice(self.person_frame(f, person));
        }
        Self { frames: self.frames, persons: 1, joints: self.joints, data }
    }

    pub fn translate(&mut self, v: [f64; 3]) {
        for p in self.data.chunks_exact_mut(3) {
            p[0] += v[0];
            p[1] += v[1];
            p[2] += v[2];
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

// ---------------------------------------------------------------------------
// Motion sequence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSequence {
    pub name: String,
    data: PoseTensor,
    fps: f64,
    layout: JointLayout,
    /// Per-frame per-person detection score in `[0, 1]`.
    validity: Option<Vec<f64>>,
}

impl MotionSequence {
    pub fn new(
        name: impl Into<String>,
        data: PoseTensor,
        fps: f64,
        layout: JointLayout,
        validity: Option<Vec<f64>>,
    ) -> Result<Self, DataError> {
        if data.frames == 0 || data.persons == 0 {
            return Err(DataError::Sequence("need at least one frame and one person".into()));
        }
        if data.joints != layout.len() {
            return Err(DataError::Sequence(format!(
                "{} joints in data but {} in layout",
                data.joints,
                layout.len()
            )));
        }
        if !data.all_finite() {
            return Err(DataError::Sequence("non-finite coordinate".into()));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(DataError::Sequence(format!("fps must be positive, got {fps}")));
        }
        if let Some(v) = &validity {
            if v.len() != data.frames * data.persons {
                return Err(DataError::Sequence(format!(
                    "{} validity scores for {} frames x {} persons",
                    v.len(),
                    data.frames,
                    data.persons
                )));
            }
            if v.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(DataError::Sequence("validity score outside [0, 1]".into()));
            }
        }
        Ok(Self { name: name.into(), data, fps, layout, validity })
    }

    pub fn data(&self) -> &PoseTensor {
        &self.data
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn layout(&self) -> &JointLayout {
        &self.layout
    }

    pub fn validity(&self) -> Option<&[f64]> {
        self.validity.as_deref()
    }

    pub fn frames(&self) -> usize {
        self.data.frames
    }

    pub fn persons(&self) -> usize {
        self.data.persons
    }

    pub fn joints(&self) -> usize {
        self.data.joints
    }

    /// Replaces the coordinates, keeping metadata. Shape must not change.
    pub fn with_data(&self, data: PoseTensor) -> Result<Self, DataError> {
        if data.shape() != self.data.shape() {
            return Err(DataError::Sequence("replacement data changes the shape".into()));
        }
        Self::new(self.name.clone(), data, self.fps, self.layout.clone(), self.validity.clone())
    }

    pub fn with_validity(&self, validity: Option<Vec<f64>>) -> Result<Self, DataError> {
        Self::new(self.name.clone(), self.data.clone(), self.fps, self.layout.clone(), validity)
    }
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

/// Ranges sampled per person when synthesizing a corpus. Each range is
/// `[min, max]`; equal bounds give a fixed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionParams {
    /// Pelvis ground speed in mm/s.
    pub speed_mm_s: [f64; 2],
    /// Peak limb swing angle in radians.
    pub swing_rad: [f64; 2],
    /// Gait frequency in Hz.
    pub frequency_hz: [f64; 2],
    /// Uniform body-size factor applied to bone lengths.
    pub body_scale: [f64; 2],
    /// Half-extent of the square the start positions are drawn from, mm.
    pub area_mm: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            speed_mm_s: [0.0, 1500.0],
            swing_rad: [0.0, 0.6],
            frequency_hz: [0.6, 1.4],
            body_scale: [0.9, 1.1],
            area_mm: 2000.0,
        }
    }
}

impl MotionParams {
    /// Pure translation at the given speed range.
    pub fn constant_velocity(speed_mm_s: [f64; 2]) -> Self {
        Self { speed_mm_s, swing_rad: [0.0, 0.0], ..Self::default() }
    }

    /// No motion at all.
    pub fn static_pose() -> Self {
        Self::constant_velocity([0.0, 0.0])
    }

    fn validate(&self) -> Result<(), DataError> {
        for (name, r) in [
            ("speed_mm_s", self.speed_mm_s),
            ("swing_rad", self.swing_rad),
            ("frequency_hz", self.frequency_hz),
            ("body_scale", self.body_scale),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && r[0] >= 0.0) {
                return Err(DataError::Param(format!("{name} range {r:?} is invalid")));
            }
        }
        if self.body_scale[0] <= 0.0 {
            return Err(DataError::Param("body_scale must be positive".into()));
        }
        if !(self.area_mm.is_finite() && self.area_mm >= 0.0) {
            return Err(DataError::Param("area_mm must be nonnegative".into()));
        }
        Ok(())
    }
}

fn sample_range(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

/// Walking figure on the default 13-joint layout: linear pelvis trajectory,
/// rigid torso, limbs swinging in the sagittal plane.
struct Walker {
    start: [f64; 3],
    velocity: [f64; 3],
    forward: [f64; 3],
    lateral: [f64; 3],
    swing: f64,
    omega: f64,
    phase: f64,
    scale: f64,
}

impl Walker {
    fn sample(rng: &mut ChaCha8Rng, params: &MotionParams) -> Self {
        let heading = rng.random_range(0.0..core::f64::consts::TAU);
        let (s, c) = (libm::sin(heading), libm::cos(heading));
        let speed = sample_range(rng, params.speed_mm_s);
        let start_x = if params.area_mm > 0.0 { rng.random_range(-params.area_mm..params.area_mm) } else { 0.0 };
        let start_z = if params.area_mm > 0.0 { rng.random_range(-params.area_mm..params.area_mm) } else { 0.0 };
        let swing = sample_range(rng, params.swing_rad);
        let freq = sample_range(rng, params.frequency_hz);
        let phase = rng.random_range(0.0..core::f64::consts::TAU);
        let scale = sample_range(rng, params.body_scale);
        Self {
            start: [start_x, 950.0 * scale, start_z],
            velocity: [speed * c, 0.0, speed * s],
            forward: [c, 0.0, s],
            lateral: [-s, 0.0, c],
            swing,
            omega: core::f64::consts::TAU * freq,
            phase,
            scale,
        }
    }

    /// Unit vector pointing down, rotated forward by `angle`.
    fn down(&self, angle: f64) -> [f64; 3] {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        [s * self.forward[0], -c, s * self.forward[2]]
    }

    fn pose(&self, t: f64, out: &mut [[f64; 3]; 13]) {
        let k = self.scale;
        let pelvis = add(self.start, mul(self.velocity, t));
        let a = self.swing * libm::sin(self.omega * t + self.phase);
        let up = [0.0, 1.0, 0.0];
        let side = |w: f64| mul(self.lateral, w * k);

        let l_hip = add(pelvis, side(100.0));
        let r_hip = add(pelvis, side(-100.0));
        let neck = add(pelvis, mul(up, 520.0 * k));
        let l_sho = add(neck, side(180.0));
        let r_sho = add(neck, side(-180.0));
        let nose = add(add(neck, mul(up, 170.0 * k)), mul(self.forward, 90.0 * k));

        let l_knee = add(l_hip, mul(self.down(a), 450.0 * k));
        let r_knee = add(r_hip, mul(self.down(-a), 450.0 * k));
        let l_ankle = add(l_knee, mul(self.down(a - 0.5 * self.swing), 420.0 * k));
        let r_ankle = add(r_knee, mul(self.down(-a - 0.5 * self.swing), 420.0 * k));
        let l_elb = add(l_sho, mul(self.down(-0.7 * a), 290.0 * k));
        let r_elb = add(r_sho, mul(self.down(0.7 * a), 290.0 * k));
        let l_wri = add(l_elb, mul(self.down(-0.7 * a + 0.3), 260.0 * k));
        let r_wri = add(r_elb, mul(self.down(0.7 * a + 0.3), 260.0 * k));

        *out = [nose, l_sho, r_sho, l_elb, r_elb, l_wri, r_wri, l_hip, r_hip, l_knee, r_knee, l_ankle, r_ankle];
    }
}

#[inline]
fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
fn mul(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Deterministic synthetic corpus on the default 13-joint layout.
///
/// Each person walks in a straight line at constant velocity while the limbs
/// oscillate sinusoidally; every bone length stays constant over time.
pub fn synth_corpus(
    seed: u64,
    count: usize,
    fps: f64,
    frames: usize,
    persons: usize,
    params: &MotionParams,
) -> Result<Vec<MotionSequence>, DataError> {
    if count == 0 || frames == 0 || persons == 0 {
        return Err(DataError::Param("count, frames and persons must be at least 1".into()));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(DataError::Param(format!("fps must be positive, got {fps}")));
    }
    params.validate()?;
    let layout = JointLayout::default13();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut pose = [[0.0; 3]; 13];
    for i in 0..count {
        let walkers: Vec<Walker> = (0..persons).map(|_| Walker::sample(&mut rng, params)).collect();
        let mut data = PoseTensor::zeros(frames, persons, 13);
        for f in 0..frames {
            let t = f as f64 / fps;
            for (p, w) in walkers.iter().enumerate() {
                w.pose(t, &mut pose);
                for (j, pt) in pose.iter().enumerate() {
                    data.set_point(f, p, j, *pt);
                }
            }
        }
        out.push(MotionSequence::new(format!("synth_{seed}_{i:04}"), data, fps, layout.clone(), None)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sequence transforms
// ---------------------------------------------------------------------------

/// Keeps frames `0, factor, 2·factor, …` and divides the frame rate.
pub fn downsample(seq: &MotionSequence, factor: usize) -> Result<MotionSequence, DataError> {
    if factor == 0 {
        return Err(DataError::Param("downsample factor must be at least 1".into()));
    }
    let kept: Vec<usize> = (0..seq.frames()).step_by(factor).collect();
    let mut data = Vec::with_capacity(kept.len() * seq.persons() * seq.joints() * 3);
    for &f in &kept {
        data.extend_from_slice(seq.data.frame(f));
    }
    let tensor = PoseTensor::from_vec(kept.len(), seq.persons(), seq.joints(), data)?;
    let validity = seq.validity.as_ref().map(|v| {
        let p = seq.persons();
        kept.iter().flat_map(|&f| v[f * p..(f + 1) * p].iter().copied()).collect()
    });
    MotionSequence::new(seq.name.clone(), tensor, seq.fps / factor as f64, seq.layout.clone(), validity)
}

/// Reorders or subsets joints: target joint `i` takes source joint
/// `mapping[i]`. Repeated source indices duplicate that joint.
pub fn select_joints(
    seq: &MotionSequence,
    target_layout: &JointLayout,
    mapping: &[usize],
) -> Result<MotionSequence, DataError> {
    if mapping.len() != target_layout.len() {
        return Err(DataError::Param(format!(
            "mapping has {} entries but the target layout has {} joints",
            mapping.len(),
            target_layout.len()
        )));
    }
    let src_joints = seq.joints();
    if let Some(&index) = mapping.iter().find(|&&i| i >= src_joints) {
        return Err(DataError::JointIndex { index, joints: src_joints });
    }
    let mut out = PoseTensor::zeros(seq.frames(), seq.persons(), mapping.len());
    for f in 0..seq.frames() {
        for p in 0..seq.persons() {
            for (j, &src) in mapping.iter().enumerate() {
                out.set_point(f, p, j, seq.data.point(f, p, src));
            }
        }
    }
    MotionSequence::new(seq.name.clone(), out, seq.fps, target_layout.clone(), seq.validity.clone())
}

/// Replaces every frame whose score is below `threshold` with the nearest
/// preceding valid frame of the same person. Invalid frames before the first
/// valid one copy that first valid frame. Replaced frames inherit the score of
/// the frame they were copied from.
pub fn fill_invalid_frames(seq: &MotionSequence, threshold: f64) -> Result<MotionSequence, DataError> {
    let validity = seq.validity.as_ref().ok_or(DataError::MissingValidity)?;
    let persons = seq.persons();
    let mut data = seq.data.clone();
    let mut scores = validity.clone();
    for p in 0..persons {
        let score = |f: usize| validity[f * persons + p];
        let first = (0..seq.frames())
            .find(|&f| score(f) >= threshold)
            .ok_or(DataError::NoValidFrame { person: p, threshold })?;
        let mut source = first;
        for f in 0..seq.frames() {
            if score(f) >= threshold {
                source = f;
            } else {
                let copy = seq.data.person_frame(source, p).to_vec();
                data.person_frame_mut(f, p).copy_from_slice(&copy);
                scores[f * persons + p] = score(source);
            }
        }
    }
    MotionSequence::new(seq.name.clone(), data, seq.fps, seq.layout.clone(), Some(scores))
}

/// Length conversion for legacy datasets stored in scaled inches.
pub const LEGACY_SCALE: f64 = {
    let si2m = (1.0 / 0.45) * 2.54 / 100.0;
    (10.0 * 3.0 / 1.8 * si2m) / 1.8
};

/// Converts a legacy scaled-inch length to meters.
pub fn scale_correct_legacy(value: f64) -> f64 {
    value * LEGACY_SCALE
}

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub t_in: usize,
    pub t_out: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(t_in: usize, t_out: usize, stride: usize) -> Result<Self, DataError> {
        if t_in < 2 || t_out < 1 || stride < 1 {
            return Err(DataError::Window(format!(
                "need t_in >= 2, t_out >= 1, stride >= 1 (got {t_in}, {t_out}, {stride})"
            )));
        }
        Ok(Self { t_in, t_out, stride })
    }

    /// Input twice as long as the output.
    pub fn for_output(t_out: usize, stride: usize) -> Result<Self, DataError> {
        Self::new(2 * t_out, t_out, stride)
    }

    /// Number of windows a sequence of `frames` frames yields.
    pub fn count(&self, frames: usize) -> usize {
        let need = self.t_in + self.t_out;
        if frames < need {
            0
        } else {
            (frames - need) / self.stride + 1
        }
    }
}

/// How [`make_windows`] treats multi-person sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PersonMode {
    /// One window per person.
    #[default]
    Separate,
    /// One window holding every person.
    Merged,
}

/// A paired model input and forecast target.
///
/// Multi-person windows keep the person axis; a two-person 13-joint window is
/// the 26-joint sample the model sees after flattening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastWindow {
    pub input: PoseTensor,
    pub target: PoseTensor,
    pub fps: f64,
    pub centered: bool,
    /// Subtracted from every coordinate when centered; zero otherwise.
    pub offset: [f64; 3],
    pub left_hip: usize,
    pub right_hip: usize,
}

impl ForecastWindow {
    pub fn t_in(&self) -> usize {
        self.input.frames()
    }

    pub fn t_out(&self) -> usize {
        self.target.frames()
    }

    pub fn persons(&self) -> usize {
        self.input.persons()
    }

    pub fn joints(&self) -> usize {
        self.input.joints()
    }

    /// Joint count seen by a model (persons × joints).
    pub fn total_joints(&self) -> usize {
        self.persons() * self.joints()
    }

    /// Mean over persons of the hip midpoint in the last input frame.
    pub fn anchor(&self) -> [f64; 3] {
        let last = self.t_in() - 1;
        let mut acc = [0.0; 3];
        for p in 0..self.persons() {
            let l = self.input.point(last, p, self.left_hip);
            let r = self.input.point(last, p, self.right_hip);
            for k in 0..3 {
                acc[k] += 0.5 * (l[k] + r[k]);
            }
        }
        let n = self.persons() as f64;
        [acc[0] / n, acc[1] / n, acc[2] / n]
    }

    /// Applies `v` to every input and target coordinate.
    pub fn translated(&self, v: [f64; 3]) -> Self {
        let mut w = self.clone();
        w.input.translate(v);
        w.target.translate(v);
        w
    }
}

/// Cuts a sequence into windows starting at `0, stride, 2·stride, …`.
/// Sequences shorter than `t_in + t_out` produce no windows.
pub fn make_windows(seq: &MotionSequence, spec: &WindowSpec, mode: PersonMode) -> Vec<ForecastWindow> {
    let n = spec.count(seq.frames());
    let mut out = Vec::new();
    for i in 0..n {
        let start = i * spec.stride;
        let input = seq.data.slice_frames(start, spec.t_in);
        let target = seq.data.slice_frames(start + spec.t_in, spec.t_out);
        let make = |input: PoseTensor, target: PoseTensor| ForecastWindow {
            input,
            target,
            fps: seq.fps,
            centered: false,
            offset: [0.0; 3],
            left_hip: seq.layout.left_hip,
            right_hip: seq.layout.right_hip,
        };
        match mode {
            PersonMode::Merged => out.push(make(input, target)),
            PersonMode::Separate => {
                for p in 0..seq.persons() {
                    out.push(make(input.person(p), target.person(p)));
                }
            }
        }
    }
    out
}

/// Moves the window so the (mean) hip midpoint of the last input frame is
/// the origin.
pub fn center_window(w: &ForecastWindow) -> Result<ForecastWindow, DataError> {
    if w.centered {
        return Err(DataError::AlreadyCentered);
    }
    let offset = w.anchor();
    let mut out = w.translated([-offset[0], -offset[1], -offset[2]]);
    out.centered = true;
    out.offset = offset;
    Ok(out)
}

pub fn uncenter_window(w: &ForecastWindow) -> Result<ForecastWindow, DataError> {
    if !w.centered {
        return Err(DataError::NotCentered);
    }
    let mut out = w.translated(w.offset);
    out.centered = false;
    out.offset = [0.0; 3];
    Ok(out)
}

/// Anchor used by [`merge_persons`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MergeAnchor {
    /// Keep global coordinates.
    #[default]
    Uncentered,
    /// Center on the mean of all persons' hip midpoints.
    SharedMidHip,
}

/// Stacks windows along the person axis in the given order. Centered inputs
/// are uncentered first so relative placement between persons survives.
pub fn merge_persons(windows: &[ForecastWindow], anchor: MergeAnchor) -> Result<ForecastWindow, DataError> {
    let first = windows.first().ok_or_else(|| DataError::Merge("no windows".into()))?;
    for w in windows {
        if w.t_in() != first.t_in() || w.t_out() != first.t_out() {
            return Err(DataError::Merge("differing input/output lengths".into()));
        }
        if w.joints() != first.joints() || w.left_hip != first.left_hip || w.right_hip != first.right_hip {
            return Err(DataError::Merge("differing joint layouts".into()));
        }
        if w.fps != first.fps {
            return Err(DataError::Merge("differing frame rates".into()));
        }
    }
    let global: Vec<ForecastWindow> =
        windows.iter().map(|w| if w.centered { uncenter_window(w) } else { Ok(w.clone()) }).collect::<Result<_, _>>()?;
    let stack = |pick: fn(&ForecastWindow) -> &PoseTensor| -> Result<PoseTensor, DataError> {
        let frames = pick(first).frames();
        let persons: usize = global.iter().map(|w| pick(w).persons()).sum();
        let joints = first.joints();
        let mut data = Vec::with_capacity(frames * persons * joints * 3);
        for f in 0..frames {
            for w in &global {
                data.extend_from_slice(pick(w).frame(f));
            }
        }
        PoseTensor::from_vec(frames, persons, joints, data)
    };
    let merged = ForecastWindow {
        input: stack(|w| &w.input)?,
        target: stack(|w| &w.target)?,
        fps: first.fps,
        centered: false,
        offset: [0.0; 3],
        left_hip: first.left_hip,
        right_hip: first.right_hip,
    };
    match anchor {
        MergeAnchor::Uncentered => Ok(merged),
        MergeAnchor::SharedMidHip => center_window(&merged),
    }
}

/// Inverse of [`merge_persons`]: one uncentered single-person window per person.
pub fn split_persons(w: &ForecastWindow) -> Result<Vec<ForecastWindow>, DataError> {
    let global = if w.centered { uncenter_window(w)? } else { w.clone() };
    Ok((0..global.persons())
        .map(|p| ForecastWindow {
            input: global.input.person(p),
            target: global.target.person(p),
            ..global.clone()
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Corpus split
// ---------------------------------------------------------------------------

/// Which split a sequence belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

fn name_hash(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(name.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // splitmix64 finalizer; raw FNV high bits barely move for short suffixes
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Deterministic split by a hash of `(seed, name)`. `ratios` are the train
/// and validation fractions; the rest is test.
pub fn assign_split(seed: u64, name: &str, ratios: [f64; 2]) -> Split {
    let u = (name_hash(seed, name) >> 11) as f64 / (1u64 << 53) as f64;
    if u < ratios[0] {
        Split::Train
    } else if u < ratios[0] + ratios[1] {
        Split::Val
    } else {
        Split::Test
    }
}

/// Partitions a corpus into `(train, val, test)`, default ratios 80/10/10.
pub fn split_corpus(
    seqs: &[MotionSequence],
    seed: u64,
    ratios: [f64; 2],
) -> (Vec<MotionSequence>, Vec<MotionSequence>, Vec<MotionSequence>) {
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for s in seqs {
        match assign_split(seed, &s.name, ratios) {
            Split::Train => train.push(s.clone()),
            Split::Val => val.push(s.clone()),
            Split::Test => test.push(s.clone()),
        }
    }
    (train, val, test)
}

pub const DEFAULT_SPLIT: [f64; 2] = [0.8, 0.1];
