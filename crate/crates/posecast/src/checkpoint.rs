//! Single-file checkpoint container.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, the JSON
//! header, then every tensor listed in the header as row-major f32
//! little-endian values, in header order.

use std::fs;
use std::path::{Path, PathBuf};

use posecast_core::autograd::ParamSet;
use posecast_core::baselines::RidgeModel;
use posecast_core::motion_conformer::{ModelConfig, ModelError, MotionConformer};
use posecast_core::tensor::Mat;
use serde::{Deserialize, Serialize};

pub const MAGIC: [u8; 8] = *b"PCKPT\0\0\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: not a checkpoint file", path.display())]
    Magic { path: PathBuf },
    #[error("{}: format version {found} is not supported (expected {FORMAT_VERSION})", path.display())]
    Version { path: PathBuf, found: u32 },
    #[error("{}: corrupt checkpoint: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
    #[error("{}: checkpoint holds a {found} model, expected {expected}", path.display())]
    Kind { path: PathBuf, expected: &'static str, found: String },
    #[error("{}: checkpoint was trained for {found} joints, expected {expected}", path.display())]
    Joints { path: PathBuf, expected: usize, found: usize },
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ModelError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeMeta {
    pub lambda: f64,
    pub input_shape: [usize; 3],
    pub output_shape: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelHeader {
    MotionConformer { config: ModelConfig, epochs_trained: usize },
    Ridge(RidgeMeta),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelHeader,
    pub tensors: Vec<TensorEntry>,
}

/// Any model the container can hold.
#[derive(Debug, Clone)]
pub enum Checkpoint {
    MotionConformer(MotionConformer<f32>),
    Ridge(RidgeModel),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.to_path_buf(), source }
}

fn write_container(path: &Path, header: &CheckpointHeader, values: &[f32]) -> Result<(), CheckpointError> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut bytes = Vec::with_capacity(20 + json.len() + values.len() * 4);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    fs::write(path, bytes).map_err(io(path))
}

/// Parses the container and returns the header plus one matrix per entry.
fn read_container(path: &Path) -> Result<(CheckpointHeader, Vec<Mat<f32>>), CheckpointError> {
    let bytes = fs::read(path).map_err(io(path))?;
    let corrupt = |message: String| CheckpointError::Corrupt { path: path.to_path_buf(), message };
    if bytes.len() < 20 || bytes[..8] != MAGIC {
        return Err(CheckpointError::Magic { path: path.to_path_buf() });
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version { path: path.to_path_buf(), found: version });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body = &bytes[20..];
    if header_len > body.len() {
        return Err(corrupt(format!("header length {header_len} exceeds file size")));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&body[..header_len]).map_err(|e| corrupt(format!("header: {e}")))?;
    let mut data = &body[header_len..];
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for t in &header.tensors {
        let n = t.rows * t.cols;
        if data.len() < n * 4 {
            return Err(corrupt(format!("tensor `{}` is truncated", t.name)));
        }
        let values =
            data[..n * 4].chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        tensors.push(Mat::from_vec(t.rows, t.cols, values));
        data = &data[n * 4..];
    }
    if !data.is_empty() {
        return Err(corrupt(format!("{} trailing bytes", data.len())));
    }
    Ok((header, tensors))
}

pub fn save_conformer(model: &MotionConformer<f32>, path: &Path) -> Result<(), CheckpointError> {
    let params = model.params();
    let tensors =
        params.iter().map(|(name, m)| TensorEntry { name: name.into(), rows: m.rows(), cols: m.cols() }).collect();
    let header = CheckpointHeader {
        model: ModelHeader::MotionConformer { config: model.config().clone(), epochs_trained: model.epochs_trained },
        tensors,
    };
    let values: Vec<f32> = params.values().iter().flat_map(|m| m.data().iter().copied()).collect();
    write_container(path, &header, &values)
}

/// Ridge weights are stored at f32 precision like every other tensor.
pub fn save_ridge(model: &RidgeModel, path: &Path) -> Result<(), CheckpointError> {
    let w = &model.weights;
    let header = CheckpointHeader {
        model: ModelHeader::Ridge(RidgeMeta {
            lambda: model.lambda,
            input_shape: model.input_shape,
            output_shape: model.output_shape,
        }),
        tensors: vec![TensorEntry { name: "weights".into(), rows: w.rows(), cols: w.cols() }],
    };
    let values: Vec<f32> = w.data().iter().map(|&v| v as f32).collect();
    write_container(path, &header, &values)
}

pub fn save_checkpoint(model: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    match model {
        Checkpoint::MotionConformer(m) => save_conformer(m, path),
        Checkpoint::Ridge(m) => save_ridge(m, path),
    }
}

/// Rebuilds whatever model the file holds; no external config is needed.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let (header, tensors) = read_container(path)?;
    match header.model {
        ModelHeader::MotionConformer { config, epochs_trained } => {
            let mut params = ParamSet::new();
            for (entry, m) in header.tensors.iter().zip(tensors) {
                params.add(entry.name.clone(), m);
            }
            MotionConformer::from_params(config, params, epochs_trained)
                .map(Checkpoint::MotionConformer)
                .map_err(|source| CheckpointError::Model { path: path.to_path_buf(), source })
        }
        ModelHeader::Ridge(meta) => {
            let corrupt = |message: String| CheckpointError::Corrupt { path: path.to_path_buf(), message };
            let w = tensors.into_iter().next().ok_or_else(|| corrupt("ridge weights missing".into()))?;
            let [ti, pi, ji] = meta.input_shape;
            let [to, po, jo] = meta.output_shape;
            if w.shape() != (ti * pi * ji * 3 + 1, to * po * jo * 3) {
                return Err(corrupt(format!("ridge weights {:?} do not match the recorded shapes", w.shape())));
            }
            Ok(Checkpoint::Ridge(RidgeModel {
                weights: w.cast(),
                lambda: meta.lambda,
                input_shape: meta.input_shape,
                output_shape: meta.output_shape,
            }))
        }
    }
}

/// Loads a MotionConformer and checks it was built for `joints` total joints.
pub fn load_conformer(path: &Path, joints: Option<usize>) -> Result<MotionConformer<f32>, CheckpointError> {
    match load_checkpoint(path)? {
        Checkpoint::MotionConformer(m) => {
            if let Some(expected) = joints.filter(|&j| j != m.config().joints) {
                return Err(CheckpointError::Joints { path: path.to_path_buf(), expected, found: m.config().joints });
            }
            Ok(m)
        }
        Checkpoint::Ridge(_) => {
            Err(CheckpointError::Kind { path: path.to_path_buf(), expected: "motion_conformer", found: "ridge".into() })
        }
    }
}

/// Reads only the header, e.g. to inspect the stored config.
pub fn read_header(path: &Path) -> Result<CheckpointHeader, CheckpointError> {
    read_container(path).map(|(h, _)| h)
}

impl Checkpoint {
    pub fn kind(&self) -> &'static str {
        match self {
            Checkpoint::MotionConformer(_) => "motion_conformer",
            Checkpoint::Ridge(_) => "ridge",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use posecast_core::baselines::ridge_fit;
    use posecast_core::motion_data::{center_window, make_windows, synth_corpus, MotionParams, PersonMode, WindowSpec};

    fn trained_like(seed: u64) -> MotionConformer<f32> {
        let mut m = MotionConformer::<f32>::new(ModelConfig::tiny(10, 5, 13), seed).unwrap();
        // perturb every tensor so the zero head does not hide a broken reload
        for (k, t) in m.params_mut().values_mut().iter_mut().enumerate() {
            for (i, v) in t.data_mut().iter_mut().enumerate() {
                *v += ((i * 7 + k * 13) % 17) as f32 * 1e-3;
            }
        }
        m.epochs_trained = 4;
        m
    }

    fn input(seed: u64) -> Mat<f32> {
        Mat::from_fn(10, 39, |r, c| ((r * 31 + c * 17 + seed as usize) % 97) as f32 * 9.0 - 400.0)
    }

    #[test]
    fn conformer_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let m = trained_like(1);
        save_conformer(&m, &path).unwrap();
        let back = load_conformer(&path, Some(13)).unwrap();
        assert_eq!(back.config(), m.config());
        assert_eq!(back.epochs_trained, 4);
        let x = [input(1), input(2)];
        let (a, b) = (m.forward(&x).unwrap(), back.forward(&x).unwrap());
        for (ya, yb) in a.iter().zip(&b) {
            let bits = |y: &Mat<f32>| y.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(ya), bits(yb));
        }
    }

    #[test]
    fn joint_mismatch_is_an_explicit_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_conformer(&trained_like(2), &path).unwrap();
        assert!(matches!(load_conformer(&path, Some(26)), Err(CheckpointError::Joints { expected: 26, found: 13, .. })));
    }

    #[test]
    fn header_and_version_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_conformer(&trained_like(3), &path).unwrap();
        let header = read_header(&path).unwrap();
        assert!(matches!(header.model, ModelHeader::MotionConformer { .. }));

        let mut bytes = fs::read(&path).unwrap();
        bytes[8] = 9;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(CheckpointError::Version { found: 9, .. })));

        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(CheckpointError::Magic { .. })));
    }

    #[test]
    fn truncated_tensor_data_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_conformer(&trained_like(4), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(CheckpointError::Corrupt { .. })));
    }

    #[test]
    fn renamed_tensor_is_a_model_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_conformer(&trained_like(5), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let mut patched = bytes.clone();
        let pos = bytes.windows(12).position(|w| w == b"input.weight").unwrap();
        patched[pos + 11] = b'x';
        fs::write(&path, &patched).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(CheckpointError::Model { .. })));
    }

    #[test]
    fn ridge_round_trip_at_f32_precision() {
        let seqs = synth_corpus(1, 4, 25.0, 40, 1, &MotionParams::default()).unwrap();
        let spec = WindowSpec::new(10, 5, 3).unwrap();
        let windows: Vec<_> = seqs
            .iter()
            .flat_map(|s| make_windows(s, &spec, PersonMode::Separate))
            .map(|w| center_window(&w).unwrap())
            .collect();
        let ridge = ridge_fit(&windows, 100.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.ckpt");
        save_ridge(&ridge, &path).unwrap();
        let Checkpoint::Ridge(back) = load_checkpoint(&path).unwrap() else { panic!("wrong kind") };
        assert_eq!(back.input_shape, ridge.input_shape);
        assert_eq!(back.lambda, 100.0);
        for (a, b) in back.weights.data().iter().zip(ridge.weights.data()) {
            assert_eq!(*a, *b as f32 as f64);
        }
        // a second save of the reloaded model is byte-identical
        let again = dir.path().join("r2.ckpt");
        save_ridge(&back, &again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
        assert!(matches!(load_conformer(&path, None), Err(CheckpointError::Kind { .. })));
    }
}
