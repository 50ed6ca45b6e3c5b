//! SMF: one JSON header plus one little-endian f32 blob per sequence.
//!
//! Files are named `{index:05}_{name}.json` / `.bin`; the index keeps names
//! unique and fixes the load order, which is lexicographic by header file name.
//! The blob holds coordinates frame-major, then person, joint and xyz,
//! followed by `frames · persons` validity scores when `has_validity` is set.

use std::fs;
use std::path::{Path, PathBuf};

use posecast_core::motion_data::{DataError, JointLayout, MotionSequence, PoseTensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SmfError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed header: {message}", path.display())]
    Header { path: PathBuf, message: String },
    #[error("{}: blob holds {got} values but the header declares {expected}", path.display())]
    Shape { path: PathBuf, expected: usize, got: usize },
    #[error("{}: non-finite coordinate at value {index}", path.display())]
    NonFinite { path: PathBuf, index: usize },
    #[error("{}: {source}", path.display())]
    Invalid { path: PathBuf, source: DataError },
    #[error("{}: layout differs from the expected joint layout", path.display())]
    Layout { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmfHeader {
    pub name: String,
    pub fps: f64,
    pub persons: usize,
    pub frames: usize,
    pub joints: usize,
    pub joint_names: Vec<String>,
    pub left_hip: usize,
    pub right_hip: usize,
    pub edges: Vec<[usize; 2]>,
    pub has_validity: bool,
}

impl SmfHeader {
    fn of(seq: &MotionSequence) -> Self {
        let layout = seq.layout();
        Self {
            name: seq.name.clone(),
            fps: seq.fps(),
            persons: seq.persons(),
            frames: seq.frames(),
            joints: seq.joints(),
            joint_names: layout.names().to_vec(),
            left_hip: layout.left_hip(),
            right_hip: layout.right_hip(),
            edges: layout.edges().to_vec(),
            has_validity: seq.validity().is_some(),
        }
    }

    fn value_count(&self) -> usize {
        let coords = self.frames * self.persons * self.joints * 3;
        coords + if self.has_validity { self.frames * self.persons } else { 0 }
    }
}

/// Keeps file names portable: anything outside `[A-Za-z0-9._-]` becomes `_`.
fn file_stem(index: usize, name: &str) -> String {
    let clean: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect();
    format!("{index:05}_{clean}")
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> SmfError + '_ {
    move |source| SmfError::Io { path: path.to_path_buf(), source }
}

/// Writes every sequence into `dir` (created if needed) and returns the
/// header paths in order.
pub fn save_sequences(seqs: &[MotionSequence], dir: &Path) -> Result<Vec<PathBuf>, SmfError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::with_capacity(seqs.len());
    for (i, seq) in seqs.iter().enumerate() {
        let stem = file_stem(i, &seq.name);
        let header_path = dir.join(format!("{stem}.json"));
        let blob_path = dir.join(format!("{stem}.bin"));
        let header = SmfHeader::of(seq);
        let json = serde_json::to_vec_pretty(&header).expect("header serializes");
        fs::write(&header_path, json).map_err(io(&header_path))?;

        let mut blob = Vec::with_capacity(header.value_count() * 4);
        for &v in seq.data().data() {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for &v in seq.validity().unwrap_or(&[]) {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
        fs::write(&blob_path, blob).map_err(io(&blob_path))?;
        written.push(header_path);
    }
    Ok(written)
}

/// Reads one sequence given its header path; the blob sits next to it.
pub fn read_sequence(header_path: &Path) -> Result<MotionSequence, SmfError> {
    let text = fs::read(header_path).map_err(io(header_path))?;
    let header: SmfHeader = serde_json::from_slice(&text)
        .map_err(|e| SmfError::Header { path: header_path.to_path_buf(), message: e.to_string() })?;
    if header.joint_names.len() != header.joints {
        return Err(SmfError::Header {
            path: header_path.to_path_buf(),
            message: format!("{} joint names for {} joints", header.joint_names.len(), header.joints),
        });
    }
    let blob_path = header_path.with_extension("bin");
    let bytes = fs::read(&blob_path).map_err(io(&blob_path))?;
    let expected = header.value_count();
    if bytes.len() % 4 != 0 || bytes.len() / 4 != expected {
        return Err(SmfError::Shape { path: blob_path, expected, got: bytes.len() / 4 });
    }
    let values: Vec<f64> =
        bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64).collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(SmfError::NonFinite { path: blob_path, index });
    }
    let coords = header.frames * header.persons * header.joints * 3;
    let invalid = |source| SmfError::Invalid { path: header_path.to_path_buf(), source };
    let layout = JointLayout::new(header.joint_names, header.left_hip, header.right_hip, header.edges)
        .map_err(invalid)?;
    let data = PoseTensor::from_vec(header.frames, header.persons, header.joints, values[..coords].to_vec())
        .map_err(invalid)?;
    let validity = header.has_validity.then(|| values[coords..].to_vec());
    MotionSequence::new(header.name, data, header.fps, layout, validity).map_err(invalid)
}

/// Header files in `dir`, sorted by file name.
pub fn header_paths(dir: &Path) -> Result<Vec<PathBuf>, SmfError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        if path.extension().is_some_and(|e| e == "json") && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every sequence in `dir` in lexicographic header order. An empty
/// directory gives an empty list.
pub fn load_sequences(dir: &Path) -> Result<Vec<MotionSequence>, SmfError> {
    header_paths(dir)?.iter().map(|p| read_sequence(p)).collect()
}

/// As [`load_sequences`], additionally requiring every sequence to use
/// `layout`.
pub fn load_sequences_with_layout(dir: &Path, layout: &JointLayout) -> Result<Vec<MotionSequence>, SmfError> {
    let paths = header_paths(dir)?;
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let seq = read_sequence(&p)?;
        if seq.layout() != layout {
            return Err(SmfError::Layout { path: p });
        }
        out.push(seq);
    }
    Ok(out)
}

/// Rounds coordinates and scores to f32, the precision SMF stores.
pub fn quantize(seq: &MotionSequence) -> MotionSequence {
    let data = seq.data();
    let values = data.data().iter().map(|&v| v as f32 as f64).collect();
    let tensor = PoseTensor::from_vec(data.frames(), data.persons(), data.joints(), values).expect("same shape");
    let validity = seq.validity().map(|v| v.iter().map(|&s| s as f32 as f64).collect());
    MotionSequence::new(seq.name.clone(), tensor, seq.fps(), seq.layout().clone(), validity).expect("still valid")
}
