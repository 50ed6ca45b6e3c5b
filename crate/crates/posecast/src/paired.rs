//! Paired corpora on disk: `noisy/` and `clean/` SMF directories plus a
//! `manifest.json` that links sequences by file name and records provenance.

use std::fs;
use std::path::{Path, PathBuf};

use posecast_core::noise_lab::{NoiseError, PairedCorpus, Provenance};
use serde::{Deserialize, Serialize};

use crate::smf::{self, SmfError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PairedError {
    #[error(transparent)]
    Smf(#[from] SmfError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed manifest: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Pairing { path: PathBuf, source: NoiseError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub noisy: String,
    pub clean: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub pairs: Vec<PairEntry>,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn save_paired(corpus: &PairedCorpus, dir: &Path) -> Result<(), PairedError> {
    let noisy = smf::save_sequences(corpus.noisy_sequences(), &dir.join("noisy"))?;
    let clean = smf::save_sequences(corpus.clean_sequences(), &dir.join("clean"))?;
    let pairs =
        noisy.iter().zip(&clean).map(|(n, c)| PairEntry { noisy: file_name(n), clean: file_name(c) }).collect();
    let manifest = Manifest { schema_version: MANIFEST_SCHEMA, provenance: corpus.provenance.clone(), pairs };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|source| PairedError::Io { path, source })
}

pub fn load_paired(dir: &Path) -> Result<PairedCorpus, PairedError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(|source| PairedError::Io { path: path.clone(), source })?;
    let manifest: Manifest = serde_json::from_slice(&text)
        .map_err(|e| PairedError::Manifest { path: path.clone(), message: e.to_string() })?;
    if manifest.schema_version != MANIFEST_SCHEMA {
        return Err(PairedError::Manifest {
            path,
            message: format!("schema_version {} is not supported", manifest.schema_version),
        });
    }
    let mut noisy = Vec::with_capacity(manifest.pairs.len());
    let mut clean = Vec::with_capacity(manifest.pairs.len());
    for pair in &manifest.pairs {
        noisy.push(smf::read_sequence(&dir.join("noisy").join(&pair.noisy))?);
        clean.push(smf::read_sequence(&dir.join("clean").join(&pair.clean))?);
    }
    PairedCorpus::new(noisy, clean, manifest.provenance).map_err(|source| PairedError::Pairing { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use posecast_core::motion_data::{synth_corpus, MotionParams};
    use posecast_core::noise_lab::{build_noisy_benchmark, NoiseSource, NoiseSpec};

    #[test]
    fn round_trip_keeps_pairs_and_provenance() {
        let clean: Vec<_> = synth_corpus(2, 3, 25.0, 20, 1, &MotionParams::default())
            .unwrap()
            .iter()
            .map(smf::quantize)
            .collect();
        let corpus = build_noisy_benchmark(clean, NoiseSource::Gaussian(NoiseSpec::default())).unwrap();
        let corpus = PairedCorpus::new(
            corpus.noisy_sequences().iter().map(smf::quantize).collect(),
            corpus.clean_sequences().to_vec(),
            corpus.provenance.clone(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_paired(&corpus, dir.path()).unwrap();
        assert_eq!(load_paired(dir.path()).unwrap(), corpus);
    }

    #[test]
    fn misaligned_pair_on_disk_is_rejected() {
        let seqs = synth_corpus(2, 2, 25.0, 20, 1, &MotionParams::default()).unwrap();
        let corpus = PairedCorpus::new(seqs.clone(), seqs, Provenance::EstimatorImport).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_paired(&corpus, dir.path()).unwrap();
        let short = synth_corpus(9, 1, 25.0, 15, 1, &MotionParams::default()).unwrap();
        let noisy_dir = dir.path().join("noisy");
        fs::remove_dir_all(&noisy_dir).unwrap();
        smf::save_sequences(&[short[0].clone(), short[0].clone()], &noisy_dir).unwrap();
        // file names change with the sequence name, so rewrite the manifest entries
        let mut m: Manifest = serde_json::from_slice(&fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        let names: Vec<_> = smf::header_paths(&noisy_dir).unwrap().iter().map(|p| file_name(p)).collect();
        for (pair, n) in m.pairs.iter_mut().zip(names) {
            pair.noisy = n;
        }
        fs::write(dir.path().join(MANIFEST_FILE), serde_json::to_vec(&m).unwrap()).unwrap();
        assert!(matches!(load_paired(dir.path()), Err(PairedError::Pairing { .. })));
    }
}
