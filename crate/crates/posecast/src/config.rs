//! Run configuration: a schema-versioned JSON document whose fields
//! command-line flags may override.
//!
//! Every section has defaults, so `{"schema_version": 1}` is a complete
//! config. The run seed drives every random stream; the seed fields inside
//! the nested noise specs are overwritten from it.

use std::fs;
use std::path::{Path, PathBuf};

use posecast_core::motion_conformer::{ModelConfig, TrainConfig};
use posecast_core::motion_data::{MotionParams, PersonMode, WindowSpec, DEFAULT_SPLIT};
use posecast_core::noise_lab::{EstimatorNoise, NoiseSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::render::RenderSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the root that relative output paths resolve
/// against.
pub const OUT_ROOT_ENV: &str = "POSECAST_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RepeatLast,
    LastDelta,
    Ridge,
    MotionConformer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Tiny,
    #[default]
    Toy,
    PaperScale,
}

impl Preset {
    pub fn build(self, t_in: usize, t_out: usize, joints: usize) -> ModelConfig {
        match self {
            Preset::Tiny => ModelConfig::tiny(t_in, t_out, joints),
            Preset::Toy => ModelConfig::toy(t_in, t_out, joints),
            Preset::PaperScale => ModelConfig::paper_scale(t_in, t_out, joints),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub count: usize,
    pub fps: f64,
    pub frames: usize,
    pub persons: usize,
    pub motion: MotionParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { count: 20, fps: 25.0, frames: 150, persons: 1, motion: MotionParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub warmup: usize,
    pub iters: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { warmup: 5, iters: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Skips wall-clock measurements so reports are reproducible byte for
    /// byte.
    pub deterministic: bool,
    pub window: WindowSpec,
    pub person_mode: PersonMode,
    pub horizons_ms: Vec<u32>,
    /// Train/validation fractions of the name-hash split; the rest is test.
    pub split: [f64; 2],
    pub method: Method,
    pub preset: Preset,
    /// Full model config; overrides `preset` when present.
    pub model: Option<ModelConfig>,
    pub train: TrainConfig,
    pub ridge_lambda: f64,
    pub noise: NoiseSpec,
    pub estimator: EstimatorNoise,
    pub synth: SynthConfig,
    pub bench: BenchConfig,
    pub render: RenderSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            deterministic: false,
            window: WindowSpec { t_in: 50, t_out: 25, stride: 5 },
            person_mode: PersonMode::Separate,
            horizons_ms: vec![400, 1000],
            split: DEFAULT_SPLIT,
            method: Method::MotionConformer,
            preset: Preset::Toy,
            model: None,
            train: TrainConfig::default(),
            ridge_lambda: posecast_core::baselines::DEFAULT_RIDGE_LAMBDA,
            noise: NoiseSpec::default(),
            estimator: EstimatorNoise::default(),
            synth: SynthConfig::default(),
            bench: BenchConfig::default(),
            render: RenderSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read(path).map_err(CliError::io(path))?;
        let value: serde_json::Value = serde_json::from_slice(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(CliError::Config(format!("{}: unsupported schema_version {v}", path.display())))
            }
            None => return Err(CliError::Config(format!("{}: missing schema_version", path.display()))),
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        let json = serde_json::to_string_pretty(self).expect("config serializes") + "\n";
        fs::write(path, json).map_err(CliError::io(path))
    }

    /// Copies the run seed into every nested spec and checks the sections.
    pub fn finalize(mut self) -> Result<Self, CliError> {
        self.train.seed = self.seed;
        self.noise.seed = self.seed.wrapping_add(1);
        self.estimator.seed = self.seed.wrapping_add(2);
        WindowSpec::new(self.window.t_in, self.window.t_out, self.window.stride)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.horizons_ms.is_empty() || self.horizons_ms.contains(&0) {
            return Err(CliError::Config("horizons must be positive and nonempty".into()));
        }
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.estimator.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(m) = &self.model {
            m.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(self)
    }

    /// Model config for windows with `joints` total joints.
    pub fn model_config(&self, joints: usize) -> ModelConfig {
        match &self.model {
            Some(m) => ModelConfig { t_in: self.window.t_in, t_out: self.window.t_out, joints, ..m.clone() },
            None => self.preset.build(self.window.t_in, self.window.t_out, joints),
        }
    }
}

/// Output root from the environment, else the working directory.
pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

/// Relative paths resolve against the output root.
pub fn resolve(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_is_complete() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"schema_version": 1, "seed": 7, "train": {"epochs": 2}}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap().finalize().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.train.epochs, 2);
        assert_eq!(cfg.window, RunConfig::default().window);
    }

    #[test]
    fn schema_version_is_required_and_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"seed": 1}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
        fs::write(&path, r#"{"schema_version": 2}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
        fs::write(&path, r#"{"schema_version": 1, "bogus": true}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let cfg = RunConfig { seed: 3, preset: Preset::Tiny, ..Default::default() };
        cfg.save(&path).unwrap();
        assert_eq!(RunConfig::load(&path).unwrap(), cfg);
    }

    #[test]
    fn relative_paths_use_the_root() {
        assert_eq!(resolve(Path::new("/o"), Path::new("a/b")), PathBuf::from("/o/a/b"));
        assert_eq!(resolve(Path::new("/o"), Path::new("/x")), PathBuf::from("/x"));
    }
}
