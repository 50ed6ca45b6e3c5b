//! Subcommands of the `posecast` binary.
//!
//! Relative paths given on the command line resolve against the output root
//! (`POSECAST_OUT`, else the working directory). Input paths follow the same
//! rule so a whole experiment can live under one root.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use posecast_core::baselines::{ridge_fit, LastDeltaAverage, RepeatLastFrame};
use posecast_core::metrics::{evaluate, fce, measure_fps, predict_global, Forecaster, HorizonSet, MetricReport, Timing};
use posecast_core::motion_conformer::{train, MotionConformer, SpecAugSpec, TrainError, TrainHistory};
use posecast_core::motion_data::{
    center_window, downsample, fill_invalid_frames, make_windows, select_joints, split_corpus, synth_corpus,
    ForecastWindow, JointLayout, MotionParams, MotionSequence, H36M32_TO_DEFAULT13,
};
use posecast_core::noise_lab::{
    build_noisy_benchmark, evaluate_dual, DualReport, finetune_config, finetune_on_noisy, simulate_estimator, time_zero_error,
    NoiseError, NoiseSource, PairedCorpus, Provenance, IMPORT_VALIDITY_THRESHOLD,
};
use serde::Serialize;

use crate::checkpoint::{load_checkpoint, load_conformer, save_conformer, save_ridge, Checkpoint};
use crate::clock::WallClock;
use crate::config::{out_root, resolve, Method, Preset, RunConfig};
use crate::error::CliError;
use crate::paired::{load_paired, save_paired, MANIFEST_FILE};
use crate::render::{render, write_render};
use crate::report::{compare, comparison_csv, format_table, read_report, write_dual_report, write_history, write_report};
use crate::smf::{load_sequences, save_sequences};

#[derive(Debug, Parser)]
#[command(name = "posecast", version, about = "Absolute 3D human pose forecasting benchmark")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run seed; every random stream derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON run config with a `schema_version` key; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Reproducible mode: no wall-clock measurements.
    #[arg(long, global = true)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MotionKind {
    Walk,
    Static,
    ConstantVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairedKind {
    Gaussian,
    Estimator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JointMap {
    /// 32-joint motion-capture skeleton to the 13-joint layout.
    H36m32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic SMF corpus, optionally paired with a noisy copy.
    Synth(SynthArgs),
    /// Convert an SMF corpus (joint mapping, frame skipping, invalid-frame repair).
    Import(ImportArgs),
    /// Train a model and write a checkpoint plus history CSV.
    Train(TrainArgs),
    /// Continue training a checkpoint on noisy data without clean labels.
    Finetune(FinetuneArgs),
    /// Evaluate a method and write a report JSON.
    Eval(EvalArgs),
    /// Measure forecasts per second at batch size 1.
    Bench(BenchArgs),
    /// Merge report files into one table and CSV.
    Compare(CompareArgs),
    /// Draw input, prediction and ground truth of one window as PNG files.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "corpus")]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub persons: Option<usize>,
    #[arg(long, value_enum)]
    pub motion: Option<MotionKind>,
    /// Ground speed for `--motion constant-velocity`, mm/s.
    #[arg(long, default_value_t = 1000.0)]
    pub speed: f64,
    /// Also write a noisy copy: `<out>/noisy`, `<out>/clean`, manifest.
    #[arg(long, value_enum)]
    pub paired: Option<PairedKind>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "imported")]
    pub out: PathBuf,
    #[arg(long, value_enum, conflicts_with = "select_joints")]
    pub map: Option<JointMap>,
    /// Source joint index for each of the 13 target joints, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub select_joints: Option<Vec<usize>>,
    /// Keep every k-th frame.
    #[arg(long)]
    pub downsample: Option<usize>,
    /// Ground truth matching `--input`; writes a paired corpus.
    #[arg(long)]
    pub clean: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Validation corpus; default is the validation split of `--data`.
    #[arg(long)]
    pub val_data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub no_spec_aug: bool,
    /// Corrupt training inputs with the configured Gaussian noise.
    #[arg(long)]
    pub gaussian_noise: bool,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Continue from this checkpoint; epoch numbering continues.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, default_value = "model.ckpt")]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "history.csv")]
    pub history: PathBuf,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Pretrained checkpoint (required).
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Paired corpus (only its noisy half is read) or an SMF directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value = "finetuned.ckpt")]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "finetune_history.csv")]
    pub history: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<u32>>,
    /// `--data` is a paired corpus: report measurable and real error.
    #[arg(long)]
    pub dual: bool,
    /// Also measure throughput and fill FPS, FCE and FADE.
    #[arg(long)]
    pub fps: bool,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Corpus supplying the timed window; default is a synthetic one.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Report to complete with FPS, FCE and FADE; rewritten in place.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "bench.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, default_value = "compare.csv")]
    pub csv: PathBuf,
    /// Also write the text table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub sequence: usize,
    #[arg(long, default_value_t = 0)]
    pub window: usize,
    /// Per-frame images in addition to the composite.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub azimuth: Option<f64>,
    #[arg(long, default_value = "render")]
    pub out: PathBuf,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

struct Ctx {
    root: PathBuf,
    run: RunConfig,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        resolve(&self.root, p)
    }
}

fn base_config(common: &Common) -> Result<RunConfig, CliError> {
    let root = out_root();
    let mut run = match &common.config {
        Some(p) => RunConfig::load(&resolve(&root, p))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        run.seed = seed;
    }
    run.deterministic |= common.deterministic;
    Ok(run)
}

fn is_paired(dir: &Path) -> bool {
    dir.join(MANIFEST_FILE).is_file()
}

fn load_corpus(dir: &Path) -> Result<Vec<MotionSequence>, CliError> {
    if is_paired(dir) {
        return Err(CliError::Config(format!(
            "{} is a paired corpus; pass its noisy/ or clean/ directory, or use --dual",
            dir.display()
        )));
    }
    if !dir.is_dir() {
        return Err(CliError::Data(format!("{}: not a directory", dir.display())));
    }
    let seqs = load_sequences(dir)?;
    if seqs.is_empty() {
        return Err(CliError::Data(format!("{}: no sequences", dir.display())));
    }
    Ok(seqs)
}

fn windows_of(run: &RunConfig, seqs: &[MotionSequence]) -> Result<Vec<ForecastWindow>, CliError> {
    let windows: Vec<ForecastWindow> =
        seqs.iter().flat_map(|s| make_windows(s, &run.window, run.person_mode)).collect();
    if windows.is_empty() {
        return Err(CliError::Data(format!(
            "no sequence is long enough for {} input and {} output frames",
            run.window.t_in, run.window.t_out
        )));
    }
    Ok(windows)
}

fn centered(windows: &[ForecastWindow]) -> Result<Vec<ForecastWindow>, CliError> {
    windows.iter().map(|w| center_window(w).map_err(CliError::from)).collect()
}

/// The forecaster named by `--method` / `--checkpoint`, or the checkpoint's
/// own kind when only a checkpoint is given.
fn load_forecaster(ctx: &Ctx, args: &ModelArgs, joints: usize) -> Result<Box<dyn Forecaster>, CliError> {
    let method = match (args.method, &args.checkpoint) {
        (Some(m), _) => m,
        (None, Some(_)) => {
            let ckpt = ctx.path(args.checkpoint.as_ref().unwrap());
            return Ok(match load_checkpoint(&ckpt)? {
                Checkpoint::MotionConformer(m) => Box::new(check_joints(m, joints, &ckpt)?),
                Checkpoint::Ridge(r) => Box::new(r),
            });
        }
        (None, None) => ctx.run.method,
    };
    let need_ckpt = || {
        args.checkpoint
            .as_ref()
            .map(|p| ctx.path(p))
            .ok_or_else(|| CliError::Config(format!("method {method:?} needs --checkpoint")))
    };
    Ok(match method {
        Method::RepeatLast => Box::new(RepeatLastFrame),
        Method::LastDelta => Box::new(LastDeltaAverage),
        Method::Ridge => match load_checkpoint(&need_ckpt()?)? {
            Checkpoint::Ridge(r) => Box::new(r),
            other => return Err(CliError::Config(format!("checkpoint holds a {} model, not ridge", other.kind()))),
        },
        Method::MotionConformer => Box::new(load_conformer(&need_ckpt()?, Some(joints))?),
    })
}

fn check_joints(m: MotionConformer<f32>, joints: usize, path: &Path) -> Result<MotionConformer<f32>, CliError> {
    if m.config().joints != joints {
        return Err(CliError::Data(format!(
            "{}: checkpoint was trained for {} joints, data has {joints}",
            path.display(),
            m.config().joints
        )));
    }
    Ok(m)
}

fn horizons(run: &RunConfig, fps: f64) -> Result<HorizonSet, CliError> {
    Ok(HorizonSet::new(run.horizons_ms.clone(), fps)?)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Parses nothing; runs an already parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let run = base_config(&cli.common)?;
    let mut ctx = Ctx { root: out_root(), run };
    match cli.command {
        Command::Synth(a) => cmd_synth(&mut ctx, a),
        Command::Import(a) => cmd_import(&mut ctx, a),
        Command::Train(a) => cmd_train(&mut ctx, a),
        Command::Finetune(a) => cmd_finetune(&mut ctx, a),
        Command::Eval(a) => cmd_eval(&mut ctx, a),
        Command::Bench(a) => cmd_bench(&mut ctx, a),
        Command::Compare(a) => cmd_compare(&ctx, a),
        Command::Render(a) => cmd_render(&mut ctx, a),
    }
}

fn finalize(ctx: &mut Ctx) -> Result<(), CliError> {
    ctx.run = ctx.run.clone().finalize()?;
    Ok(())
}

fn cmd_synth(ctx: &mut Ctx, a: SynthArgs) -> Result<(), CliError> {
    let s = &mut ctx.run.synth;
    s.count = a.count.unwrap_or(s.count);
    s.frames = a.frames.unwrap_or(s.frames);
    s.fps = a.fps.unwrap_or(s.fps);
    s.persons = a.persons.unwrap_or(s.persons);
    match a.motion {
        Some(MotionKind::Walk) | None => {}
        Some(MotionKind::Static) => s.motion = MotionParams::static_pose(),
        Some(MotionKind::ConstantVelocity) => s.motion = MotionParams::constant_velocity([a.speed, a.speed]),
    }
    finalize(ctx)?;
    let s = &ctx.run.synth;
    let clean = synth_corpus(ctx.run.seed, s.count, s.fps, s.frames, s.persons, &s.motion)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let out = ctx.path(&a.out);
    match a.paired {
        None => {
            save_sequences(&clean, &out)?;
            println!("wrote {} sequences to {}", clean.len(), out.display());
        }
        Some(kind) => {
            let source = match kind {
                PairedKind::Gaussian => NoiseSource::Gaussian(ctx.run.noise.clone()),
                PairedKind::Estimator => NoiseSource::Imported(
                    clean
                        .iter()
                        .enumerate()
                        .map(|(i, seq)| simulate_estimator(seq, &ctx.run.estimator, i as u64))
                        .collect::<Result<_, _>>()?,
                ),
            };
            let corpus = build_noisy_benchmark(clean, source)?;
            save_paired(&corpus, &out)?;
            println!(
                "wrote {} paired sequences to {} (time-zero error {:.1} mm)",
                corpus.noisy_sequences().len(),
                out.display(),
                time_zero_error(&corpus)?
            );
        }
    }
    Ok(())
}

fn convert(seq: &MotionSequence, a: &ImportArgs) -> Result<MotionSequence, CliError> {
    let mapping: Option<Vec<usize>> = match (&a.map, &a.select_joints) {
        (Some(JointMap::H36m32), _) => {
            if seq.joints() != 32 {
                return Err(CliError::Data(format!(
                    "`{}` has {} joints; the h36m32 map needs 32",
                    seq.name,
                    seq.joints()
                )));
            }
            Some(H36M32_TO_DEFAULT13.to_vec())
        }
        (None, Some(m)) => Some(m.clone()),
        (None, None) => None,
    };
    let mut out = match mapping {
        Some(m) => select_joints(seq, &JointLayout::default13(), &m)
            .map_err(|e| CliError::Data(format!("`{}`: {e}", seq.name)))?,
        None => seq.clone(),
    };
    if let Some(k) = a.downsample {
        out = downsample(&out, k).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(out)
}

fn cmd_import(ctx: &mut Ctx, a: ImportArgs) -> Result<(), CliError> {
    finalize(ctx)?;
    let input = ctx.path(&a.input);
    let raw: Vec<MotionSequence> = load_sequences(&input)?.iter().map(|s| convert(s, &a)).collect::<Result<_, _>>()?;
    let out = ctx.path(&a.out);
    match &a.clean {
        None => {
            let repaired: Vec<MotionSequence> = raw
                .iter()
                .map(|s| match s.validity() {
                    Some(_) => fill_invalid_frames(s, IMPORT_VALIDITY_THRESHOLD)
                        .map_err(|e| CliError::Data(format!("`{}`: {e}", s.name))),
                    None => Ok(s.clone()),
                })
                .collect::<Result<_, _>>()?;
            save_sequences(&repaired, &out)?;
            println!("imported {} sequences into {}", repaired.len(), out.display());
        }
        Some(clean_dir) => {
            let clean: Vec<MotionSequence> = load_sequences(&ctx.path(clean_dir))?
                .iter()
                .map(|s| convert(s, &a))
                .collect::<Result<_, _>>()?;
            let corpus = build_noisy_benchmark(clean, NoiseSource::Imported(raw))?;
            save_paired(&corpus, &out)?;
            println!(
                "imported {} paired sequences into {} (time-zero error {:.1} mm)",
                corpus.noisy_sequences().len(),
                out.display(),
                time_zero_error(&corpus)?
            );
        }
    }
    Ok(())
}

fn apply_train_flags(ctx: &mut Ctx, epochs: Option<usize>, lr: Option<f64>) {
    let t = &mut ctx.run.train;
    t.epochs = epochs.unwrap_or(t.epochs);
    t.learning_rate = lr.unwrap_or(t.learning_rate);
}

fn write_training_outputs(
    ctx: &Ctx,
    model: &MotionConformer<f32>,
    history: &TrainHistory,
    ckpt: &Path,
    history_path: &Path,
    append: bool,
) -> Result<(), CliError> {
    save_conformer(model, ckpt)?;
    write_history(history, history_path, append)?;
    let dir = ckpt.parent().unwrap_or(Path::new("."));
    ctx.run.save(&dir.join("run_config.json"))
}

/// Saves the restored model of a diverged run before reporting the failure.
fn handle_train_result(
    ctx: &Ctx,
    result: Result<TrainHistory, TrainError>,
    model: &MotionConformer<f32>,
    ckpt: &Path,
    history_path: &Path,
    append: bool,
) -> Result<TrainHistory, CliError> {
    match result {
        Ok(h) => {
            write_training_outputs(ctx, model, &h, ckpt, history_path, append)?;
            Ok(h)
        }
        Err(TrainError::Diverged { epoch, step, history }) => {
            write_training_outputs(ctx, model, &history, ckpt, history_path, append)?;
            Err(TrainError::Diverged { epoch, step, history }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn print_history(h: &TrainHistory) {
    for r in h.initial.iter().chain(&h.epochs) {
        let mpjpe = r.val_mpjpe_1000.map_or("-".to_string(), |v| format!("{v:.1}"));
        println!("epoch {:>3}  train {:>8.2}  val {:>8.2}  val MPJPE@1000 {mpjpe}", r.epoch, r.train_loss, r.val_loss);
    }
}

fn cmd_train(ctx: &mut Ctx, a: TrainArgs) -> Result<(), CliError> {
    if let Some(m) = a.method {
        ctx.run.method = m;
    }
    if let Some(p) = a.preset {
        ctx.run.preset = p;
    }
    apply_train_flags(ctx, a.epochs, a.lr);
    let t = &mut ctx.run.train;
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.max_steps = a.max_steps.or(t.max_steps);
    if a.no_spec_aug {
        t.spec_aug = SpecAugSpec::disabled();
    }
    if let Some(l) = a.lambda {
        ctx.run.ridge_lambda = l;
    }
    finalize(ctx)?;
    if a.gaussian_noise {
        ctx.run.train.input_noise = Some(ctx.run.noise.clone());
    }

    let data = load_corpus(&ctx.path(&a.data))?;
    let (train_seqs, val_seqs) = match &a.val_data {
        Some(v) => (data, load_corpus(&ctx.path(v))?),
        None => {
            let (train, val, test) = split_corpus(&data, ctx.run.seed, ctx.run.split);
            let val = if val.is_empty() { test } else { val };
            if train.is_empty() || val.is_empty() {
                return Err(CliError::Data(format!(
                    "{} sequences are too few for a train/validation split; pass --val-data",
                    data.len()
                )));
            }
            (train, val)
        }
    };
    let train_w = windows_of(&ctx.run, &train_seqs)?;
    let val_w = windows_of(&ctx.run, &val_seqs)?;
    let joints = train_w[0].total_joints();
    let ckpt = ctx.path(&a.checkpoint);
    let history_path = ctx.path(&a.history);

    match ctx.run.method {
        Method::Ridge => {
            let ridge = ridge_fit(&centered(&train_w)?, ctx.run.ridge_lambda)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            save_ridge(&ridge, &ckpt)?;
            ctx.run.save(&ckpt.parent().unwrap_or(Path::new(".")).join("run_config.json"))?;
            println!("ridge fit on {} windows; checkpoint {}", train_w.len(), ckpt.display());
            Ok(())
        }
        Method::MotionConformer => {
            let (mut model, append) = match &a.resume {
                Some(r) => (load_conformer(&ctx.path(r), Some(joints))?, true),
                None => {
                    let cfg = ctx.run.model_config(joints);
                    (MotionConformer::new(cfg, ctx.run.seed).map_err(|e| CliError::Config(e.to_string()))?, false)
                }
            };
            println!(
                "training MotionConformer ({} parameters) on {} windows, validating on {}",
                model.param_count(),
                train_w.len(),
                val_w.len()
            );
            let result = train(&mut model, &train_w, &val_w, &ctx.run.train);
            let h = handle_train_result(ctx, result, &model, &ckpt, &history_path, append)?;
            print_history(&h);
            println!("checkpoint {}", ckpt.display());
            Ok(())
        }
        other => Err(CliError::Config(format!("method {other:?} has nothing to train"))),
    }
}

fn cmd_finetune(ctx: &mut Ctx, a: FinetuneArgs) -> Result<(), CliError> {
    let base = a.base.as_ref().ok_or_else(|| CliError::Config("finetune needs a base checkpoint (--base)".into()))?;
    finalize(ctx)?;
    let mut cfg = finetune_config(&ctx.run.train);
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.learning_rate = a.lr.unwrap_or(cfg.learning_rate);
    ctx.run.train = cfg.clone();

    let data = ctx.path(&a.data);
    let corpus = if is_paired(&data) {
        load_paired(&data)?
    } else {
        let seqs = load_corpus(&data)?;
        PairedCorpus::new(seqs.clone(), seqs, Provenance::EstimatorImport)?
    };
    let first = corpus.noisy_sequences().first().ok_or_else(|| CliError::Data("empty corpus".into()))?;
    let joints = windows_of(&ctx.run, std::slice::from_ref(first))?[0].total_joints();
    let mut model = load_conformer(&ctx.path(base), Some(joints))?;
    let ckpt = ctx.path(&a.checkpoint);
    let history_path = ctx.path(&a.history);
    let result = match finetune_on_noisy(&mut model, &corpus, &ctx.run.window, ctx.run.person_mode, &cfg, 10) {
        Ok(h) => Ok(h),
        Err(NoiseError::Train(t)) => Err(t),
        Err(other) => return Err(other.into()),
    };
    let h = handle_train_result(ctx, result, &model, &ckpt, &history_path, false)?;
    print_history(&h);
    println!("checkpoint {}", ckpt.display());
    Ok(())
}

fn cmd_eval(ctx: &mut Ctx, a: EvalArgs) -> Result<(), CliError> {
    if let Some(h) = &a.horizons {
        ctx.run.horizons_ms = h.clone();
    }
    finalize(ctx)?;
    if a.fps && ctx.run.deterministic {
        return Err(CliError::Config("--fps measures wall-clock time and cannot run with --deterministic".into()));
    }
    let data = ctx.path(&a.data);
    let report_path = ctx.path(&a.report);
    if a.dual {
        if !is_paired(&data) {
            return Err(CliError::Config(format!("{}: --dual needs a paired corpus", data.display())));
        }
        let corpus = load_paired(&data)?;
        let first = &corpus.noisy_sequences()[0..1];
        let probe = windows_of(&ctx.run, first)?;
        let model = load_forecaster(ctx, &a.model, probe[0].total_joints())?;
        let hs = horizons(&ctx.run, first[0].fps())?;
        let mut dual = evaluate_dual(&*model, &corpus, &ctx.run.window, &hs, ctx.run.person_mode)?;
        if a.fps {
            let clock = WallClock::new();
            let fps = measure_fps(
                &*model,
                &probe[0],
                ctx.run.bench.warmup,
                ctx.run.bench.iters,
                &clock,
            )?;
            dual.measurable = dual.measurable.with_fps(fps)?;
            dual.real = dual.real.with_fps(fps)?;
        }
        write_dual_report(&dual, &report_path)?;
        let name = dual.measurable.model_name.clone();
        print!(
            "{}",
            format_table(&[(format!("{name} (measurable)"), &dual.measurable), (format!("{name} (real)"), &dual.real)])
        );
        return Ok(());
    }
    let seqs = load_corpus(&data)?;
    let windows = windows_of(&ctx.run, &seqs)?;
    let model = load_forecaster(ctx, &a.model, windows[0].total_joints())?;
    let hs = horizons(&ctx.run, seqs[0].fps())?;
    let clock = WallClock::new();
    let timing = if a.fps {
        Timing::Measure { clock: &clock, warmup: ctx.run.bench.warmup, iters: ctx.run.bench.iters }
    } else {
        Timing::Skip
    };
    let report = evaluate(&*model, &windows, &hs, timing)?;
    write_report(&report, &report_path)?;
    print!("{}", format_table(&[(report.model_name.clone(), &report)]));
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchResult {
    model_name: String,
    param_count: usize,
    fps: f64,
    fce_mm: f64,
}

fn cmd_bench(ctx: &mut Ctx, a: BenchArgs) -> Result<(), CliError> {
    if let Some(w) = a.warmup {
        ctx.run.bench.warmup = w;
    }
    if let Some(i) = a.iters {
        ctx.run.bench.iters = i;
    }
    finalize(ctx)?;
    if ctx.run.deterministic {
        return Err(CliError::Config("bench measures wall-clock time and cannot run with --deterministic".into()));
    }
    let seqs = match &a.data {
        Some(d) => load_corpus(&ctx.path(d))?,
        None => {
            let frames = ctx.run.window.t_in + ctx.run.window.t_out;
            synth_corpus(ctx.run.seed, 1, ctx.run.synth.fps, frames, 1, &ctx.run.synth.motion)?
        }
    };
    let windows = windows_of(&ctx.run, &seqs[..1])?;
    let model = load_forecaster(ctx, &a.model, windows[0].total_joints())?;
    let clock = WallClock::new();
    let fps =
        measure_fps(&*model, &windows[0], ctx.run.bench.warmup, ctx.run.bench.iters, &clock)?;
    let result = BenchResult { model_name: model.name(), param_count: model.param_count(), fps, fce_mm: fce(fps)? };
    let out = ctx.path(&a.out);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    fs::write(&out, serde_json::to_string_pretty(&result).expect("serializes") + "\n").map_err(CliError::io(&out))?;
    println!("{}: {:.1} forecasts/s, FCE {:.1} mm", result.model_name, fps, result.fce_mm);
    if let Some(r) = &a.report {
        let path = ctx.path(r);
        let report = read_report(&path)?.with_fps(fps)?;
        write_report(&report, &path)?;
        print!("{}", format_table(&[(report.model_name.clone(), &report)]));
    }
    Ok(())
}

/// Plain reports load as one row; dual reports give a measurable and a real
/// row.
fn read_any_report(path: &Path) -> Result<Vec<MetricReport>, CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    if let Ok(dual) = serde_json::from_slice::<DualReport>(&bytes) {
        let label = |mut r: MetricReport, tag: &str| {
            r.model_name = format!("{} ({tag})", r.model_name);
            r
        };
        return Ok(vec![label(dual.measurable, "measurable"), label(dual.real, "real")]);
    }
    Ok(vec![read_report(path)?])
}

fn cmd_compare(ctx: &Ctx, a: CompareArgs) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for p in &a.reports {
        reports.extend(read_any_report(&ctx.path(p))?);
    }
    let rows = compare(&reports)?;
    let table = format_table(&rows);
    print!("{table}");
    let csv_path = ctx.path(&a.csv);
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    fs::write(&csv_path, comparison_csv(&rows)?).map_err(CliError::io(&csv_path))?;
    if let Some(t) = &a.table {
        let path = ctx.path(t);
        fs::write(&path, &table).map_err(CliError::io(&path))?;
    }
    Ok(())
}

fn cmd_render(ctx: &mut Ctx, a: RenderArgs) -> Result<(), CliError> {
    if let Some(f) = a.frames {
        ctx.run.render.frames = f;
    }
    if let Some(az) = a.azimuth {
        ctx.run.render.azimuth_deg = az;
    }
    finalize(ctx)?;
    let seqs = load_corpus(&ctx.path(&a.data))?;
    let seq = seqs
        .get(a.sequence)
        .ok_or_else(|| CliError::Config(format!("sequence {} out of range ({} loaded)", a.sequence, seqs.len())))?;
    let windows = windows_of(&ctx.run, std::slice::from_ref(seq))?;
    let w = windows
        .get(a.window)
        .ok_or_else(|| CliError::Config(format!("window {} out of range ({} available)", a.window, windows.len())))?;
    let model: Box<dyn Forecaster> = match (a.model.method, &a.model.checkpoint) {
        (None, None) => Box::new(RepeatLastFrame),
        _ => load_forecaster(ctx, &a.model, w.total_joints())?,
    };
    let pred = predict_global(&*model, w)?;
    let rendered = render(seq.layout(), &w.input, &pred, &w.target, &ctx.run.render)?;
    let out = ctx.path(&a.out);
    let paths = write_render(&rendered, &out)?;
    println!("wrote {} images to {}", paths.len(), out.display());
    Ok(())
}
