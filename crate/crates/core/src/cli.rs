//! The `textfuse` command line.
//!
//! Corpora on disk are directories holding one `<image_id>.txt` annotation
//! file per image, one directory per model. Exit codes: 0 on success, 1 when
//! an internal invariant breaks, 2 on bad input. Nothing is written outside
//! `--out`. `TEXTFUSE_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::formats::{
    self, format_line, join_two_stage, list_corpus, parse_recognition_file, read_annotation_file, records_to_set,
    write_predictions, write_records, CorpusManifest, FormatError,
};
use crate::fusion::{fuse_image, FusedPrediction, FusionConfig, LabelPolicy, PredictionSet};
use crate::geometry::{self, QuadBox};
use crate::metrics::{evaluate_image, CharAccMode, EvalReport};
use crate::oracle;
use crate::synth::{self, Corpus, DropPool, GroundTruthSpec, NoiseProfile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const THREADS_ENV: &str = "TEXTFUSE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "textfuse", version, about = "Fuse and evaluate scene-text spotting predictions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse the predictions of several models, image by image.
    Fuse(FuseArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Join detector boxes with recognizer output into prediction files.
    Convert(ConvertArgs),
    /// Write a synthetic ground truth and noisy model predictions.
    Synth(SynthArgs),
    /// Compare exact IoU against a raster estimate.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    HighestScore,
    ModelPriority,
    LargestArea,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Human,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CharAccArg {
    Mean,
    Micro,
}

#[derive(Debug, Args)]
pub struct FusionArgs {
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    #[arg(long, value_enum, default_value_t = PolicyArg::HighestScore)]
    pub label_policy: PolicyArg,
    /// Model ids in priority order, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub priority: Vec<String>,
    #[arg(long, default_value_t = 16)]
    pub max_passes: usize,
}

impl FusionArgs {
    pub fn config(&self) -> FusionConfig {
        FusionConfig {
            iou_threshold: self.iou_threshold,
            label_policy: match self.label_policy {
                PolicyArg::HighestScore => LabelPolicy::HighestScore,
                PolicyArg::ModelPriority => LabelPolicy::ModelPriority,
                PolicyArg::LargestArea => LabelPolicy::LargestSourceArea,
            },
            model_priority: self.priority.clone(),
            max_passes: self.max_passes,
        }
    }
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// One directory per model; the directory name is the model id.
    #[arg(long, num_args = 1.., required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fusion: FusionArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction directory.
    #[arg(long, alias = "models")]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub match_iou: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Human)]
    pub report: ReportFormat,
    #[arg(long, value_enum, default_value_t = CharAccArg::Mean)]
    pub char_acc: CharAccArg,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Detector output: annotation files whose text column is ignored.
    #[arg(long)]
    pub det: PathBuf,
    /// Recognizer output: `image_id<TAB>box_index<TAB>score<TAB>text` lines.
    #[arg(long)]
    pub rec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Ground truth to corrupt; generated into `<out>/gt` when absent.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub images: usize,
    #[arg(long, default_value_t = 12)]
    pub words: usize,
    /// Number of synthetic models.
    #[arg(long = "model-count", default_value_t = 2)]
    pub model_count: u32,
    #[arg(long, default_value_t = 0.3)]
    pub drop_rate: f64,
    #[arg(long, default_value_t = 2.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.1)]
    pub char_error_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub spurious_rate: f64,
    /// Let the models drop boxes independently instead of from disjoint partitions.
    #[arg(long)]
    pub independent: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 1024)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
    /// Check every overlapping pair of boxes in this annotation file instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// An error that ends a command.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = worker_pool().and_then(|pool| {
        pool.install(|| match &cli.command {
            Command::Fuse(a) => cmd_fuse(a, err),
            Command::Eval(a) => cmd_eval(a, out, err),
            Command::Convert(a) => cmd_convert(a, err),
            Command::Synth(a) => cmd_synth(a, err),
            Command::OracleCheck(a) => cmd_oracle_check(a, out),
        })
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let msg = match &e {
                CliError::Input(m) | CliError::Internal(m) => m,
            };
            let _ = writeln!(err, "error: {msg}");
            e.code()
        }
    }
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Input(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Internal(e.to_string()))
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_corpus_dir(dir: &Path, files: &BTreeMap<String, String>) -> Result<(), CliError> {
    create_dir(dir)?;
    files
        .par_iter()
        .map(|(id, text)| write_atomic(&dir.join(format!("{id}.txt")), text))
        .collect::<Result<Vec<()>, _>>()?;
    Ok(())
}

enum ImageFused {
    Written(Vec<String>),
    Failed(Vec<String>),
}

pub fn cmd_fuse(args: &FuseArgs, err: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    let cfg = args.fusion.config();
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let manifest = CorpusManifest::from_dirs(None, &args.models)?;
    create_dir(&args.out)?;

    let results: Vec<(&String, ImageFused)> = manifest
        .images
        .par_iter()
        .map(|(image_id, entry)| {
            let mut sets = Vec::with_capacity(entry.models.len());
            let mut failures = Vec::new();
            for (model_id, path) in manifest.model_ids.iter().zip(&entry.models) {
                let records = match path {
                    Some(p) => match read_annotation_file(p) {
                        Ok(r) => r,
                        Err(e) => {
                            failures.push(e.to_string());
                            continue;
                        }
                    },
                    None => Vec::new(),
                };
                sets.push(records_to_set(&records, image_id, model_id));
            }
            if !failures.is_empty() {
                return (image_id, ImageFused::Failed(failures));
            }
            let outcome = match fuse_image(&sets, &cfg) {
                Ok(o) => o,
                Err(e) => return (image_id, ImageFused::Failed(vec![format!("{image_id}: {e}")])),
            };
            let path = args.out.join(format!("{image_id}.txt"));
            match write_atomic(&path, &write_predictions(&outcome.predictions)) {
                Ok(()) => (image_id, ImageFused::Written(outcome.diagnostics())),
                Err(CliError::Input(m) | CliError::Internal(m)) => (image_id, ImageFused::Failed(vec![m])),
            }
        })
        .collect();

    let mut failed = false;
    for (_, r) in &results {
        match r {
            ImageFused::Written(diags) => {
                for d in diags {
                    let _ = writeln!(err, "warning: {d}");
                }
            }
            ImageFused::Failed(errors) => {
                failed = true;
                for e in errors {
                    let _ = writeln!(err, "error: {e}");
                }
            }
        }
    }
    Ok(if failed { EXIT_INPUT } else { EXIT_OK })
}

pub fn cmd_eval(args: &EvalArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    if !(args.match_iou > 0.0 && args.match_iou <= 1.0) {
        return Err(CliError::Input(format!("--match-iou {} not in (0, 1]", args.match_iou)));
    }
    let gts = list_corpus(&args.gt)?;
    let preds = list_corpus(&args.pred)?;
    for extra in preds.keys().filter(|k| !gts.contains_key(*k)) {
        let _ = writeln!(err, "warning: {extra}: prediction without ground truth, ignored");
    }
    let tallies: Vec<(&str, _)> = gts
        .par_iter()
        .map(|(id, gt_path)| {
            let gt = read_annotation_file(gt_path)?;
            let pred = match preds.get(id) {
                Some(p) => read_annotation_file(p)?,
                None => Vec::new(),
            };
            Ok((id.as_str(), evaluate_image(&pred, &gt, args.match_iou)))
        })
        .collect::<Result<_, FormatError>>()?;
    let mode = match args.char_acc {
        CharAccArg::Mean => CharAccMode::MeanOverWords,
        CharAccArg::Micro => CharAccMode::MicroOverChars,
    };
    let report = EvalReport::from_tallies(tallies, mode);
    let text = match args.report {
        ReportFormat::Human => report.to_table(),
        ReportFormat::Structured => report.to_json(),
    };
    out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(EXIT_OK)
}

pub fn cmd_convert(args: &ConvertArgs, err: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    let dets = list_corpus(&args.det)?;
    let rec_bytes = fs::read(&args.rec).map_err(|e| io_err(&args.rec, e))?;
    let recs = parse_recognition_file(&rec_bytes).map_err(|e| e.in_file(&args.rec))?;
    for extra in recs.keys().filter(|k| !dets.contains_key(*k)) {
        let _ = writeln!(err, "warning: {extra}: recognition for an image without detections, ignored");
    }
    let model_id = args.out.file_name().and_then(|s| s.to_str()).unwrap_or("two-stage").to_owned();

    type Joined = (String, String, Vec<usize>);
    let results: Vec<Result<Joined, FormatError>> = dets
        .par_iter()
        .map(|(id, path)| {
            let boxes: Vec<QuadBox> = read_annotation_file(path)?.into_iter().map(|r| r.quad).collect();
            let joined = join_two_stage(id, &model_id, &boxes, recs.get(id).map_or(&[][..], Vec::as_slice))
                .map_err(|e| e.in_file(path))?;
            let text: String = joined.set.predictions.iter().map(|p| format_line(&p.quad, &p.text)).collect();
            Ok((id.clone(), text, joined.unrecognized))
        })
        .collect();

    let mut files = BTreeMap::new();
    let mut failed = false;
    for r in results {
        match r {
            Ok((id, text, missing)) => {
                for i in missing {
                    let _ = writeln!(err, "warning: {id}: box {i} has no recognition, written with empty text");
                }
                files.insert(id, text);
            }
            Err(e) => {
                failed = true;
                let _ = writeln!(err, "error: {e}");
            }
        }
    }
    write_corpus_dir(&args.out, &files)?;
    Ok(if failed { EXIT_INPUT } else { EXIT_OK })
}

fn read_corpus(dir: &Path) -> Result<Corpus, CliError> {
    let files = list_corpus(dir)?;
    let mut corpus = Corpus::new();
    for (id, path) in files {
        corpus.insert(id, read_annotation_file(&path)?);
    }
    Ok(corpus)
}

pub fn cmd_synth(args: &SynthArgs, err: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    if args.model_count == 0 {
        return Err(CliError::Input("--model-count must be at least 1".into()));
    }
    let gt = match &args.gt {
        Some(dir) => read_corpus(dir)?,
        None => {
            let gt = synth::generate_ground_truth(&GroundTruthSpec {
                images: args.images,
                words_per_image: args.words,
                ignored_per_image: 1,
                seed: args.seed,
            });
            let files = gt.iter().map(|(id, recs)| (id.clone(), write_records(recs))).collect();
            write_corpus_dir(&args.out.join("gt"), &files)?;
            gt
        }
    };
    let base = NoiseProfile {
        drop_rate: args.drop_rate,
        jitter_px: args.jitter,
        char_error_rate: args.char_error_rate,
        spurious_rate: args.spurious_rate,
        seed: args.seed,
        drop_pool: DropPool::All,
    };
    let profiles: Vec<NoiseProfile> = if args.independent || args.model_count == 1 {
        (0..args.model_count)
            .map(|i| NoiseProfile {
                seed: args.seed.wrapping_add(i as u64),
                ..base
            })
            .collect()
    } else {
        base.complementary(args.model_count)
    };
    for (i, profile) in profiles.iter().enumerate() {
        let model_id = format!("model_{}", i + 1);
        let sets = synth::synthesize_model(&gt, profile, &model_id).map_err(|e| CliError::Input(e.to_string()))?;
        let files = sets
            .iter()
            .map(|(id, set)| (id.clone(), set_to_text(set)))
            .collect();
        write_corpus_dir(&args.out.join(&model_id), &files)?;
    }
    let _ = writeln!(
        err,
        "wrote {} images for {} models under {}",
        gt.len(),
        profiles.len(),
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn set_to_text(set: &PredictionSet) -> String {
    let fused: Vec<FusedPrediction> = set
        .predictions
        .iter()
        .enumerate()
        .map(|(i, p)| FusedPrediction::passthrough(p, i))
        .collect();
    write_predictions(&fused)
}

pub fn cmd_oracle_check(args: &OracleArgs, out: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    let pairs: Vec<(QuadBox, QuadBox)> = match &args.input {
        Some(path) => {
            let recs = formats::read_annotation_file(path)?;
            let mut v = Vec::new();
            for i in 0..recs.len() {
                for j in i + 1..recs.len() {
                    if recs[i].quad.iou(&recs[j].quad) > 0.0 {
                        v.push((recs[i].quad, recs[j].quad));
                    }
                }
            }
            v
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            (0..args.pairs).map(|_| oracle::random_quad_pair(&mut rng, 1000.0)).collect()
        }
    };
    let checks: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(a, b)| {
            let (pa, pb) = (a.to_polygon(), b.to_polygon());
            let exact = geometry::iou(&pa, &pb).map_err(|e| CliError::Internal(e.to_string()))?;
            let raster = oracle::raster_iou_at(&pa, &pb, args.resolution).map_err(|e| CliError::Input(e.to_string()))?;
            let pieces: f64 = geometry::difference(&pa, &pb).iter().map(|p| p.area()).sum();
            let residual = (geometry::intersect(&pa, &pb).area() + pieces - pa.area()).abs() / pa.area();
            Ok(((exact - raster).abs(), residual))
        })
        .collect::<Result<_, CliError>>()?;
    let worst_iou = checks.iter().map(|c| c.0).fold(0.0, f64::max);
    let worst_area = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    let bad = checks.iter().filter(|c| c.0 > args.tolerance || c.1 > 1e-6).count();
    let _ = writeln!(
        out,
        "pairs: {}\nresolution: {}\nmax |iou - raster_iou|: {worst_iou:.6}\nmax area residual: {worst_area:.3e}\nfailures: {bad}",
        checks.len(),
        args.resolution
    );
    Ok(if bad == 0 { EXIT_OK } else { EXIT_INTERNAL })
}
