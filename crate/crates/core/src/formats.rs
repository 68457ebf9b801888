//! Line-based annotation files.
//!
//! Ground truth and predictions share one format, one word per line:
//!
//! ```text
//! x1,y1,x2,y2,x3,y3,x4,y4,text
//! ```
//!
//! Everything after the eighth comma is the word, commas included. A word
//! of `###` marks a region that is excluded from scoring. Input may use LF
//! or CRLF; output always uses LF. A corpus is a directory with one
//! `<image_id>.txt` file per image.
//!
//! Two-stage pipelines (a detector followed by a recognizer) are joined with
//! [`join_two_stage`]. Recognizer output is a tab-separated file with one
//! line per recognized box: `image_id<TAB>box_index<TAB>score<TAB>text`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fusion::{output_order, FusedPrediction, FusionError, Prediction, PredictionSet};
use crate::geometry::{canonicalize, GeometryError, Point, QuadBox};
use crate::text::nfc;

pub const IGNORE_TEXT: &str = "###";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Geometry { line: usize, source: GeometryError },
    #[error("recognition refers to box {index} but only {len} boxes were detected")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("box {index} recognized more than once")]
    DuplicateIndex { index: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    InFile { path: PathBuf, source: Box<FormatError> },
    #[error("not a directory: {0}")]
    MissingDirectory(PathBuf),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

impl FormatError {
    pub fn in_file(self, path: &Path) -> Self {
        FormatError::InFile {
            path: path.to_owned(),
            source: Box::new(self),
        }
    }
}

/// One line of an annotation file.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub quad: QuadBox,
    pub text: String,
    pub ignore: bool,
}

impl AnnotationRecord {
    pub fn new(quad: QuadBox, text: &str) -> Self {
        let text = nfc(text);
        Self {
            quad,
            ignore: text == IGNORE_TEXT,
            text,
        }
    }

    pub fn coords(&self) -> [f64; 8] {
        self.quad.to_coords()
    }
}

fn decode(bytes: &[u8]) -> Result<&str, FormatError> {
    let s = std::str::from_utf8(bytes).map_err(|e| FormatError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(s.strip_prefix('\u{feff}').unwrap_or(s))
}

/// Non-blank lines with their 1-based numbers, CR stripped.
fn lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Parses a whole annotation file. Words are NFC-normalized and boxes
/// canonicalized.
pub fn parse_annotation_file(bytes: &[u8]) -> Result<Vec<AnnotationRecord>, FormatError> {
    lines(decode(bytes)?).map(|(n, l)| parse_line(n, l)).collect()
}

fn parse_line(line: usize, raw: &str) -> Result<AnnotationRecord, FormatError> {
    let mut fields = raw.splitn(9, ',');
    let mut coords = [0.0; 8];
    for (i, c) in coords.iter_mut().enumerate() {
        let field = fields.next().ok_or_else(|| FormatError::MalformedLine {
            line,
            reason: format!("expected 8 coordinates, found {i}"),
        })?;
        *c = field.trim().parse().map_err(|_| FormatError::MalformedLine {
            line,
            reason: format!("coordinate {} is not a number: {field:?}", i + 1),
        })?;
    }
    let text = fields.next().unwrap_or("");
    let quad = QuadBox::from_coords(coords).map_err(|source| FormatError::Geometry { line, source })?;
    Ok(AnnotationRecord::new(quad, text))
}

fn coord(x: f64) -> String {
    let s = format!("{x:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

/// Rounds to the printed precision and re-canonicalizes, so that reading
/// the line back yields exactly the printed corner order.
fn printable(quad: &QuadBox) -> [Point; 4] {
    let rounded = quad
        .corners()
        .map(|p| Point::new(coord(p.x).parse().unwrap_or(p.x), coord(p.y).parse().unwrap_or(p.y)));
    canonicalize(rounded).map(|q| *q.corners()).unwrap_or(rounded)
}

/// One output line, newline included.
pub fn format_line(quad: &QuadBox, text: &str) -> String {
    let mut out = String::new();
    for p in printable(quad) {
        out.push_str(&coord(p.x));
        out.push(',');
        out.push_str(&coord(p.y));
        out.push(',');
    }
    out.extend(text.chars().map(|c| if c == '\n' || c == '\r' { ' ' } else { c }));
    out.push('\n');
    out
}

/// Writes records in the order given.
pub fn write_records(records: &[AnnotationRecord]) -> String {
    records.iter().map(|r| format_line(&r.quad, &r.text)).collect()
}

/// Writes fused predictions sorted by bottom-left corner (`y`, then `x`),
/// then area.
pub fn write_predictions(preds: &[FusedPrediction]) -> String {
    let mut sorted: Vec<&FusedPrediction> = preds.iter().collect();
    sorted.sort_by(|a, b| output_order(a, b));
    sorted.iter().map(|p| format_line(&p.quad, &p.text)).collect()
}

/// Reads a file from disk and attaches the path to any error.
pub fn read_annotation_file(path: &Path) -> Result<Vec<AnnotationRecord>, FormatError> {
    let bytes = fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_annotation_file(&bytes).map_err(|e| e.in_file(path))
}

/// Unscored predictions from parsed records.
pub fn records_to_set(records: &[AnnotationRecord], image_id: &str, model_id: &str) -> PredictionSet {
    PredictionSet {
        image_id: image_id.to_owned(),
        model_id: model_id.to_owned(),
        predictions: records
            .iter()
            .map(|r| Prediction {
                quad: r.quad,
                text: r.text.clone(),
                score: None,
                model_id: model_id.to_owned(),
            })
            .collect(),
    }
}

/// One recognizer result for a detected box.
#[derive(Debug, Clone, PartialEq)]
pub struct Recognition {
    pub index: usize,
    pub text: String,
    pub score: f64,
}

/// A joined detector + recognizer result.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageJoin {
    pub set: PredictionSet,
    /// Boxes the recognizer said nothing about; they carry empty text.
    pub unrecognized: Vec<usize>,
}

/// Pairs each detected box with its recognized word.
pub fn join_two_stage(
    image_id: &str,
    model_id: &str,
    det: &[QuadBox],
    rec: &[Recognition],
) -> Result<TwoStageJoin, FormatError> {
    let mut words: Vec<Option<&Recognition>> = vec![None; det.len()];
    for r in rec {
        let slot = words.get_mut(r.index).ok_or(FormatError::IndexOutOfRange {
            index: r.index,
            len: det.len(),
        })?;
        if slot.replace(r).is_some() {
            return Err(FormatError::DuplicateIndex { index: r.index });
        }
    }
    let mut predictions = Vec::with_capacity(det.len());
    let mut unrecognized = Vec::new();
    for (i, (quad, word)) in det.iter().zip(words).enumerate() {
        let p = match word {
            Some(r) => Prediction::new(*quad, &r.text, Some(r.score), model_id)?,
            None => {
                unrecognized.push(i);
                Prediction::new(*quad, "", None, model_id)?
            }
        };
        predictions.push(p);
    }
    Ok(TwoStageJoin {
        set: PredictionSet::new(image_id, model_id, predictions)?,
        unrecognized,
    })
}

/// Parses a recognizer output file into per-image results.
pub fn parse_recognition_file(bytes: &[u8]) -> Result<BTreeMap<String, Vec<Recognition>>, FormatError> {
    let mut out: BTreeMap<String, Vec<Recognition>> = BTreeMap::new();
    for (line, raw) in lines(decode(bytes)?) {
        let malformed = |reason: String| FormatError::MalformedLine { line, reason };
        let mut f = raw.splitn(4, '\t');
        let (Some(image), Some(index), Some(score)) = (f.next(), f.next(), f.next()) else {
            return Err(malformed("expected image_id, box index, score and text".into()));
        };
        let index = index
            .trim()
            .parse()
            .map_err(|_| malformed(format!("box index is not an integer: {index:?}")))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| malformed(format!("score is not a number: {score:?}")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(malformed(format!("score {score} outside [0, 1]")));
        }
        out.entry(image.trim().to_owned()).or_default().push(Recognition {
            index,
            text: nfc(f.next().unwrap_or("")),
            score,
        });
    }
    Ok(out)
}

/// Annotation files of one corpus directory, keyed by image id.
pub fn list_corpus(dir: &Path) -> Result<BTreeMap<String, PathBuf>, FormatError> {
    if !dir.is_dir() {
        return Err(FormatError::MissingDirectory(dir.to_owned()));
    }
    let io = |source| FormatError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_owned(), path);
            }
        }
    }
    Ok(out)
}

/// Per image: the ground-truth file and one optional file per model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ManifestEntry {
    pub ground_truth: Option<PathBuf>,
    pub models: Vec<Option<PathBuf>>,
}

/// Which files belong to which image, across a ground-truth directory and
/// any number of model directories.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub model_ids: Vec<String>,
    pub images: BTreeMap<String, ManifestEntry>,
}

impl CorpusManifest {
    /// Model ids are directory names, suffixed `-2`, `-3`, ... on collision.
    /// Images come from the union of all directories.
    pub fn from_dirs(ground_truth: Option<&Path>, models: &[PathBuf]) -> Result<Self, FormatError> {
        let mut manifest = CorpusManifest::default();
        let mut listings = Vec::with_capacity(models.len());
        for dir in models {
            listings.push(list_corpus(dir)?);
            let base = dir
                .file_name()
                .and_then(|s| s.to_str())
                .filter(|s| !s.is_empty())
                .unwrap_or("model")
                .to_owned();
            let mut id = base.clone();
            let mut k = 2;
            while manifest.model_ids.contains(&id) {
                id = format!("{base}-{k}");
                k += 1;
            }
            manifest.model_ids.push(id);
        }
        let n = models.len();
        if let Some(gt) = ground_truth {
            for (image, path) in list_corpus(gt)? {
                manifest.images.insert(
                    image,
                    ManifestEntry {
                        ground_truth: Some(path),
                        models: vec![None; n],
                    },
                );
            }
        }
        for (m, listing) in listings.into_iter().enumerate() {
            for (image, path) in listing {
                let entry = manifest.images.entry(image).or_insert_with(|| ManifestEntry {
                    ground_truth: None,
                    models: vec![None; n],
                });
                entry.models[m] = Some(path);
            }
        }
        Ok(manifest)
    }
}
