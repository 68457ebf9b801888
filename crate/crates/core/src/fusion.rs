//! Ensemble fusion of per-model text-box predictions for one image.
//!
//! The first model's boxes seed an accumulator. Every box of each later model
//! is resolved against the accumulator in descending-IoU order:
//!
//! * IoU at or above the threshold: both boxes collapse into their
//!   intersection, which carries one of the two words.
//! * IoU strictly between zero and the threshold: each box is cut back to
//!   the largest piece of itself lying outside the overlap, keeping its own
//!   word.
//! * no overlap: both boxes are kept as they are.
//!
//! Cut and merged regions are rarely quadrilaterals, so anything that is not
//! four-cornered is re-fitted with [`min_area_rect`]. After insertion, merge
//! passes repeat until no two boxes reach the threshold or `max_passes` runs
//! out.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::geometry::{self, canonicalize, min_area_rect, ConvexPolygon, GeometryError, QuadBox};
use crate::text::nfc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("invalid fusion config: {0}")]
    InvalidConfig(String),
    #[error("no prediction sets to fuse")]
    EmptyInput,
    #[error("prediction set for image {found:?} mixed into image {expected:?}")]
    ImageMismatch { expected: String, found: String },
    #[error("prediction from model {found:?} inside set of model {set:?}")]
    ModelMismatch { set: String, found: String },
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("highest-score labelling needs a score on every candidate")]
    MissingScore,
    #[error("no label candidates")]
    NoCandidates,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One recognized word and where it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub quad: QuadBox,
    pub text: String,
    pub score: Option<f64>,
    pub model_id: String,
}

impl Prediction {
    /// NFC-normalizes `text` and checks the score range.
    pub fn new(
        quad: QuadBox,
        text: &str,
        score: Option<f64>,
        model_id: impl Into<String>,
    ) -> Result<Self, FusionError> {
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(FusionError::InvalidScore(s));
            }
        }
        Ok(Self {
            quad,
            text: nfc(text),
            score,
            model_id: model_id.into(),
        })
    }
}

/// Everything one model predicted for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub image_id: String,
    pub model_id: String,
    pub predictions: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(
        image_id: impl Into<String>,
        model_id: impl Into<String>,
        predictions: Vec<Prediction>,
    ) -> Result<Self, FusionError> {
        let set = Self {
            image_id: image_id.into(),
            model_id: model_id.into(),
            predictions,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), FusionError> {
        match self.predictions.iter().find(|p| p.model_id != self.model_id) {
            Some(p) => Err(FusionError::ModelMismatch {
                set: self.model_id.clone(),
                found: p.model_id.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Which word a merged box keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelPolicy {
    /// Highest score; ties go to model priority, then the larger source box.
    /// Inside fusion this falls back to `ModelPriority` when a score is missing.
    #[default]
    HighestScore,
    /// First candidate in `model_priority` order.
    ModelPriority,
    /// Largest original box; ties go to model priority.
    LargestSourceArea,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub iou_threshold: f64,
    pub label_policy: LabelPolicy,
    pub model_priority: Vec<String>,
    pub max_passes: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            label_policy: LabelPolicy::HighestScore,
            model_priority: Vec::new(),
            max_passes: 16,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(FusionError::InvalidConfig(format!(
                "iou_threshold {} not in (0, 1]",
                self.iou_threshold
            )));
        }
        if self.label_policy == LabelPolicy::ModelPriority && self.model_priority.is_empty() {
            return Err(FusionError::InvalidConfig(
                "model-priority labelling needs a priority list".into(),
            ));
        }
        if self.max_passes == 0 {
            return Err(FusionError::InvalidConfig("max_passes must be at least 1".into()));
        }
        Ok(())
    }

    fn rank(&self, model_id: &str) -> usize {
        self.model_priority
            .iter()
            .position(|m| m == model_id)
            .unwrap_or(self.model_priority.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Relation {
    Merged,
    Split,
    Passthrough,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Merged => "merged",
            Relation::Split => "split",
            Relation::Passthrough => "passthrough",
        })
    }
}

/// An input prediction that contributed to a fused box.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Provenance {
    pub model_id: String,
    pub index: usize,
    pub relation: Relation,
}

/// A box in the fused output, or in the accumulator while fusion runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedPrediction {
    pub quad: QuadBox,
    pub text: String,
    pub score: Option<f64>,
    /// Area of the original box whose word this prediction carries.
    pub source_area: f64,
    pub provenance: Vec<Provenance>,
    /// Index into `provenance` of the entry the word came from.
    pub text_source: usize,
}

impl FusedPrediction {
    pub fn passthrough(p: &Prediction, index: usize) -> Self {
        Self {
            quad: p.quad,
            text: p.text.clone(),
            score: p.score,
            source_area: p.quad.area(),
            provenance: vec![Provenance {
                model_id: p.model_id.clone(),
                index,
                relation: Relation::Passthrough,
            }],
            text_source: 0,
        }
    }

    pub fn text_model(&self) -> &str {
        &self.provenance[self.text_source].model_id
    }

    /// Plain prediction attributed to `model_id`, for feeding output back in.
    pub fn to_prediction(&self, model_id: &str) -> Prediction {
        Prediction {
            quad: self.quad,
            text: self.text.clone(),
            score: self.score,
            model_id: model_id.to_owned(),
        }
    }

    fn with_relation(mut self, relation: Relation) -> Self {
        for p in &mut self.provenance {
            p.relation = relation;
        }
        self
    }

    fn sort_key(&self) -> (f64, f64, f64) {
        let a = self.quad.anchor();
        (a.y, a.x, self.quad.area())
    }
}

/// Output order: by bottom-left corner (`y`, then `x`), then area.
pub fn output_order(a: &FusedPrediction, b: &FusedPrediction) -> Ordering {
    let (ka, kb) = (a.sort_key(), b.sort_key());
    ka.0.total_cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .then_with(|| a.text.cmp(&b.text))
        .then_with(|| a.provenance.cmp(&b.provenance))
}

/// A split whose remainder had no area and was removed.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedBox {
    pub text: String,
    pub provenance: Vec<Provenance>,
    pub reason: GeometryError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairAction {
    Merged,
    Split,
    Disjoint,
}

/// What [`fuse_pair`] did with two boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct PairResolution {
    pub action: PairAction,
    pub iou: f64,
    /// One box after a merge; `[h', k']` after a split (minus any dropped);
    /// `[h, k]` untouched when disjoint.
    pub outputs: Vec<FusedPrediction>,
    pub dropped: Vec<DroppedBox>,
    /// For splits: which of `h`, `k` survived.
    pub kept: (bool, bool),
}

/// Resolves one pair of overlapping boxes.
pub fn fuse_pair(
    h: &FusedPrediction,
    k: &FusedPrediction,
    cfg: &FusionConfig,
) -> Result<PairResolution, FusionError> {
    let (ph, pk) = (h.quad.to_polygon(), k.quad.to_polygon());
    let inter = geometry::intersect(&ph, &pk);
    let iou = if inter.is_empty() {
        0.0
    } else {
        geometry::iou(&ph, &pk)?
    };
    if iou == 0.0 {
        return Ok(PairResolution {
            action: PairAction::Disjoint,
            iou,
            outputs: vec![h.clone(), k.clone()],
            dropped: Vec::new(),
            kept: (true, true),
        });
    }
    if iou >= cfg.iou_threshold {
        return Ok(PairResolution {
            action: PairAction::Merged,
            iou,
            outputs: vec![merge(h, k, &inter, cfg)?],
            dropped: Vec::new(),
            kept: (false, false),
        });
    }
    let mut outputs = Vec::with_capacity(2);
    let mut dropped = Vec::new();
    let mut kept = (false, false);
    for (which, item, poly) in [(0, h, &ph), (1, k, &pk)] {
        match shrink(poly, &inter) {
            Ok(quad) => {
                outputs.push(FusedPrediction { quad, ..item.clone() }.with_relation(Relation::Split));
                if which == 0 {
                    kept.0 = true;
                } else {
                    kept.1 = true;
                }
            }
            Err(reason) => dropped.push(DroppedBox {
                text: item.text.clone(),
                provenance: item.provenance.clone(),
                reason,
            }),
        }
    }
    Ok(PairResolution {
        action: PairAction::Split,
        iou,
        outputs,
        dropped,
        kept,
    })
}

/// Largest piece of `poly` outside `inter`, re-boxed.
fn shrink(poly: &ConvexPolygon, inter: &ConvexPolygon) -> Result<QuadBox, GeometryError> {
    let largest = geometry::difference(poly, inter)
        .into_iter()
        .max_by(|a, b| a.area().total_cmp(&b.area()))
        .ok_or(GeometryError::DegenerateInput("nothing left after removing the overlap"))?;
    rebox(&largest)
}

/// Four-cornered regions are kept as they are; anything else gets its
/// minimum-area rectangle.
fn rebox(p: &ConvexPolygon) -> Result<QuadBox, GeometryError> {
    if let [a, b, c, d] = p.vertices() {
        if let Ok(q) = canonicalize([*a, *b, *c, *d]) {
            return Ok(q);
        }
    }
    min_area_rect(p)
}

fn merge(
    h: &FusedPrediction,
    k: &FusedPrediction,
    inter: &ConvexPolygon,
    cfg: &FusionConfig,
) -> Result<FusedPrediction, FusionError> {
    let quad = rebox(inter)?;
    let cands = [
        LabelCandidate {
            score: h.score,
            model_id: h.text_model(),
            area: h.source_area,
        },
        LabelCandidate {
            score: k.score,
            model_id: k.text_model(),
            area: k.source_area,
        },
    ];
    let winner = pick_label(&cands, cfg, false)?;
    let (from, offset) = if winner == 0 { (h, 0) } else { (k, h.provenance.len()) };
    let mut provenance = h.provenance.clone();
    provenance.extend(k.provenance.iter().cloned());
    Ok(FusedPrediction {
        quad,
        text: from.text.clone(),
        score: from.score,
        source_area: from.source_area,
        provenance,
        text_source: offset + from.text_source,
    }
    .with_relation(Relation::Merged))
}

struct LabelCandidate<'a> {
    score: Option<f64>,
    model_id: &'a str,
    area: f64,
}

/// Index of the winning candidate. `strict` turns a missing score under
/// `HighestScore` into an error instead of a fallback to model priority.
fn pick_label(cands: &[LabelCandidate<'_>], cfg: &FusionConfig, strict: bool) -> Result<usize, FusionError> {
    if cands.is_empty() {
        return Err(FusionError::NoCandidates);
    }
    let mut policy = cfg.label_policy;
    if policy == LabelPolicy::HighestScore && cands.iter().any(|c| c.score.is_none()) {
        if strict {
            return Err(FusionError::MissingScore);
        }
        policy = LabelPolicy::ModelPriority;
    }
    // smaller is better
    let priority = |c: &LabelCandidate<'_>| (cfg.rank(c.model_id), c.model_id.to_owned());
    let better = |a: &LabelCandidate<'_>, b: &LabelCandidate<'_>| -> Ordering {
        let by_score = || b.score.unwrap_or(0.0).total_cmp(&a.score.unwrap_or(0.0));
        let by_priority = || priority(a).cmp(&priority(b));
        let by_area = || b.area.total_cmp(&a.area);
        match policy {
            LabelPolicy::HighestScore => by_score().then_with(by_priority).then_with(by_area),
            LabelPolicy::ModelPriority => by_priority().then_with(by_area),
            LabelPolicy::LargestSourceArea => by_area().then_with(by_priority),
        }
    };
    let mut best = 0;
    for i in 1..cands.len() {
        if better(&cands[i], &cands[best]) == Ordering::Less {
            best = i;
        }
    }
    Ok(best)
}

/// Picks the word for a set of overlapping predictions.
///
/// Returns `(text, model_id)` of the winner. Ties fall back to the order of
/// `cfg.model_priority` (unlisted models rank last, by id), then to the
/// larger box, then to input order.
pub fn assign_text(candidates: &[Prediction], cfg: &FusionConfig) -> Result<(String, String), FusionError> {
    let cands: Vec<LabelCandidate<'_>> = candidates
        .iter()
        .map(|p| LabelCandidate {
            score: p.score,
            model_id: &p.model_id,
            area: p.quad.area(),
        })
        .collect();
    let i = pick_label(&cands, cfg, true)?;
    Ok((candidates[i].text.clone(), candidates[i].model_id.clone()))
}

/// Result of fusing one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub image_id: String,
    pub predictions: Vec<FusedPrediction>,
    /// Merge passes run after insertion.
    pub passes: usize,
    /// False when `max_passes` ran out with boxes still above the threshold.
    pub fixpoint_reached: bool,
    pub dropped: Vec<DroppedBox>,
}

impl FusionOutcome {
    /// Human-readable warnings; empty when nothing noteworthy happened.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.fixpoint_reached {
            out.push(format!(
                "{}: fixpoint not reached after {} merge passes",
                self.image_id, self.passes
            ));
        }
        for d in &self.dropped {
            let src: Vec<String> = d.provenance.iter().map(|p| format!("{}#{}", p.model_id, p.index)).collect();
            out.push(format!(
                "{}: dropped split box {:?} from {} ({})",
                self.image_id,
                d.text,
                src.join("+"),
                d.reason
            ));
        }
        out
    }

    /// The fused boxes as a single prediction set, e.g. to fuse again.
    pub fn to_prediction_set(&self, model_id: &str) -> PredictionSet {
        PredictionSet {
            image_id: self.image_id.clone(),
            model_id: model_id.to_owned(),
            predictions: self.predictions.iter().map(|p| p.to_prediction(model_id)).collect(),
        }
    }
}

/// Fuses the prediction sets of several models for one image.
///
/// A single set passes through unchanged: boxes from one model are never
/// fused with each other unless a second model is involved.
pub fn fuse_image(sets: &[PredictionSet], cfg: &FusionConfig) -> Result<FusionOutcome, FusionError> {
    cfg.validate()?;
    let first = sets.first().ok_or(FusionError::EmptyInput)?;
    for s in sets {
        if s.image_id != first.image_id {
            return Err(FusionError::ImageMismatch {
                expected: first.image_id.clone(),
                found: s.image_id.clone(),
            });
        }
        s.validate()?;
    }

    let seed = |set: &PredictionSet| -> Vec<FusedPrediction> {
        set.predictions
            .iter()
            .enumerate()
            .map(|(i, p)| FusedPrediction::passthrough(p, i))
            .collect()
    };

    let mut dropped = Vec::new();
    let mut acc: Vec<FusedPrediction> = seed(first);
    for set in &sets[1..] {
        let mut slots: Vec<Option<FusedPrediction>> = acc.into_iter().map(Some).collect();
        let mut arrivals = Vec::new();
        for incoming in seed(set) {
            if let Some(k) = insert(&mut slots, incoming, cfg, &mut dropped)? {
                arrivals.push(k);
            }
        }
        acc = slots.into_iter().flatten().chain(arrivals).collect();
    }

    let mut passes = 0;
    let mut fixpoint_reached = sets.len() == 1;
    if !fixpoint_reached {
        while passes < cfg.max_passes {
            let pairs = pairs_at_or_above(&acc, cfg.iou_threshold);
            if pairs.is_empty() {
                fixpoint_reached = true;
                break;
            }
            acc = merge_pass(acc, &pairs, cfg)?;
            passes += 1;
        }
        if !fixpoint_reached {
            fixpoint_reached = pairs_at_or_above(&acc, cfg.iou_threshold).is_empty();
        }
    }

    acc.sort_by(output_order);
    Ok(FusionOutcome {
        image_id: first.image_id.clone(),
        predictions: acc,
        passes,
        fixpoint_reached,
        dropped,
    })
}

/// Resolves `k` against the accumulator. Returns what is left of `k`, or
/// `None` if it was merged away or dropped.
fn insert(
    slots: &mut [Option<FusedPrediction>],
    mut k: FusedPrediction,
    cfg: &FusionConfig,
    dropped: &mut Vec<DroppedBox>,
) -> Result<Option<FusedPrediction>, FusionError> {
    let mut order: Vec<(usize, f64)> = slots
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.as_ref().map(|h| (i, h.quad.iou(&k.quad))))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    for (i, _) in order {
        let Some(h) = slots[i].as_ref() else { continue };
        let res = fuse_pair(h, &k, cfg)?;
        dropped.extend(res.dropped);
        match res.action {
            PairAction::Disjoint => {}
            PairAction::Merged => {
                slots[i] = res.outputs.into_iter().next();
                return Ok(None);
            }
            PairAction::Split => {
                let mut outs = res.outputs.into_iter();
                slots[i] = if res.kept.0 { outs.next() } else { None };
                match (res.kept.1, outs.next()) {
                    (true, Some(k2)) => k = k2,
                    _ => return Ok(None),
                }
            }
        }
    }
    Ok(Some(k))
}

fn pairs_at_or_above(items: &[FusedPrediction], threshold: f64) -> Vec<(usize, usize, f64)> {
    let mut pairs = Vec::new();
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let v = items[i].quad.iou(&items[j].quad);
            if v >= threshold {
                pairs.push((i, j, v));
            }
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    pairs
}

/// Merges a maximal set of disjoint pairs, best IoU first.
fn merge_pass(
    items: Vec<FusedPrediction>,
    pairs: &[(usize, usize, f64)],
    cfg: &FusionConfig,
) -> Result<Vec<FusedPrediction>, FusionError> {
    let mut used = vec![false; items.len()];
    let mut slots: Vec<Option<FusedPrediction>> = items.into_iter().map(Some).collect();
    for &(i, j, _) in pairs {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        let (Some(h), Some(k)) = (slots[i].as_ref(), slots[j].as_ref()) else {
            continue;
        };
        let inter = geometry::intersect(&h.quad.to_polygon(), &k.quad.to_polygon());
        let merged = merge(h, k, &inter, cfg)?;
        slots[i] = Some(merged);
        slots[j] = None;
    }
    Ok(slots.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(x0: f64, y0: f64, x1: f64, y1: f64, text: &str, score: Option<f64>, model: &str) -> Prediction {
        Prediction::new(QuadBox::axis_aligned(x0, y0, x1, y1).unwrap(), text, score, model).unwrap()
    }

    fn fused(p: &Prediction) -> FusedPrediction {
        FusedPrediction::passthrough(p, 0)
    }

    #[test]
    fn identical_pair_merges_to_itself() {
        let h = pred(0.0, 0.0, 2.0, 2.0, "xin", Some(0.9), "m1");
        let k = pred(0.0, 0.0, 2.0, 2.0, "xin", Some(0.9), "m2");
        let res = fuse_pair(&fused(&h), &fused(&k), &FusionConfig::default()).unwrap();
        assert_eq!(res.action, PairAction::Merged);
        assert_eq!(res.outputs.len(), 1);
        assert_eq!(res.outputs[0].quad, h.quad);
        assert_eq!(res.outputs[0].text, "xin");
    }

    #[test]
    fn disjoint_pair_passes_through() {
        let h = fused(&pred(0.0, 0.0, 1.0, 1.0, "a", None, "m1"));
        let k = fused(&pred(5.0, 5.0, 6.0, 6.0, "b", None, "m2"));
        let res = fuse_pair(&h, &k, &FusionConfig::default()).unwrap();
        assert_eq!(res.action, PairAction::Disjoint);
        assert_eq!(res.outputs, vec![h, k]);
    }

    #[test]
    fn low_overlap_splits_and_keeps_words() {
        let h = fused(&pred(0.0, 0.0, 2.0, 2.0, "xin", None, "m1"));
        let k = fused(&pred(1.0, 0.0, 3.0, 2.0, "chào", None, "m2"));
        let res = fuse_pair(&h, &k, &FusionConfig::default()).unwrap();
        assert_eq!(res.action, PairAction::Split);
        assert!((res.iou - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(res.outputs.len(), 2);
        assert_eq!(res.outputs[0].text, "xin");
        assert_eq!(res.outputs[1].text, "chào");
        assert_eq!(res.outputs[0].quad, QuadBox::axis_aligned(0.0, 0.0, 1.0, 2.0).unwrap());
        assert_eq!(res.outputs[1].quad, QuadBox::axis_aligned(2.0, 0.0, 3.0, 2.0).unwrap());
        assert!(res.outputs.iter().all(|o| o.provenance[0].relation == Relation::Split));
    }

    #[test]
    fn contained_box_is_dropped_on_split() {
        let h = fused(&pred(0.0, 0.0, 10.0, 10.0, "big", None, "m1"));
        let k = fused(&pred(4.0, 4.0, 5.0, 5.0, "tiny", None, "m2"));
        let res = fuse_pair(&h, &k, &FusionConfig::default()).unwrap();
        assert_eq!(res.action, PairAction::Split);
        assert_eq!(res.kept, (true, false));
        assert_eq!(res.dropped.len(), 1);
        assert_eq!(res.dropped[0].text, "tiny");
    }

    #[test]
    fn label_policies() {
        let a = pred(0.0, 0.0, 2.0, 2.0, "a", Some(0.9), "m1");
        let b = pred(0.0, 0.0, 3.0, 3.0, "b", Some(0.7), "m2");
        let cfg = FusionConfig::default();
        assert_eq!(assign_text(std::slice::from_ref(&a), &cfg).unwrap().0, "a");
        assert_eq!(assign_text(&[a.clone(), b.clone()], &cfg).unwrap(), ("a".into(), "m1".into()));

        let tie = pred(0.0, 0.0, 2.0, 2.0, "b", Some(0.9), "m2");
        let cfg = FusionConfig {
            model_priority: vec!["m2".into(), "m1".into()],
            ..FusionConfig::default()
        };
        assert_eq!(assign_text(&[a.clone(), tie], &cfg).unwrap().1, "m2");

        let cfg = FusionConfig {
            label_policy: LabelPolicy::LargestSourceArea,
            ..FusionConfig::default()
        };
        assert_eq!(assign_text(&[a.clone(), b.clone()], &cfg).unwrap().0, "b");

        let cfg = FusionConfig {
            label_policy: LabelPolicy::ModelPriority,
            model_priority: vec!["m2".into()],
            ..FusionConfig::default()
        };
        assert_eq!(assign_text(&[a.clone(), b], &cfg).unwrap().0, "b");

        let unscored = pred(0.0, 0.0, 2.0, 2.0, "c", None, "m3");
        assert_eq!(
            assign_text(&[a, unscored], &FusionConfig::default()),
            Err(FusionError::MissingScore)
        );
        assert_eq!(assign_text(&[], &FusionConfig::default()), Err(FusionError::NoCandidates));
    }

    #[test]
    fn config_validation() {
        let bad = |cfg: FusionConfig| assert!(matches!(cfg.validate(), Err(FusionError::InvalidConfig(_))));
        bad(FusionConfig { iou_threshold: 0.0, ..Default::default() });
        bad(FusionConfig { iou_threshold: 1.5, ..Default::default() });
        bad(FusionConfig { max_passes: 0, ..Default::default() });
        bad(FusionConfig { label_policy: LabelPolicy::ModelPriority, ..Default::default() });
        assert!(FusionConfig { iou_threshold: 1.0, ..Default::default() }.validate().is_ok());
    }

    #[test]
    fn score_range_is_checked() {
        let q = QuadBox::axis_aligned(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(Prediction::new(q, "x", Some(1.2), "m"), Err(FusionError::InvalidScore(1.2)));
    }

    #[test]
    fn set_rejects_foreign_model() {
        let p = pred(0.0, 0.0, 1.0, 1.0, "x", None, "other");
        assert!(matches!(
            PredictionSet::new("img", "m1", vec![p]),
            Err(FusionError::ModelMismatch { .. })
        ));
    }

    #[test]
    fn mixed_images_are_rejected() {
        let a = PredictionSet::new("a", "m1", vec![]).unwrap();
        let b = PredictionSet::new("b", "m2", vec![]).unwrap();
        assert!(matches!(
            fuse_image(&[a, b], &FusionConfig::default()),
            Err(FusionError::ImageMismatch { .. })
        ));
        assert_eq!(fuse_image(&[], &FusionConfig::default()), Err(FusionError::EmptyInput));
    }

    #[test]
    fn single_model_is_identity() {
        let preds = vec![
            pred(0.0, 0.0, 10.0, 5.0, "một", None, "m1"),
            pred(20.0, 0.0, 30.0, 5.0, "hai", None, "m1"),
        ];
        let set = PredictionSet::new("img", "m1", preds.clone()).unwrap();
        let out = fuse_image(&[set], &FusionConfig::default()).unwrap();
        assert!(out.fixpoint_reached);
        assert_eq!(out.predictions.len(), 2);
        for (o, p) in out.predictions.iter().zip(&preds) {
            assert_eq!(o.quad, p.quad);
            assert_eq!(o.provenance[0].relation, Relation::Passthrough);
        }
    }

    #[test]
    fn two_identical_models_merge_everything() {
        let mk = |m: &str| {
            PredictionSet::new(
                "img",
                m,
                vec![
                    pred(0.0, 0.0, 10.0, 5.0, "một", None, m),
                    pred(20.0, 0.0, 30.0, 5.0, "hai", None, m),
                ],
            )
            .unwrap()
        };
        let out = fuse_image(&[mk("m1"), mk("m2")], &FusionConfig::default()).unwrap();
        assert_eq!(out.predictions.len(), 2);
        assert!(out
            .predictions
            .iter()
            .all(|p| p.provenance.len() == 2 && p.provenance.iter().all(|v| v.relation == Relation::Merged)));
        assert_eq!(out.predictions[0].text, "một");
    }

    #[test]
    fn disjoint_models_union() {
        let a = PredictionSet::new("img", "m1", vec![pred(0.0, 0.0, 10.0, 5.0, "A", None, "m1")]).unwrap();
        let b = PredictionSet::new("img", "m2", vec![pred(50.0, 0.0, 60.0, 5.0, "B", None, "m2")]).unwrap();
        let out = fuse_image(&[a, b], &FusionConfig::default()).unwrap();
        let texts: Vec<&str> = out.predictions.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(texts, ["A", "B"]);
    }

    #[test]
    fn merge_chain_needs_passes() {
        // three models hit the same word; the third also overlaps a fourth box
        let sets: Vec<PredictionSet> = (0..3)
            .map(|m| {
                let id = format!("m{m}");
                let dx = m as f64;
                PredictionSet::new("img", id.clone(), vec![pred(dx, 0.0, 20.0 + dx, 10.0, "w", Some(0.5), &id)])
                    .unwrap()
            })
            .collect();
        let out = fuse_image(&sets, &FusionConfig::default()).unwrap();
        assert!(out.fixpoint_reached);
        assert_eq!(out.predictions.len(), 1);
        assert_eq!(out.predictions[0].provenance.len(), 3);
    }

    #[test]
    fn pass_budget_exhaustion_is_reported() {
        // two boxes of the same model overlap heavily; a second model forces passes
        let m1 = PredictionSet::new(
            "img",
            "m1",
            vec![
                pred(0.0, 0.0, 10.0, 10.0, "a", None, "m1"),
                pred(1.0, 0.0, 11.0, 10.0, "b", None, "m1"),
                pred(2.0, 0.0, 12.0, 10.0, "c", None, "m1"),
                pred(3.0, 0.0, 13.0, 10.0, "d", None, "m1"),
            ],
        )
        .unwrap();
        let m2 = PredictionSet::new("img", "m2", vec![]).unwrap();
        let cfg = FusionConfig { max_passes: 1, ..Default::default() };
        let out = fuse_image(&[m1.clone(), m2.clone()], &cfg).unwrap();
        assert!(!out.fixpoint_reached);
        assert!(out.diagnostics()[0].contains("fixpoint not reached"));
        let out = fuse_image(&[m1, m2], &FusionConfig::default()).unwrap();
        assert!(out.fixpoint_reached);
        assert_eq!(out.predictions.len(), 1);
    }
}
