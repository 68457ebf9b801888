//! Detection, recognition and end-to-end scores against ground truth.
//!
//! Predictions are matched one-to-one to ground-truth boxes greedily by
//! descending IoU. When ground-truth boxes do not overlap each other, every
//! prediction can reach the match threshold with at most one of them, and
//! greedy matching is then optimal in both match count and total IoU.
//!
//! Ground truth marked `###` never counts: it cannot be missed, and a
//! prediction that only lands on such a region is neither a hit nor a false
//! alarm.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::formats::AnnotationRecord;
use crate::fusion::{FusedPrediction, Prediction};
use crate::geometry::QuadBox;
use crate::text::{edit_distance, nfc};

pub const DEFAULT_MATCH_IOU: f64 = 0.5;

/// Anything with a box and a word.
pub trait Spotted {
    fn quad(&self) -> &QuadBox;
    fn text(&self) -> &str;
}

impl Spotted for AnnotationRecord {
    fn quad(&self) -> &QuadBox {
        &self.quad
    }
    fn text(&self) -> &str {
        &self.text
    }
}

impl Spotted for Prediction {
    fn quad(&self) -> &QuadBox {
        &self.quad
    }
    fn text(&self) -> &str {
        &self.text
    }
}

impl Spotted for FusedPrediction {
    fn quad(&self) -> &QuadBox {
        &self.quad
    }
    fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub pred: usize,
    pub gt: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_preds: Vec<usize>,
    /// Unmatched ground truth, excluding `###` regions.
    pub unmatched_gts: Vec<usize>,
    /// Predictions that only matched `###` regions.
    pub ignored_preds: Vec<usize>,
}

impl MatchResult {
    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.pairs.len(),
            fp: self.unmatched_preds.len(),
            fn_: self.unmatched_gts.len(),
        }
    }
}

/// Greedy one-to-one matching at `iou >= match_iou`.
pub fn match_boxes(preds: &[QuadBox], gts: &[AnnotationRecord], match_iou: f64) -> MatchResult {
    let mut candidates = Vec::new();
    for (p, pq) in preds.iter().enumerate() {
        for (g, gt) in gts.iter().enumerate() {
            if gt.ignore {
                continue;
            }
            let v = pq.iou(&gt.quad);
            if v >= match_iou {
                candidates.push(MatchedPair { pred: p, gt: g, iou: v });
            }
        }
    }
    candidates.sort_by(|a, b| b.iou.total_cmp(&a.iou).then((a.pred, a.gt).cmp(&(b.pred, b.gt))));

    let mut pred_used = vec![false; preds.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !pred_used[c.pred] && !gt_used[c.gt] {
            pred_used[c.pred] = true;
            gt_used[c.gt] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|p| p.pred);

    let mut unmatched_preds = Vec::new();
    let mut ignored_preds = Vec::new();
    for (p, pq) in preds.iter().enumerate() {
        if pred_used[p] {
            continue;
        }
        let on_ignored = gts.iter().any(|g| g.ignore && pq.iou(&g.quad) >= match_iou);
        if on_ignored {
            ignored_preds.push(p);
        } else {
            unmatched_preds.push(p);
        }
    }
    let unmatched_gts = (0..gts.len()).filter(|&g| !gts[g].ignore && !gt_used[g]).collect();
    MatchResult {
        pairs,
        unmatched_preds,
        unmatched_gts,
        ignored_preds,
    }
}

/// True positives, false positives, false negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn prf(&self) -> Prf {
        prf(self.tp, self.fp, self.fn_)
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub hmean: f64,
}

/// Precision, recall and their harmonic mean. Each is 0 when undefined.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> Prf {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let hmean = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Prf {
        precision,
        recall,
        hmean,
    }
}

pub fn detection_prf(m: &MatchResult) -> Prf {
    m.counts().prf()
}

/// `max(0, (|gt| - ED(pred, gt)) / |gt|)` over Unicode scalar values.
/// Both empty gives 1; empty ground truth with a non-empty prediction gives 0.
pub fn char_accuracy(pred: &str, gt: &str) -> f64 {
    let (pred, gt) = (nfc(pred), nfc(gt));
    let n = gt.chars().count();
    if n == 0 {
        return if pred.is_empty() { 1.0 } else { 0.0 };
    }
    let ed = edit_distance(&pred, &gt);
    (n.saturating_sub(ed)) as f64 / n as f64
}

/// How corpus character accuracy aggregates matched words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CharAccMode {
    /// Mean of per-word accuracies.
    #[default]
    MeanOverWords,
    /// Correct characters over all ground-truth characters.
    MicroOverChars,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub match_iou: f64,
    pub char_acc: CharAccMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            match_iou: DEFAULT_MATCH_IOU,
            char_acc: CharAccMode::MeanOverWords,
        }
    }
}

/// Additive per-image tallies; a corpus is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tally {
    pub detection: Counts,
    pub end_to_end: Counts,
    pub ca_sum: f64,
    pub ca_words: usize,
    pub correct_chars: usize,
    pub gt_chars: usize,
}

impl std::ops::AddAssign for Tally {
    fn add_assign(&mut self, o: Tally) {
        self.detection += o.detection;
        self.end_to_end += o.end_to_end;
        self.ca_sum += o.ca_sum;
        self.ca_words += o.ca_words;
        self.correct_chars += o.correct_chars;
        self.gt_chars += o.gt_chars;
    }
}

impl Tally {
    fn char_acc(&self, mode: CharAccMode) -> f64 {
        match mode {
            CharAccMode::MeanOverWords if self.ca_words > 0 => self.ca_sum / self.ca_words as f64,
            CharAccMode::MicroOverChars if self.gt_chars > 0 => self.correct_chars as f64 / self.gt_chars as f64,
            _ => 0.0,
        }
    }

    pub fn summary(&self, mode: CharAccMode) -> Summary {
        let det = self.detection.prf();
        let e2e = self.end_to_end.prf();
        Summary {
            precision: det.precision,
            recall: det.recall,
            hmean: det.hmean,
            char_acc: self.char_acc(mode),
            e2e_precision: e2e.precision,
            e2e_recall: e2e.recall,
            e2e_fmeasure: e2e.hmean,
            tp: self.detection.tp,
            fp: self.detection.fp,
            fn_: self.detection.fn_,
        }
    }
}

/// Scores one image.
///
/// A matched pair is an end-to-end hit when the words are identical after
/// NFC, case and diacritics included.
pub fn evaluate_image<P: Spotted>(preds: &[P], gts: &[AnnotationRecord], match_iou: f64) -> Tally {
    let quads: Vec<QuadBox> = preds.iter().map(|p| *p.quad()).collect();
    let m = match_boxes(&quads, gts, match_iou);
    let detection = m.counts();
    let mut tally = Tally {
        detection,
        ..Tally::default()
    };
    let mut e2e_tp = 0;
    for pair in &m.pairs {
        let pred = nfc(preds[pair.pred].text());
        let gt = &gts[pair.gt].text;
        if pred == *gt {
            e2e_tp += 1;
        }
        tally.ca_sum += char_accuracy(&pred, gt);
        tally.ca_words += 1;
        let n = gt.chars().count();
        tally.correct_chars += n.saturating_sub(edit_distance(&pred, gt));
        tally.gt_chars += n;
    }
    let scored_preds = detection.tp + detection.fp;
    let scored_gts = detection.tp + detection.fn_;
    tally.end_to_end = Counts {
        tp: e2e_tp,
        fp: scored_preds - e2e_tp,
        fn_: scored_gts - e2e_tp,
    };
    tally
}

/// Headline numbers for one image or a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Summary {
    pub precision: f64,
    pub recall: f64,
    pub hmean: f64,
    pub char_acc: f64,
    pub e2e_precision: f64,
    pub e2e_recall: f64,
    pub e2e_fmeasure: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub corpus: Summary,
    pub per_image: BTreeMap<String, Summary>,
}

impl EvalReport {
    /// Sums per-image tallies; the result does not depend on their order.
    pub fn from_tallies<'a>(images: impl IntoIterator<Item = (&'a str, Tally)>, mode: CharAccMode) -> Self {
        let mut total = Tally::default();
        let mut per_image = BTreeMap::new();
        for (id, t) in images {
            total += t;
            per_image.insert(id.to_owned(), t.summary(mode));
        }
        Self {
            corpus: total.summary(mode),
            per_image,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Plain-text table: corpus line first, then one line per image.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let header = format!(
            "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}\n",
            "image", "precision", "recall", "hmean", "char_acc", "e2e_f", "tp", "fp", "fn"
        );
        out.push_str(&header);
        let mut row = |name: &str, s: &Summary| {
            let _ = writeln!(
                out,
                "{:<24} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>6} {:>6} {:>6}",
                name, s.precision, s.recall, s.hmean, s.char_acc, s.e2e_fmeasure, s.tp, s.fp, s.fn_
            );
        };
        row("(corpus)", &self.corpus);
        for (id, s) in &self.per_image {
            row(id, s);
        }
        out
    }
}

/// Single-image report.
pub fn end_to_end_eval<P: Spotted>(preds: &[P], gts: &[AnnotationRecord], cfg: &EvalConfig) -> EvalReport {
    let tally = evaluate_image(preds, gts, cfg.match_iou);
    EvalReport::from_tallies([("image", tally)], cfg.char_acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(x0: f64, y0: f64, x1: f64, y1: f64, text: &str) -> AnnotationRecord {
        AnnotationRecord::new(QuadBox::axis_aligned(x0, y0, x1, y1).unwrap(), text)
    }

    fn quad(x0: f64, y0: f64, x1: f64, y1: f64) -> QuadBox {
        QuadBox::axis_aligned(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn identity_match() {
        let gts = vec![gt(0.0, 0.0, 10.0, 5.0, "a"), gt(20.0, 0.0, 30.0, 5.0, "b")];
        let preds: Vec<QuadBox> = gts.iter().map(|g| g.quad).collect();
        let m = match_boxes(&preds, &gts, 0.5);
        assert_eq!(m.pairs.len(), 2);
        assert!(m.pairs.iter().all(|p| p.iou == 1.0 && p.pred == p.gt));
        assert_eq!(detection_prf(&m), Prf { precision: 1.0, recall: 1.0, hmean: 1.0 });
    }

    #[test]
    fn no_overlap_no_pairs() {
        let gts = vec![gt(0.0, 0.0, 10.0, 5.0, "a")];
        let m = match_boxes(&[quad(50.0, 50.0, 60.0, 60.0)], &gts, 0.5);
        assert!(m.pairs.is_empty());
        assert_eq!(m.counts(), Counts { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn better_of_two_predictions_wins() {
        // gt [0,10]x[0,10]; pred a has IoU 0.8, pred b has IoU 0.6
        let gts = vec![gt(0.0, 0.0, 10.0, 10.0, "w")];
        let a = quad(0.0, 0.0, 8.0, 10.0);
        let b = quad(0.0, 0.0, 6.0, 10.0);
        let m = match_boxes(&[b, a], &gts, 0.5);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].pred, 1);
        assert!((m.pairs[0].iou - 0.8).abs() < 1e-12);
        assert_eq!(m.unmatched_preds, vec![0]);
    }

    #[test]
    fn dont_care_regions_are_neutral() {
        let gts = vec![gt(0.0, 0.0, 10.0, 5.0, "a"), gt(20.0, 0.0, 30.0, 5.0, "###")];
        let m = match_boxes(&[quad(20.0, 0.0, 30.0, 5.0)], &gts, 0.5);
        assert!(m.pairs.is_empty());
        assert_eq!(m.ignored_preds, vec![0]);
        assert!(m.unmatched_preds.is_empty());
        assert_eq!(m.unmatched_gts, vec![0]);
    }

    #[test]
    fn prf_conventions() {
        let p = prf(3, 1, 2);
        assert_eq!(p.precision, 0.75);
        assert_eq!(p.recall, 0.6);
        assert!((p.hmean - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-15);
        assert_eq!(prf(0, 0, 4), Prf::default());
        assert_eq!(prf(0, 3, 0), Prf::default());
    }

    #[test]
    fn char_accuracy_cases() {
        assert_eq!(char_accuracy("việt", "việt"), 1.0);
        assert_eq!(char_accuracy("viet", "việt"), 0.75);
        assert_eq!(char_accuracy("", "abc"), 0.0);
        assert_eq!(char_accuracy("", ""), 1.0);
        assert_eq!(char_accuracy("x", ""), 0.0);
        assert_eq!(char_accuracy("abcdefgh", "ab"), 0.0);
    }

    #[test]
    fn end_to_end_cases() {
        let gts = vec![gt(0.0, 0.0, 10.0, 5.0, "phở"), gt(20.0, 0.0, 30.0, 5.0, "bánh")];
        let perfect = gts.clone();
        let r = end_to_end_eval(&perfect, &gts, &EvalConfig::default());
        assert_eq!(r.corpus.char_acc, 1.0);
        assert_eq!(r.corpus.e2e_fmeasure, 1.0);

        let words = vec![gt(0.0, 0.0, 10.0, 5.0, "abcd"), gt(20.0, 0.0, 30.0, 5.0, "wxyz")];
        let off_by_one = vec![gt(0.0, 0.0, 10.0, 5.0, "abcx"), gt(20.0, 0.0, 30.0, 5.0, "wxyq")];
        let r = end_to_end_eval(&off_by_one, &words, &EvalConfig::default());
        assert_eq!(r.corpus.char_acc, 0.75);
        assert_eq!(r.corpus.e2e_fmeasure, 0.0);
        assert_eq!(r.corpus.hmean, 1.0);

        let none: Vec<AnnotationRecord> = vec![gt(100.0, 100.0, 110.0, 105.0, "x")];
        let r = end_to_end_eval(&none, &gts, &EvalConfig::default());
        assert_eq!(r.corpus.char_acc, 0.0);
        assert_eq!(r.corpus.e2e_fmeasure, 0.0);
    }

    #[test]
    fn case_and_diacritics_matter() {
        let gts = vec![gt(0.0, 0.0, 10.0, 5.0, "Phố")];
        for wrong in ["phố", "Phô", "Phó"] {
            let preds = vec![gt(0.0, 0.0, 10.0, 5.0, wrong)];
            assert_eq!(end_to_end_eval(&preds, &gts, &EvalConfig::default()).corpus.e2e_fmeasure, 0.0);
        }
    }

    #[test]
    fn micro_mode() {
        let gts = vec![gt(0.0, 0.0, 10.0, 5.0, "ab"), gt(20.0, 0.0, 30.0, 5.0, "cdef")];
        let preds = vec![gt(0.0, 0.0, 10.0, 5.0, "ab"), gt(20.0, 0.0, 30.0, 5.0, "cdxx")];
        let cfg = EvalConfig {
            char_acc: CharAccMode::MicroOverChars,
            ..EvalConfig::default()
        };
        assert!((end_to_end_eval(&preds, &gts, &cfg).corpus.char_acc - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(end_to_end_eval(&preds, &gts, &EvalConfig::default()).corpus.char_acc, 0.75);
    }

    #[test]
    fn json_field_names() {
        let r = EvalReport::default();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for k in ["precision", "recall", "hmean", "char_acc", "e2e_fmeasure", "tp", "fp", "fn", "per_image"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
    }
}
