use proptest::prelude::*;

use textfuse::formats::AnnotationRecord;
use textfuse::metrics::{char_accuracy, evaluate_image, match_boxes, CharAccMode, EvalReport, Tally};
use textfuse::text::{edit_distance, nfc};
use textfuse::QuadBox;

/// Full-matrix Levenshtein over chars.
fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn text() -> impl Strategy<Value = String> {
    "[abcđeêéếệ\u{0301}\u{0323}]{0,10}"
}

/// Disjoint ground truth on a 4×4 grid of 100px cells.
fn scene() -> impl Strategy<Value = Vec<(usize, f64, f64, String, bool)>> {
    prop::collection::vec((0usize..16, 20.0..90.0f64, 20.0..90.0f64, "[a-z]{1,5}", prop::bool::weighted(0.15)), 0..10)
        .prop_map(|mut v| {
            v.sort_by_key(|e| e.0);
            v.dedup_by_key(|e| e.0);
            v
        })
}

fn gts(scene: &[(usize, f64, f64, String, bool)]) -> Vec<AnnotationRecord> {
    scene
        .iter()
        .map(|(cell, w, h, t, ignore)| {
            let (x, y) = ((cell % 4) as f64 * 100.0 + 5.0, (cell / 4) as f64 * 100.0 + 5.0);
            let q = QuadBox::axis_aligned(x, y, x + w, y + h).unwrap();
            AnnotationRecord::new(q, if *ignore { "###" } else { t })
        })
        .collect()
}

proptest! {
    #[test]
    fn edit_distance_matches_full_matrix(a in text(), b in text()) {
        let (a, b) = (nfc(&a), nfc(&b));
        prop_assert_eq!(edit_distance(&a, &b), levenshtein(&a, &b));
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
    }

    #[test]
    fn edit_distance_is_a_metric(a in text(), b in text(), c in text()) {
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
        prop_assert_eq!(edit_distance(&a, &a), 0);
    }

    #[test]
    fn char_accuracy_is_bounded_and_exact_on_equality(a in text(), b in "[abcđeêéếệ]{1,10}") {
        let v = char_accuracy(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v == 1.0, nfc(&a) == nfc(&b));
        let n = nfc(&b).chars().count() as f64;
        let expected = ((n - levenshtein(&nfc(&a), &nfc(&b)) as f64) / n).max(0.0);
        prop_assert_eq!(v, expected);
    }

    #[test]
    fn perfect_predictions_score_one(s in scene()) {
        let g = gts(&s);
        prop_assume!(g.iter().any(|r| !r.ignore));
        let preds: Vec<AnnotationRecord> = g.iter().filter(|r| !r.ignore).cloned().collect();
        let sum = evaluate_image(&preds, &g, 0.5).summary(CharAccMode::MeanOverWords);
        prop_assert_eq!((sum.precision, sum.recall, sum.hmean, sum.char_acc, sum.e2e_fmeasure), (1.0, 1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn predictions_on_ignored_regions_are_not_counted(s in scene()) {
        let g = gts(&s);
        let preds: Vec<QuadBox> = g.iter().filter(|r| r.ignore).map(|r| r.quad).collect();
        let m = match_boxes(&preds, &g, 0.5);
        prop_assert_eq!(m.ignored_preds.len(), preds.len());
        prop_assert_eq!(m.counts().fp, 0);
    }

    #[test]
    fn adding_a_correct_box_never_hurts(s in scene(), keep in prop::collection::vec(any::<bool>(), 10)) {
        let g = gts(&s);
        let care: Vec<usize> = (0..g.len()).filter(|&i| !g[i].ignore).collect();
        let mut preds: Vec<AnnotationRecord> = care.iter().zip(&keep).filter(|(_, k)| **k).map(|(i, _)| g[*i].clone()).collect();
        let missing = care.iter().zip(&keep).find(|(_, k)| !**k).map(|(i, _)| *i);
        prop_assume!(missing.is_some());
        let before = evaluate_image(&preds, &g, 0.5).summary(CharAccMode::MeanOverWords);
        preds.push(g[missing.unwrap()].clone());
        let after = evaluate_image(&preds, &g, 0.5).summary(CharAccMode::MeanOverWords);
        prop_assert_eq!(after.tp, before.tp + 1);
        prop_assert!(after.recall > before.recall);
        prop_assert!(after.hmean >= before.hmean);
        prop_assert!(after.e2e_fmeasure >= before.e2e_fmeasure);
    }

    #[test]
    fn corpus_totals_ignore_image_order(scenes in prop::collection::vec(scene(), 1..5), rot in 0usize..5) {
        let tallies: Vec<(String, Tally)> = scenes
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let g = gts(s);
                let preds: Vec<AnnotationRecord> = g.iter().step_by(2).cloned().collect();
                (format!("img{i}"), evaluate_image(&preds, &g, 0.5))
            })
            .collect();
        let mut rotated = tallies.clone();
        rotated.rotate_left(rot % tallies.len());
        let a = EvalReport::from_tallies(tallies.iter().map(|(k, t)| (k.as_str(), *t)), CharAccMode::MicroOverChars);
        let b = EvalReport::from_tallies(rotated.iter().map(|(k, t)| (k.as_str(), *t)), CharAccMode::MicroOverChars);
        prop_assert_eq!((a.corpus.tp, a.corpus.fp, a.corpus.fn_), (b.corpus.tp, b.corpus.fp, b.corpus.fn_));
        prop_assert_eq!(a.corpus.char_acc, b.corpus.char_acc);
        prop_assert_eq!(a.per_image, b.per_image);
    }
}

#[test]
fn empty_predictions_score_zero() {
    let g = gts(&[(0, 50.0, 30.0, "phở".into(), false)]);
    let s = evaluate_image::<AnnotationRecord>(&[], &g, 0.5).summary(CharAccMode::MeanOverWords);
    assert_eq!((s.precision, s.recall, s.hmean), (0.0, 0.0, 0.0));
}
