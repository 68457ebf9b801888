//! Detection, recognition and end-to-end scores for one image, with a
//! don't-care region in the ground truth.
//!
//!     cargo run --example evaluate_predictions

use textfuse::formats::parse_annotation_file;
use textfuse::metrics::{end_to_end_eval, match_boxes, CharAccMode, EvalConfig};
use textfuse::QuadBox;

const GROUND_TRUTH: &str = "\
10,40,90,40,90,10,10,10,phở
100,40,180,40,180,10,100,10,việt
10,90,60,90,60,60,10,60,###
200,90,260,90,260,60,200,60,nam
";

const PREDICTIONS: &str = "\
11,41,91,41,91,11,11,11,phở
100,40,180,40,180,10,100,10,viet
12,88,58,88,58,62,12,62,ĐÀ
300,40,340,40,340,10,300,10,xin
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gts = parse_annotation_file(GROUND_TRUTH.as_bytes())?;
    let preds = parse_annotation_file(PREDICTIONS.as_bytes())?;

    let quads: Vec<QuadBox> = preds.iter().map(|p| p.quad).collect();
    let m = match_boxes(&quads, &gts, 0.5);
    for pair in &m.pairs {
        println!("pred {} -> gt {} (IoU {:.3}): {:?} vs {:?}", pair.pred, pair.gt, pair.iou, preds[pair.pred].text, gts[pair.gt].text);
    }
    println!("ignored (on ###): {:?}, false positives: {:?}, missed: {:?}", m.ignored_preds, m.unmatched_preds, m.unmatched_gts);

    for mode in [CharAccMode::MeanOverWords, CharAccMode::MicroOverChars] {
        let report = end_to_end_eval(&preds, &gts, &EvalConfig { char_acc: mode, ..EvalConfig::default() });
        println!("\n{mode:?}\n{}", report.to_table());
    }
    Ok(())
}
