//! Fuses the words two models found in one image and shows where each
//! output box came from.
//!
//!     cargo run --example fuse_two_models

use textfuse::{fuse_image, FusionConfig, LabelPolicy, Prediction, PredictionSet, QuadBox};

fn set(model: &str, words: &[([f64; 4], &str, f64)]) -> Result<PredictionSet, Box<dyn std::error::Error>> {
    let preds = words
        .iter()
        .map(|&([x0, y0, x1, y1], text, score)| Prediction::new(QuadBox::axis_aligned(x0, y0, x1, y1)?, text, Some(score), model).map_err(Into::into))
        .collect::<Result<Vec<_>, Box<dyn std::error::Error>>>()?;
    Ok(PredictionSet::new("street_sign", model, preds)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let detector_a = set(
        "db_spin",
        &[
            ([10.0, 10.0, 90.0, 40.0], "PHỞ", 0.92),
            ([100.0, 10.0, 180.0, 40.0], "BÒ", 0.61),
            ([10.0, 60.0, 60.0, 90.0], "Hà", 0.80),
        ],
    )?;
    let detector_b = set(
        "sast_abinet",
        &[
            ([12.0, 12.0, 92.0, 42.0], "PHO", 0.55),
            ([150.0, 10.0, 230.0, 40.0], "TÁI", 0.74),
            ([70.0, 60.0, 130.0, 90.0], "Nội", 0.88),
        ],
    )?;

    for policy in [LabelPolicy::HighestScore, LabelPolicy::ModelPriority] {
        let cfg = FusionConfig {
            label_policy: policy,
            model_priority: vec!["sast_abinet".into(), "db_spin".into()],
            ..FusionConfig::default()
        };
        let out = fuse_image(&[detector_a.clone(), detector_b.clone()], &cfg)?;
        println!("{policy:?}: {} boxes after {} merge passes", out.predictions.len(), out.passes);
        for p in &out.predictions {
            let from: Vec<String> = p.provenance.iter().map(|s| format!("{}#{} {}", s.model_id, s.index, s.relation)).collect();
            println!("  {:<4} {:?}  <- {}", p.text, p.quad.to_coords(), from.join(", "));
        }
        for warning in out.diagnostics() {
            println!("  warning: {warning}");
        }
    }
    Ok(())
}
