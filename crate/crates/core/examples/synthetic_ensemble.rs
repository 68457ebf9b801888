//! Builds a synthetic corpus, simulates two models with complementary
//! misses, fuses them and compares all three against the ground truth.
//!
//!     cargo run --release --example synthetic_ensemble [seed]

use textfuse::metrics::{evaluate_image, CharAccMode, Summary, Tally};
use textfuse::synth::{generate_ground_truth, synthesize_model, GroundTruthSpec, NoiseProfile};
use textfuse::{fuse_image, FusionConfig};

fn row(name: &str, s: &Summary) {
    println!(
        "{name:<10} P {:.4}  R {:.4}  Hmean {:.4}  CA {:.4}  E2E-F {:.4}",
        s.precision, s.recall, s.hmean, s.char_acc, s.e2e_fmeasure
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let gt = generate_ground_truth(&GroundTruthSpec { seed, ..GroundTruthSpec::default() });
    let noise = NoiseProfile {
        drop_rate: 0.3,
        jitter_px: 2.0,
        char_error_rate: 0.15,
        spurious_rate: 0.5,
        ..NoiseProfile::noiseless(seed)
    };
    let models = noise
        .complementary(2)
        .iter()
        .enumerate()
        .map(|(i, p)| synthesize_model(&gt, p, &format!("model_{}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;

    let cfg = FusionConfig::default();
    let mut tallies = [Tally::default(); 3];
    for (id, truth) in &gt {
        let fused = fuse_image(&[models[0][id].clone(), models[1][id].clone()], &cfg)?;
        tallies[0] += evaluate_image(&models[0][id].predictions, truth, 0.5);
        tallies[1] += evaluate_image(&models[1][id].predictions, truth, 0.5);
        tallies[2] += evaluate_image(&fused.predictions, truth, 0.5);
    }
    for (name, t) in ["model_1", "model_2", "fused"].iter().zip(&tallies) {
        row(name, &t.summary(CharAccMode::MeanOverWords));
    }
    Ok(())
}
