//! Compares exact IoU with the raster estimate on random quad pairs and
//! shows how the estimate tightens as the grid gets finer.
//!
//!     cargo run --release --example oracle_check

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use textfuse::geometry::iou;
use textfuse::oracle::{random_quad_pair, raster_iou_at};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pairs: Vec<_> = (0..200).map(|_| random_quad_pair(&mut rng, 1000.0)).collect();
    for res in [64, 128, 256, 512, 1024] {
        let mut worst = 0.0f64;
        let mut mean = 0.0;
        for (a, b) in &pairs {
            let (pa, pb) = (a.to_polygon(), b.to_polygon());
            let d = (iou(&pa, &pb)? - raster_iou_at(&pa, &pb, res)?).abs();
            worst = worst.max(d);
            mean += d / pairs.len() as f64;
        }
        println!("grid {res:>4}: mean |Δ| {mean:.5}, max |Δ| {worst:.5}");
    }
    Ok(())
}
