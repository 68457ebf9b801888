//! Joins detector boxes with a recognizer's per-box output into one
//! prediction set, flagging boxes the recognizer skipped.
//!
//!     cargo run --example two_stage_join

use textfuse::formats::{format_line, join_two_stage, parse_annotation_file, parse_recognition_file};
use textfuse::QuadBox;

const DETECTIONS: &str = "\
10,40,90,40,90,10,10,10,
100,40,180,40,180,10,100,10,
200,40,260,40,260,10,200,10,
";

const RECOGNITIONS: &str = "img_7\t0\t0.93\tbánh\nimg_7\t2\t0.71\tmì\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let boxes: Vec<QuadBox> = parse_annotation_file(DETECTIONS.as_bytes())?.into_iter().map(|r| r.quad).collect();
    let recs = parse_recognition_file(RECOGNITIONS.as_bytes())?;
    let joined = join_two_stage("img_7", "db_spin", &boxes, &recs["img_7"])?;
    for p in &joined.set.predictions {
        print!("{:>5} {}", p.score.map_or("-".into(), |s| format!("{s:.2}")), format_line(&p.quad, &p.text));
    }
    println!("boxes without a recognition: {:?}", joined.unrecognized);
    Ok(())
}
