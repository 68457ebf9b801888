//! Exact IoU of rotated boxes, the pieces left after removing an overlap,
//! and the minimum-area rectangle around a polygon.
//!
//!     cargo run --example iou_and_clipping

use textfuse::geometry::{difference, intersect, iou, min_area_rect};
use textfuse::oracle::raster_iou_at;
use textfuse::QuadBox;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = QuadBox::axis_aligned(0.0, 0.0, 2.0, 2.0)?;
    let b = QuadBox::axis_aligned(1.0, 0.0, 3.0, 2.0)?;
    println!("axis-aligned IoU: {:.6}", a.iou(&b));

    // a word tilted by a few pixels against a straight one
    let tilted = QuadBox::from_coords([10.0, 42.0, 118.0, 30.0, 116.0, 8.0, 8.0, 20.0])?;
    let straight = QuadBox::axis_aligned(20.0, 10.0, 120.0, 40.0)?;
    let (pt, ps) = (tilted.to_polygon(), straight.to_polygon());
    println!("rotated IoU:      {:.6}", iou(&pt, &ps)?);
    println!("raster estimate:  {:.6}", raster_iou_at(&pt, &ps, 1024)?);

    let overlap = intersect(&pt, &ps);
    println!("overlap has {} vertices, area {:.2}", overlap.vertices().len(), overlap.area());
    for (i, piece) in difference(&pt, &ps).iter().enumerate() {
        println!("piece {i}: area {:.2}", piece.area());
    }
    let rect = min_area_rect(&overlap)?;
    println!("min-area rectangle of the overlap: {:?} (area {:.2})", rect.to_coords(), rect.area());
    Ok(())
}
