//! Ensemble fusion and evaluation for scene-text spotting.
//!
//! Several text-spotting models each produce a list of quadrilateral word
//! boxes with recognized text for an image. [`fusion`] combines those lists
//! into one, [`metrics`] scores any list against ground truth, and
//! [`formats`] reads and writes the line-based annotation files both use.
//!
//! The `examples/` directory of this crate has one runnable program per
//! capability; the `textfuse` binary wraps the same operations for corpora
//! on disk.

pub mod cli;
pub mod formats;
pub mod fusion;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod synth;
pub mod text;

pub use fusion::{fuse_image, FusedPrediction, FusionConfig, LabelPolicy, Prediction, PredictionSet};
pub use geometry::{ConvexPolygon, Point, QuadBox};

