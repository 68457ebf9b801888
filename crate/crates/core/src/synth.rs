//! Synthetic ground truth and synthetic "models" with controlled errors.
//!
//! A synthetic model copies the ground truth, then drops boxes, jitters
//! corners, corrupts single characters and adds spurious boxes. Two models
//! can be made complementary by splitting the boxes into partitions and
//! letting each model drop only from its own partition, so every box
//! survives in at least one of them.
//!
//! Everything is a pure function of its inputs and seeds. Each image draws
//! from its own generator seeded by the profile seed and the image id.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formats::AnnotationRecord;
use crate::fusion::{Prediction, PredictionSet};
use crate::geometry::{self, canonicalize, Point, QuadBox};

/// Ground truth keyed by image id.
pub type Corpus = BTreeMap<String, Vec<AnnotationRecord>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid noise profile: {0}")]
    InvalidProfile(String),
}

const LEXICON: &[&str] = &[
    "xin", "chào", "việt", "nam", "phở", "bò", "cà", "phê", "sữa", "đá", "bánh", "mì", "quán", "cơm", "tấm",
    "nhà", "hàng", "khách", "sạn", "đường", "phố", "chợ", "bến", "thành", "giảm", "giá", "khuyến", "mãi",
    "điện", "thoại", "thời", "trang", "ngân", "nước", "mía", "trà", "sen", "bún", "chả", "gỏi", "cuốn",
    "tiệm", "vàng", "bạc", "Sài", "Gòn", "Hà", "Nội", "HUẾ", "ĐÀ", "NẴNG", "2024", "0909",
];

const ALPHABET: &str = "aăâbcdđeêghiklmnoôơpqrstuưvxyáàảãạắằẳẵặấầẩẫậéèẻẽẹếềểễệíìỉĩịóòỏõọốồổỗộớờởỡợúùủũụứừửữựýỳỷỹỵ";

/// Which boxes a model may drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropPool {
    #[default]
    All,
    /// Only boxes hashed into `part` of `parts` (keyed by `key`) may drop.
    Partition { key: u64, part: u32, parts: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseProfile {
    /// Overall fraction of ground-truth boxes to drop.
    pub drop_rate: f64,
    /// Each corner moves uniformly within `±jitter_px` on both axes.
    pub jitter_px: f64,
    /// Per-word chance of one character substitution.
    pub char_error_rate: f64,
    /// Expected number of extra boxes per image.
    pub spurious_rate: f64,
    pub seed: u64,
    pub drop_pool: DropPool,
}

impl NoiseProfile {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            drop_rate: 0.0,
            jitter_px: 0.0,
            char_error_rate: 0.0,
            spurious_rate: 0.0,
            seed,
            drop_pool: DropPool::All,
        }
    }

    /// `parts` copies of `self` whose drop sets are disjoint. Copy `i` gets
    /// seed `seed + i` and drops only from partition `i`.
    pub fn complementary(&self, parts: u32) -> Vec<NoiseProfile> {
        (0..parts)
            .map(|part| NoiseProfile {
                seed: self.seed.wrapping_add(part as u64),
                drop_pool: DropPool::Partition {
                    key: self.seed,
                    part,
                    parts,
                },
                ..*self
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SynthError::InvalidProfile(format!("{name} {v} not in [0, 1]")))
            }
        };
        unit("drop_rate", self.drop_rate)?;
        unit("char_error_rate", self.char_error_rate)?;
        for (name, v) in [("jitter_px", self.jitter_px), ("spurious_rate", self.spurious_rate)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SynthError::InvalidProfile(format!("{name} {v} must be finite and >= 0")));
            }
        }
        if let DropPool::Partition { part, parts, .. } = self.drop_pool {
            if parts == 0 || part >= parts {
                return Err(SynthError::InvalidProfile(format!("partition {part} of {parts}")));
            }
            if self.drop_rate * parts as f64 > 1.0 {
                return Err(SynthError::InvalidProfile(format!(
                    "drop_rate {} too high for {parts} partitions",
                    self.drop_rate
                )));
            }
        }
        Ok(())
    }

    fn drop_probability(&self, image_id: &str, index: usize) -> f64 {
        match self.drop_pool {
            DropPool::All => self.drop_rate,
            DropPool::Partition { key, part, parts } => {
                let h = mix(key ^ fnv1a(image_id.as_bytes()), index as u64);
                if h % parts as u64 == part as u64 {
                    self.drop_rate * parts as f64
                } else {
                    0.0
                }
            }
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// splitmix64 finalizer over two words.
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn image_rng(seed: u64, image_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, fnv1a(image_id.as_bytes())))
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn rounded_quad(pts: [Point; 4]) -> Option<QuadBox> {
    canonicalize(pts.map(|p| Point::new(round1(p.x), round1(p.y)))).ok()
}

/// Simulates one model over a ground-truth corpus.
///
/// Scores are `1 - corruption`, where corruption averages the normalized
/// corner shift and whether the word was altered. Spurious boxes score 0.
/// `###` regions are never predicted.
pub fn synthesize_model(
    gt: &Corpus,
    profile: &NoiseProfile,
    model_id: &str,
) -> Result<BTreeMap<String, PredictionSet>, SynthError> {
    profile.validate()?;
    let alphabet: Vec<char> = ALPHABET.chars().collect();
    let mut out = BTreeMap::new();
    for (image_id, records) in gt {
        let mut rng = image_rng(profile.seed, image_id);
        let mut predictions = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            if rec.ignore {
                continue;
            }
            let dropped = rng.gen::<f64>() < profile.drop_probability(image_id, i);
            let (quad, shift) = jitter(&mut rng, &rec.quad, profile.jitter_px);
            let (text, corrupted) = corrupt(&mut rng, &rec.text, profile.char_error_rate, &alphabet);
            if dropped {
                continue;
            }
            let corruption = 0.5 * shift + 0.5 * f64::from(u8::from(corrupted));
            predictions.push(Prediction {
                quad,
                text,
                score: Some((1.0 - corruption).clamp(0.0, 1.0)),
                model_id: model_id.to_owned(),
            });
        }
        let existing: Vec<QuadBox> = records.iter().map(|r| r.quad).collect();
        for quad in spurious(&mut rng, &existing, profile.spurious_rate) {
            let word = LEXICON[rng.gen_range(0..LEXICON.len())];
            predictions.push(Prediction {
                quad,
                text: word.to_owned(),
                score: Some(0.0),
                model_id: model_id.to_owned(),
            });
        }
        out.insert(
            image_id.clone(),
            PredictionSet {
                image_id: image_id.clone(),
                model_id: model_id.to_owned(),
                predictions,
            },
        );
    }
    Ok(out)
}

/// Returns the moved box and the mean corner shift normalized to `[0, 1]`.
fn jitter(rng: &mut ChaCha8Rng, quad: &QuadBox, px: f64) -> (QuadBox, f64) {
    if px <= 0.0 {
        return (*quad, 0.0);
    }
    let mut moved = *quad.corners();
    for p in &mut moved {
        p.x += rng.gen_range(-px..=px);
        p.y += rng.gen_range(-px..=px);
    }
    match rounded_quad(moved) {
        Some(q) => {
            let shift: f64 = quad
                .corners()
                .iter()
                .zip(moved.iter())
                .map(|(a, b)| (a.x - b.x).hypot(a.y - b.y))
                .sum::<f64>()
                / (4.0 * px * std::f64::consts::SQRT_2);
            (q, shift.min(1.0))
        }
        None => (*quad, 0.0),
    }
}

fn corrupt(rng: &mut ChaCha8Rng, text: &str, rate: f64, alphabet: &[char]) -> (String, bool) {
    let roll = rng.gen::<f64>();
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() || roll >= rate {
        return (text.to_owned(), false);
    }
    let pos = rng.gen_range(0..chars.len());
    let mut replacement = alphabet[rng.gen_range(0..alphabet.len())];
    if replacement == chars[pos] {
        replacement = alphabet[(alphabet.iter().position(|&c| c == replacement).unwrap_or(0) + 1) % alphabet.len()];
    }
    let mut out = chars;
    out[pos] = replacement;
    (out.into_iter().collect(), true)
}

fn canvas(existing: &[QuadBox]) -> (f64, f64) {
    existing
        .iter()
        .flat_map(|q| q.corners().iter())
        .fold((1280.0f64, 720.0f64), |(w, h), p| (w.max(p.x + 50.0), h.max(p.y + 50.0)))
}

/// Extra boxes that overlap neither the ground truth nor each other.
fn spurious(rng: &mut ChaCha8Rng, existing: &[QuadBox], rate: f64) -> Vec<QuadBox> {
    let mut count = rate.floor() as usize;
    if rng.gen::<f64>() < rate.fract() {
        count += 1;
    }
    let (w, h) = canvas(existing);
    let mut taken: Vec<QuadBox> = existing.to_vec();
    let mut out = Vec::new();
    for _ in 0..count {
        for _attempt in 0..64 {
            let bw = rng.gen_range(40.0..160.0);
            let bh = rng.gen_range(16.0..48.0);
            let x = rng.gen_range(0.0..(w - bw));
            let y = rng.gen_range(0.0..(h - bh));
            let Ok(q) = QuadBox::axis_aligned(round1(x), round1(y), round1(x + bw), round1(y + bh)) else {
                continue;
            };
            let clear = taken
                .iter()
                .all(|t| geometry::intersect(&t.to_polygon(), &q.to_polygon()).is_empty());
            if clear {
                taken.push(q);
                out.push(q);
                break;
            }
        }
    }
    out
}

/// Shape of a generated ground-truth corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthSpec {
    pub images: usize,
    pub words_per_image: usize,
    pub ignored_per_image: usize,
    pub seed: u64,
}

impl Default for GroundTruthSpec {
    fn default() -> Self {
        Self {
            images: 10,
            words_per_image: 12,
            ignored_per_image: 1,
            seed: 0,
        }
    }
}

/// Random rotated word boxes on a 1280×720 canvas. Boxes keep a margin
/// between each other so that small jitter never makes neighbours touch.
/// Image ids are `img_0000`, `img_0001`, ...
pub fn generate_ground_truth(spec: &GroundTruthSpec) -> Corpus {
    const W: f64 = 1280.0;
    const H: f64 = 720.0;
    const MARGIN: f64 = 12.0;
    let mut corpus = Corpus::new();
    for n in 0..spec.images {
        let image_id = format!("img_{n:04}");
        let mut rng = image_rng(spec.seed, &image_id);
        let mut aabbs: Vec<(f64, f64, f64, f64)> = Vec::new();
        let mut records = Vec::new();
        let total = spec.words_per_image + spec.ignored_per_image;
        for k in 0..total {
            for _attempt in 0..200 {
                let bw = rng.gen_range(60.0..200.0);
                let bh = rng.gen_range(20.0..48.0);
                let angle = rng.gen_range(-0.25..0.25);
                let cx = rng.gen_range(120.0..(W - 120.0));
                let cy = rng.gen_range(60.0..(H - 60.0));
                let (s, c) = f64::sin_cos(angle);
                let corners = [(-0.5, 0.5), (0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)].map(|(u, v)| {
                    let (dx, dy) = (u * bw, v * bh);
                    Point::new(cx + dx * c - dy * s, cy + dx * s + dy * c)
                });
                let Some(quad) = rounded_quad(corners) else { continue };
                let bb = quad.to_polygon().bounds().unwrap_or_default();
                let padded = (bb.0 - MARGIN, bb.1 - MARGIN, bb.2 + MARGIN, bb.3 + MARGIN);
                let clash = aabbs
                    .iter()
                    .any(|o| padded.0 < o.2 && o.0 < padded.2 && padded.1 < o.3 && o.1 < padded.3);
                if clash {
                    continue;
                }
                aabbs.push(bb);
                let text = if k < spec.words_per_image {
                    LEXICON[rng.gen_range(0..LEXICON.len())]
                } else {
                    crate::formats::IGNORE_TEXT
                };
                records.push(AnnotationRecord::new(quad, text));
                break;
            }
        }
        corpus.insert(image_id, records);
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Corpus {
        generate_ground_truth(&GroundTruthSpec {
            images: 3,
            words_per_image: 10,
            ignored_per_image: 1,
            seed: 7,
        })
    }

    #[test]
    fn ground_truth_is_disjoint() {
        for recs in corpus().values() {
            assert_eq!(recs.len(), 11);
            for i in 0..recs.len() {
                for j in i + 1..recs.len() {
                    assert_eq!(recs[i].quad.iou(&recs[j].quad), 0.0);
                }
            }
        }
    }

    #[test]
    fn noiseless_profile_copies_ground_truth() {
        let gt = corpus();
        let sets = synthesize_model(&gt, &NoiseProfile::noiseless(1), "m").unwrap();
        for (id, recs) in &gt {
            let cared: Vec<&AnnotationRecord> = recs.iter().filter(|r| !r.ignore).collect();
            let preds = &sets[id].predictions;
            assert_eq!(preds.len(), cared.len());
            for (p, r) in preds.iter().zip(cared) {
                assert_eq!(p.quad, r.quad);
                assert_eq!(p.text, r.text);
                assert_eq!(p.score, Some(1.0));
            }
        }
    }

    #[test]
    fn full_drop_empties_everything() {
        let profile = NoiseProfile {
            drop_rate: 1.0,
            ..NoiseProfile::noiseless(3)
        };
        let sets = synthesize_model(&corpus(), &profile, "m").unwrap();
        assert!(sets.values().all(|s| s.predictions.is_empty()));
    }

    #[test]
    fn complementary_profiles_never_drop_the_same_box() {
        let gt = corpus();
        let base = NoiseProfile {
            drop_rate: 0.3,
            ..NoiseProfile::noiseless(11)
        };
        let profiles = base.complementary(2);
        let a = synthesize_model(&gt, &profiles[0], "a").unwrap();
        let b = synthesize_model(&gt, &profiles[1], "b").unwrap();
        for (id, recs) in &gt {
            for r in recs.iter().filter(|r| !r.ignore) {
                let seen = |s: &PredictionSet| s.predictions.iter().any(|p| p.quad == r.quad);
                assert!(seen(&a[id]) || seen(&b[id]));
            }
        }
    }

    #[test]
    fn spurious_boxes_avoid_ground_truth() {
        let gt = corpus();
        let profile = NoiseProfile {
            spurious_rate: 3.0,
            ..NoiseProfile::noiseless(5)
        };
        let sets = synthesize_model(&gt, &profile, "m").unwrap();
        for (id, recs) in &gt {
            let extra: Vec<&Prediction> = sets[id].predictions.iter().filter(|p| p.score == Some(0.0)).collect();
            assert_eq!(extra.len(), 3);
            for p in extra {
                assert!(recs.iter().all(|r| r.quad.iou(&p.quad) == 0.0));
            }
        }
    }

    #[test]
    fn corruption_lowers_score_and_changes_one_char() {
        let gt = corpus();
        let profile = NoiseProfile {
            char_error_rate: 1.0,
            jitter_px: 2.0,
            ..NoiseProfile::noiseless(9)
        };
        let sets = synthesize_model(&gt, &profile, "m").unwrap();
        for (id, recs) in &gt {
            let cared = recs.iter().filter(|r| !r.ignore);
            for (p, r) in sets[id].predictions.iter().zip(cared) {
                assert_eq!(crate::text::edit_distance(&p.text, &r.text), 1);
                let s = p.score.unwrap();
                assert!((0.0..=0.5).contains(&s));
            }
        }
    }

    #[test]
    fn invalid_profiles() {
        let bad = |p: NoiseProfile| assert!(p.validate().is_err());
        bad(NoiseProfile { drop_rate: 1.5, ..NoiseProfile::noiseless(0) });
        bad(NoiseProfile { jitter_px: -1.0, ..NoiseProfile::noiseless(0) });
        bad(NoiseProfile { spurious_rate: f64::NAN, ..NoiseProfile::noiseless(0) });
        let too_much = NoiseProfile { drop_rate: 0.6, ..NoiseProfile::noiseless(0) };
        bad(too_much.complementary(2)[0]);
    }
}
