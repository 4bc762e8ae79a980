//! Synthetic stand-ins for field photographs and labeled plant crops.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use weednet_core::dataset::Group;
use weednet_core::imaging::{hsv_to_rgb, BBox, RgbImage};
use weednet_core::mix_seed;

/// Background soil color (8-bit HSV), outside the default vegetation ranges.
pub const SOIL_HSV: [u8; 3] = [20, 150, 120];
/// Leaf color (8-bit HSV), inside the default vegetation ranges.
pub const LEAF_HSV: [u8; 3] = [70, 200, 200];

pub const PLANT_SIDE: usize = 64;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Disk,
    Triangle,
    Cross,
    Ring,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Disk, Shape::Triangle, Shape::Cross, Shape::Ring];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Triangle => "triangle",
            Shape::Cross => "cross",
            Shape::Ring => "ring",
        }
    }

    pub fn group(self) -> Group {
        match self {
            Shape::Disk | Shape::Triangle => Group::Crop,
            Shape::Cross | Shape::Ring => Group::Weed,
        }
    }

    /// The shape of the other group overlaid on ambiguous renders.
    pub fn partner(self) -> Shape {
        match self {
            Shape::Disk => Shape::Cross,
            Shape::Cross => Shape::Disk,
            Shape::Triangle => Shape::Ring,
            Shape::Ring => Shape::Triangle,
        }
    }

    /// Whether the point `(u, v)`, in shape-local coordinates scaled so the
    /// nominal radius is 1, is covered.
    fn covers(self, u: f64, v: f64) -> bool {
        let r2 = u * u + v * v;
        match self {
            Shape::Disk => r2 <= 0.82 * 0.82,
            Shape::Ring => r2 <= 0.9 * 0.9 && r2 >= 0.55 * 0.55,
            Shape::Cross => (u.abs() <= 0.22 && v.abs() <= 0.95) || (v.abs() <= 0.22 && u.abs() <= 0.95),
            Shape::Triangle => v >= -0.5 && v <= 1.0 - 3f64.sqrt() * u.abs(),
        }
    }
}

/// Renders one `PLANT_SIDE`² plant image: position jitter ±6 px, random
/// rotation and scale, leaf tint variation and 5% salt noise. When `ambiguous`
/// is set, the partner shape is drawn on top as well.
pub fn render_plant(shape: Shape, ambiguous: bool, r: &mut impl Rng) -> RgbImage {
    let side = PLANT_SIDE;
    let soil = hsv_to_rgb([SOIL_HSV[0], SOIL_HSV[1], r.gen_range(100..=140)]);
    let leaf = hsv_to_rgb([r.gen_range(62..=78), r.gen_range(170..=230), r.gen_range(170..=230)]);
    let mut img = RgbImage::filled(side, side, soil).expect("non-empty");
    let mut draw = |s: Shape, r: &mut dyn rand::RngCore| {
        let cx = 31.5 + r.gen_range(-6.0..=6.0);
        let cy = 31.5 + r.gen_range(-6.0..=6.0);
        let radius = 17.0 * r.gen_range(0.9..=1.1);
        let theta = r.gen_range(0.0..2.0 * PI);
        let (sin, cos) = theta.sin_cos();
        for y in 0..side {
            for x in 0..side {
                let dx = (x as f64 - cx) / radius;
                let dy = (y as f64 - cy) / radius;
                let u = cos * dx + sin * dy;
                let v = -sin * dx + cos * dy;
                if s.covers(u, v) {
                    img.set(x, y, leaf);
                }
            }
        }
    };
    draw(shape, r);
    if ambiguous {
        draw(shape.partner(), r);
    }
    for px in img.pixels_mut() {
        if r.gen_bool(0.05) {
            *px = [r.gen(), r.gen(), r.gen()];
        }
    }
    img
}

/// One generated plant: its shape, whether it was rendered ambiguous, and the
/// image.
#[derive(Debug, Clone)]
pub struct PlantSample {
    pub shape: Shape,
    pub ambiguous: bool,
    pub image: RgbImage,
}

/// Generates `n_per` images of every shape, interleaved by shape. Each image
/// is rendered ambiguous with probability `ambiguity`. Image `i` depends only
/// on `(seed, i)`.
pub fn gen_plants(n_per: usize, ambiguity: f64, seed: u64) -> Vec<PlantSample> {
    (0..n_per * Shape::ALL.len())
        .map(|i| {
            let shape = Shape::ALL[i % Shape::ALL.len()];
            let mut r = rng(seed, i as u64);
            let ambiguous = r.gen_bool(ambiguity.clamp(0.0, 1.0));
            let image = render_plant(shape, ambiguous, &mut r);
            PlantSample { shape, ambiguous, image }
        })
        .collect()
}

/// What was placed in a synthetic field image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldTruth {
    /// Plants; each should be recovered as one segment.
    pub blobs: Vec<BBox>,
    /// Green squares too small to pass the size filter.
    pub specks: Vec<BBox>,
    /// Green strips too thin to pass the shape-ratio filter.
    pub bands: Vec<BBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub width: usize,
    pub height: usize,
    pub blobs: usize,
    pub specks: usize,
    pub bands: usize,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec { width: 400, height: 300, blobs: 3, specks: 0, bands: 0 }
    }
}

fn overlaps(a: &BBox, b: &BBox, margin: usize) -> bool {
    a.x < b.x + b.w + margin && b.x < a.x + a.w + margin && a.y < b.y + b.h + margin && b.y < a.y + a.h + margin
}

/// Places non-overlapping axis-aligned leaf ellipses, 6×6 specks and 6×100
/// bands on a soil background. Placement is by rejection sampling; objects
/// that cannot be placed after many attempts are skipped, so the truth lists
/// are authoritative.
pub fn gen_field(spec: FieldSpec, seed: u64) -> (RgbImage, FieldTruth) {
    let soil = hsv_to_rgb(SOIL_HSV);
    let leaf = hsv_to_rgb(LEAF_HSV);
    let mut img = RgbImage::filled(spec.width, spec.height, soil).expect("non-empty field");
    let mut r = rng(seed, 0xf1e1d);
    let mut placed: Vec<BBox> = Vec::new();
    let mut truth = FieldTruth::default();
    let (w, h) = (spec.width, spec.height);

    let try_place = |bw: usize, bh: usize, r: &mut ChaCha8Rng, placed: &mut Vec<BBox>| -> Option<BBox> {
        if bw + 4 > w || bh + 4 > h {
            return None;
        }
        for _ in 0..500 {
            let b = BBox { x: r.gen_range(2..=w - bw - 2), y: r.gen_range(2..=h - bh - 2), w: bw, h: bh };
            if placed.iter().all(|p| !overlaps(p, &b, 8)) {
                placed.push(b);
                return Some(b);
            }
        }
        None
    };

    for _ in 0..spec.blobs {
        let rx = r.gen_range(14..=32usize);
        let ry = r.gen_range((rx * 6 / 10).max(14)..=(rx * 14 / 10).min(36));
        let Some(slot) = try_place(2 * rx + 1, 2 * ry + 1, &mut r, &mut placed) else { continue };
        let (cx, cy) = ((slot.x + rx) as f64, (slot.y + ry) as f64);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in slot.y..slot.y + slot.h {
            for x in slot.x..slot.x + slot.w {
                let dx = (x as f64 - cx) / rx as f64;
                let dy = (y as f64 - cy) / ry as f64;
                if dx * dx + dy * dy <= 1.0 {
                    img.set(x, y, leaf);
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        truth.blobs.push(BBox { x: x0, y: y0, w: x1 - x0 + 1, h: y1 - y0 + 1 });
    }
    let mut fill = |b: BBox| {
        for y in b.y..b.y + b.h {
            for x in b.x..b.x + b.w {
                img.set(x, y, leaf);
            }
        }
    };
    for _ in 0..spec.specks {
        if let Some(b) = try_place(6, 6, &mut r, &mut placed) {
            fill(b);
            truth.specks.push(b);
        }
    }
    for i in 0..spec.bands {
        let (bw, bh) = if i % 2 == 0 { (6, 100) } else { (100, 6) };
        if let Some(b) = try_place(bw, bh, &mut r, &mut placed) {
            fill(b);
            truth.bands.push(b);
        }
    }
    (img, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use weednet_core::imaging::{mask_vegetation, morphology_open, rgb_to_hsv, SegmentationParams};

    /// First two Hu invariants of the opened vegetation mask.
    fn hu12(img: &RgbImage) -> [f64; 2] {
        let params = SegmentationParams::default();
        let mask = morphology_open(&mask_vegetation(&rgb_to_hsv(img), &params), 3);
        let (w, h) = (mask.width(), mask.height());
        let mut m00 = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) {
                    m00 += 1.0;
                    sx += x as f64;
                    sy += y as f64;
                }
            }
        }
        let (cx, cy) = (sx / m00, sy / m00);
        let (mut mu20, mut mu02, mut mu11) = (0.0, 0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) {
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    mu20 += dx * dx;
                    mu02 += dy * dy;
                    mu11 += dx * dy;
                }
            }
        }
        let n = m00 * m00;
        let (n20, n02, n11) = (mu20 / n, mu02 / n, mu11 / n);
        [n20 + n02, (n20 - n02).powi(2) + 4.0 * n11 * n11]
    }

    #[test]
    fn generation_is_seeded() {
        let a = gen_plants(2, 0.5, 11);
        let b = gen_plants(2, 0.5, 11);
        assert_eq!(a.len(), 8);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.image, y.image);
            assert_eq!(x.ambiguous, y.ambiguous);
        }
        assert_ne!(a[0].image, gen_plants(2, 0.5, 12)[0].image);
        let (f1, t1) = gen_field(FieldSpec::default(), 5);
        let (f2, t2) = gen_field(FieldSpec::default(), 5);
        assert_eq!((f1, t1), (f2, t2));
    }

    #[test]
    fn shapes_separate_in_moment_space() {
        let per = 40;
        let samples = gen_plants(per, 0.0, 3);
        let mut feats: Vec<Vec<[f64; 2]>> = vec![Vec::new(); 4];
        for (i, s) in samples.iter().enumerate() {
            feats[i % 4].push(hu12(&s.image));
        }
        let stats: Vec<([f64; 2], [f64; 2])> = feats
            .iter()
            .map(|f| {
                let mut mean = [0.0; 2];
                let mut sd = [0.0; 2];
                for k in 0..2 {
                    mean[k] = f.iter().map(|v| v[k]).sum::<f64>() / f.len() as f64;
                    sd[k] = (f.iter().map(|v| (v[k] - mean[k]).powi(2)).sum::<f64>() / f.len() as f64).sqrt();
                }
                (mean, sd)
            })
            .collect();
        for a in 0..4 {
            for b in a + 1..4 {
                let sep = (0..2)
                    .map(|k| (stats[a].0[k] - stats[b].0[k]).abs() / (stats[a].1[k] + stats[b].1[k]).max(1e-12))
                    .fold(0.0, f64::max);
                assert!(sep > 2.0, "{} vs {}: separation {sep:.2} ({stats:?})", Shape::ALL[a].name(), Shape::ALL[b].name());
            }
        }
    }

    #[test]
    fn colors_sit_on_the_right_side_of_the_mask() {
        let p = SegmentationParams::default();
        let leaf = weednet_core::imaging::pixel_to_hsv(hsv_to_rgb(LEAF_HSV));
        let soil = weednet_core::imaging::pixel_to_hsv(hsv_to_rgb(SOIL_HSV));
        assert!(p.h_range.contains(leaf[0]) && p.s_range.contains(leaf[1]) && p.v_range.contains(leaf[2]));
        assert!(!p.h_range.contains(soil[0]));
    }

    #[test]
    fn field_objects_are_disjoint() {
        let spec = FieldSpec { blobs: 5, specks: 3, bands: 2, ..Default::default() };
        let (_, t) = gen_field(spec, 1);
        assert_eq!((t.blobs.len(), t.specks.len(), t.bands.len()), (5, 3, 2));
        let all: Vec<_> = t.blobs.iter().chain(&t.specks).chain(&t.bands).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert!(!overlaps(all[i], all[j], 2));
            }
        }
    }
}
