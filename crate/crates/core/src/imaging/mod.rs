//! Plant extraction from field photographs.
//!
//! The pipeline is `rgb_to_hsv` → `mask_vegetation` → `morphology_open` →
//! `find_components` → per-component size/shape filtering, sharpening and
//! masking, wired together by [`segment_field_image`].

mod color;
mod components;
mod morphology;
mod resize;
mod segment;
mod sharpen;

pub use color::{hsv_to_rgb, mask_vegetation, pixel_to_hsv, rgb_to_hsv};
pub use components::{find_components, Component};
pub use morphology::{dilate, erode, morphology_open};
pub use resize::{resize_bilinear, to_unit_tensor};
pub use segment::{segment_field_image, PlantSegment};
pub use sharpen::sharpen;

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(alloc::format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{} pixels", width * height),
                got: alloc::format!("{} pixels", pixels.len()),
            });
        }
        Ok(Self { width, height, pixels })
    }

    /// Image filled with one color.
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, px: [u8; 3]) {
        self.pixels[y * self.width + x] = px;
    }

    /// Copies the rectangle `bbox` out of the image.
    pub fn crop(&self, bbox: BBox) -> RgbImage {
        let mut pixels = Vec::with_capacity(bbox.w * bbox.h);
        for y in bbox.y..bbox.y + bbox.h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + bbox.x..row + bbox.x + bbox.w]);
        }
        RgbImage {
            width: bbox.w,
            height: bbox.h,
            pixels,
        }
    }

    pub fn into_pixels(self) -> Vec<[u8; 3]> {
        self.pixels
    }
}

/// HSV image on the 8-bit convention: H in [0,180), S and V in [0,255].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HsvImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

/// One bit per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{} bits", width * height),
                got: alloc::format!("{} bits", bits.len()),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True if every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BBox {
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// min(w,h) / max(w,h); 200x100 gives 0.5.
    pub fn shape_ratio(&self) -> f64 {
        let (lo, hi) = if self.w < self.h {
            (self.w, self.h)
        } else {
            (self.h, self.w)
        };
        if hi == 0 {
            0.0
        } else {
            lo as f64 / hi as f64
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        let inter = if x1 > x0 && y1 > y0 { (x1 - x0) * (y1 - y0) } else { 0 };
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Half-open-left interval `(lo, hi]` over channel values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChannelRange {
    pub lo: i32,
    pub hi: i32,
}

impl ChannelRange {
    pub const fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    #[inline]
    pub fn contains(&self, v: u8) -> bool {
        let v = i32::from(v);
        v > self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SegmentationParams {
    pub h_range: ChannelRange,
    pub s_range: ChannelRange,
    pub v_range: ChannelRange,
    /// Minimum bounding-box area as a fraction of the image area.
    pub t_size: f64,
    /// Minimum min/max side ratio of the bounding box.
    pub t_ratio: f64,
    pub open_kernel_side: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            h_range: ChannelRange::new(45, 95),
            s_range: ChannelRange::new(55, 255),
            v_range: ChannelRange::new(55, 255),
            t_size: 0.001,
            t_ratio: 0.2,
            open_kernel_side: 5,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("h", self.h_range), ("s", self.s_range), ("v", self.v_range)] {
            if r.lo >= r.hi {
                return Err(Error::InvalidParam(alloc::format!(
                    "{name}_range must satisfy lo < hi, got ({}, {}]",
                    r.lo,
                    r.hi
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.t_size) {
            return Err(Error::InvalidParam(alloc::format!(
                "t_size must be in [0,1], got {}",
                self.t_size
            )));
        }
        if !(0.0..=1.0).contains(&self.t_ratio) {
            return Err(Error::InvalidParam(alloc::format!(
                "t_ratio must be in [0,1], got {}",
                self.t_ratio
            )));
        }
        if self.open_kernel_side == 0 || self.open_kernel_side % 2 == 0 {
            return Err(Error::InvalidParam(alloc::format!(
                "open_kernel_side must be odd and >= 1, got {}",
                self.open_kernel_side
            )));
        }
        Ok(())
    }
}
