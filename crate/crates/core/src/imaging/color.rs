use alloc::vec::Vec;

use super::{BinaryMask, HsvImage, RgbImage, SegmentationParams};

/// Converts one RGB pixel to (H in [0,180), S, V).
pub fn pixel_to_hsv([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let s = if max == 0.0 { 0.0 } else { 255.0 * delta / max };
    let deg = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (g - b) / delta
    } else if max == g {
        120.0 + 60.0 * (b - r) / delta
    } else {
        240.0 + 60.0 * (r - g) / delta
    };
    let deg = if deg < 0.0 { deg + 360.0 } else { deg };
    let mut h = libm::round(deg / 2.0) as u32;
    if h >= 180 {
        h -= 180;
    }
    [h as u8, libm::round(s) as u8, max as u8]
}

pub fn rgb_to_hsv(img: &RgbImage) -> HsvImage {
    HsvImage {
        width: img.width(),
        height: img.height(),
        pixels: img.pixels().iter().map(|&p| pixel_to_hsv(p)).collect(),
    }
}

/// Inverse of [`pixel_to_hsv`] on the same 8-bit scale.
pub fn hsv_to_rgb([h, s, v]: [u8; 3]) -> [u8; 3] {
    let v = f64::from(v);
    let s = f64::from(s) / 255.0;
    let deg = f64::from(h) * 2.0;
    let c = v * s;
    let hp = deg / 60.0;
    let x = c * (1.0 - libm::fabs(libm::fmod(hp, 2.0) - 1.0));
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |u: f64| libm::round(u + m).clamp(0.0, 255.0) as u8;
    [q(r1), q(g1), q(b1)]
}

/// Marks pixels whose H, S and V all fall inside the configured `(lo, hi]` ranges.
pub fn mask_vegetation(hsv: &HsvImage, params: &SegmentationParams) -> BinaryMask {
    let bits: Vec<bool> = hsv
        .pixels
        .iter()
        .map(|&[h, s, v]| {
            params.h_range.contains(h) && params.s_range.contains(s) && params.v_range.contains(v)
        })
        .collect();
    BinaryMask::from_bits(hsv.width, hsv.height, bits).expect("dimensions preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::ChannelRange;
    use proptest::prelude::*;

    fn one(h: u8, s: u8, v: u8) -> HsvImage {
        HsvImage {
            width: 1,
            height: 1,
            pixels: alloc::vec![[h, s, v]],
        }
    }

    #[test]
    fn known_conversions() {
        assert_eq!(pixel_to_hsv([0, 0, 0]), [0, 0, 0]);
        assert_eq!(pixel_to_hsv([0, 255, 0]), [60, 255, 255]);
        let gray = pixel_to_hsv([128, 128, 128]);
        assert_eq!((gray[1], gray[2]), (0, 128));
        assert_eq!(pixel_to_hsv([255, 0, 0]), [0, 255, 255]);
        assert_eq!(pixel_to_hsv([0, 0, 255]), [120, 255, 255]);
    }

    #[test]
    fn hue_stays_below_180() {
        // 359 degrees rounds up to 180 and must wrap.
        let hsv = pixel_to_hsv([255, 0, 4]);
        assert!(hsv[0] < 180, "{hsv:?}");
    }

    #[test]
    fn mask_endpoints() {
        let p = SegmentationParams::default();
        assert!(mask_vegetation(&one(60, 200, 200), &p).get(0, 0));
        assert!(!mask_vegetation(&one(45, 200, 200), &p).get(0, 0));
        assert!(mask_vegetation(&one(95, 200, 200), &p).get(0, 0));
        assert!(!mask_vegetation(&one(96, 200, 200), &p).get(0, 0));
        assert!(!mask_vegetation(&one(60, 55, 200), &p).get(0, 0));
        assert!(!mask_vegetation(&one(60, 200, 55), &p).get(0, 0));
        assert!(mask_vegetation(&one(60, 255, 255), &p).get(0, 0));
    }

    proptest! {
        #[test]
        fn hsv_roundtrip_within_quantization(r in any::<u8>(), g in any::<u8>(), b in any::<u8>()) {
            let hsv = pixel_to_hsv([r, g, b]);
            prop_assert!(hsv[0] < 180);
            let back = hsv_to_rgb(hsv);
            // Hue is stored in 2-degree steps, so the chroma term contributes up to
            // (max-min)/60 on top of the rounding of S and V.
            let max = r.max(g).max(b) as f64;
            let min = r.min(g).min(b) as f64;
            let tol = 2.0 + (max - min) / 60.0;
            for (a, c) in [r, g, b].iter().zip(back.iter()) {
                prop_assert!((f64::from(*a) - f64::from(*c)).abs() <= tol,
                    "rgb {:?} -> hsv {:?} -> {:?}", [r, g, b], hsv, back);
            }
        }

        #[test]
        fn mask_monotone_and_idempotent(
            pixels in proptest::collection::vec(any::<[u8; 3]>(), 1..64),
            widen in 0i32..40,
        ) {
            let n = pixels.len();
            let hsv = HsvImage { width: n, height: 1, pixels: pixels.iter().map(|p| [p[0] % 180, p[1], p[2]]).collect() };
            let p = SegmentationParams::default();
            let mut wide = p;
            wide.h_range = ChannelRange::new(p.h_range.lo - widen, p.h_range.hi + widen);
            wide.s_range = ChannelRange::new(p.s_range.lo - widen, p.s_range.hi);
            let narrow_mask = mask_vegetation(&hsv, &p);
            let wide_mask = mask_vegetation(&hsv, &wide);
            prop_assert!(narrow_mask.is_subset_of(&wide_mask));
            prop_assert_eq!(&narrow_mask, &mask_vegetation(&hsv, &p));
        }
    }
}
