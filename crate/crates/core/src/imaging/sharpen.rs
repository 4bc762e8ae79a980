use super::RgbImage;

/// 3×3 sharpening with kernel `[[0,-1,0],[-1,5,-1],[0,-1,0]]`, replicate padding,
/// results clamped to [0,255].
pub fn sharpen(img: &RgbImage) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let px = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        img.get(x, y)
    };
    let mut out = img.clone();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = px(x, y);
            let n = [px(x, y - 1), px(x, y + 1), px(x - 1, y), px(x + 1, y)];
            let mut v = [0u8; 3];
            for ch in 0..3 {
                let s = 5 * i32::from(c[ch]) - n.iter().map(|p| i32::from(p[ch])).sum::<i32>();
                v[ch] = s.clamp(0, 255) as u8;
            }
            out.set(x as usize, y as usize, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_image_is_fixed_point() {
        let img = RgbImage::filled(7, 5, [90, 140, 30]).unwrap();
        assert_eq!(sharpen(&img), img);
    }

    #[test]
    fn bright_pixel_on_black() {
        let mut img = RgbImage::filled(5, 5, [0, 0, 0]).unwrap();
        img.set(2, 2, [200, 100, 60]);
        let s = sharpen(&img);
        // center: 5*200 = 1000 -> 255; 5*100 = 500 -> 255; 5*60 = 300 -> 255
        assert_eq!(s.get(2, 2), [255, 255, 255]);
        // 4-neighbours: 0*5 - 200 = -200 -> 0
        for (x, y) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(s.get(x, y), [0, 0, 0]);
        }
        assert_eq!(s.get(0, 0), [0, 0, 0]);
    }

    #[test]
    fn single_pixel_unchanged() {
        let img = RgbImage::filled(1, 1, [13, 200, 77]).unwrap();
        assert_eq!(sharpen(&img), img);
    }
}
