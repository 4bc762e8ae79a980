use alloc::vec::Vec;

use super::RgbImage;

/// Bilinear resize with pixel-center alignment, returning interleaved RGB as
/// `f64` in the source value range (0 to 255).
pub fn resize_bilinear(img: &RgbImage, out_w: usize, out_h: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let mut out = Vec::with_capacity(out_w * out_h * 3);
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            let (a, b, c, d) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
            for ch in 0..3 {
                let top = f64::from(a[ch]) * (1.0 - tx) + f64::from(b[ch]) * tx;
                let bot = f64::from(c[ch]) * (1.0 - tx) + f64::from(d[ch]) * tx;
                out.push(top * (1.0 - ty) + bot * ty);
            }
        }
    }
    out
}

/// Resizes to `side`×`side` and scales to [0,1]: the network input layout (HWC).
pub fn to_unit_tensor(img: &RgbImage, side: usize) -> Vec<f64> {
    let mut v = resize_bilinear(img, side, side);
    for x in &mut v {
        *x /= 255.0;
    }
    v
}
