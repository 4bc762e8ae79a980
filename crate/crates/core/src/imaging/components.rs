use alloc::vec;
use alloc::vec::Vec;

use super::{BBox, BinaryMask};

/// A maximal 8-connected set of foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Row-major pixel indices (`y * width + x`), sorted ascending.
    pub pixels: Vec<usize>,
    pub bbox: BBox,
}

/// Labels 8-connected components. Components are ordered by their first pixel
/// in row-major scan order.
pub fn find_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        while let Some(i) = stack.pop() {
            pixels.push(i);
            let (x, y) = (i % w, i / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        pixels.sort_unstable();
        out.push(Component {
            pixels,
            bbox: BBox {
                x: x0,
                y: y0,
                w: x1 - x0 + 1,
                h: y1 - y0 + 1,
            },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paint(m: &mut BinaryMask, x0: usize, y0: usize, bw: usize, bh: usize) {
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                m.set(x, y, true);
            }
        }
    }

    // Independent oracle: repeated relaxation of the minimum label over the 8-neighbourhood.
    fn relaxation_labels(m: &BinaryMask) -> Vec<Option<usize>> {
        let (w, h) = (m.width(), m.height());
        let mut label: Vec<Option<usize>> =
            (0..w * h).map(|i| if m.bits()[i] { Some(i) } else { None }).collect();
        loop {
            let mut changed = false;
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let i = y as usize * w + x as usize;
                    let Some(mut best) = label[i] else { continue };
                    for dy in -1..=1isize {
                        for dx in -1..=1isize {
                            let (nx, ny) = (x + dx, y + dy);
                            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                                continue;
                            }
                            if let Some(l) = label[ny as usize * w + nx as usize] {
                                best = best.min(l);
                            }
                        }
                    }
                    if Some(best) != label[i] {
                        label[i] = Some(best);
                        changed = true;
                    }
                }
            }
            if !changed {
                return label;
            }
        }
    }

    #[test]
    fn two_disjoint_blocks() {
        let mut m = BinaryMask::new(20, 10);
        paint(&mut m, 1, 1, 5, 5);
        paint(&mut m, 10, 3, 5, 5);
        let comps = find_components(&m);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].bbox, BBox { x: 1, y: 1, w: 5, h: 5 });
        assert_eq!(comps[1].bbox, BBox { x: 10, y: 3, w: 5, h: 5 });
        assert_eq!(comps[0].pixels.len(), 25);
    }

    #[test]
    fn empty_mask() {
        assert!(find_components(&BinaryMask::new(4, 4)).is_empty());
    }

    #[test]
    fn diagonal_touch_joins() {
        let mut m = BinaryMask::new(10, 10);
        paint(&mut m, 0, 0, 3, 3);
        paint(&mut m, 3, 3, 3, 3);
        let comps = find_components(&m);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].bbox, BBox { x: 0, y: 0, w: 6, h: 6 });
        let labels = relaxation_labels(&m);
        assert!(labels.iter().flatten().all(|&l| l == 0));
    }

    proptest! {
        #[test]
        fn partitions_and_matches_oracle(w in 1usize..=32, h in 1usize..=32, seed in any::<u64>()) {
            let bits: Vec<bool> = (0..w * h)
                .map(|i| crate::util::mix_seed(seed, i as u64) % 5 < 2)
                .collect();
            let m = BinaryMask::from_bits(w, h, bits.clone()).unwrap();
            let comps = find_components(&m);
            let oracle = relaxation_labels(&m);

            let mut owner = vec![usize::MAX; w * h];
            for (ci, c) in comps.iter().enumerate() {
                for &p in &c.pixels {
                    prop_assert_eq!(owner[p], usize::MAX, "pixel in two components");
                    owner[p] = ci;
                }
                // the oracle label of a component is its smallest pixel index
                for &p in &c.pixels {
                    prop_assert_eq!(oracle[p], Some(c.pixels[0]));
                }
            }
            for i in 0..w * h {
                prop_assert_eq!(bits[i], owner[i] != usize::MAX);
            }
            let firsts: Vec<usize> = comps.iter().map(|c| c.pixels[0]).collect();
            let mut sorted = firsts.clone();
            sorted.sort_unstable();
            prop_assert_eq!(firsts, sorted);
        }
    }
}
