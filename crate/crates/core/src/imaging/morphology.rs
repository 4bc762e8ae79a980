use super::BinaryMask;

/// Square-element erosion; pixels outside the image count as 0.
pub fn erode(mask: &BinaryMask, side: usize) -> BinaryMask {
    let rows = pass(mask, side, Axis::Row, true);
    pass(&rows, side, Axis::Col, true)
}

/// Square-element dilation.
pub fn dilate(mask: &BinaryMask, side: usize) -> BinaryMask {
    let rows = pass(mask, side, Axis::Row, false);
    pass(&rows, side, Axis::Col, false)
}

/// Erosion followed by dilation with the same `side`×`side` square.
pub fn morphology_open(mask: &BinaryMask, side: usize) -> BinaryMask {
    assert!(side % 2 == 1, "kernel side must be odd");
    dilate(&erode(mask, side), side)
}

#[derive(Clone, Copy)]
enum Axis {
    Row,
    Col,
}

// The square element is separable: a 1-D pass per axis, each tracking how many
// set bits sit in the sliding window.
fn pass(mask: &BinaryMask, side: usize, axis: Axis, erode: bool) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let r = side / 2;
    let mut out = BinaryMask::new(w, h);
    let (lines, len) = match axis {
        Axis::Row => (h, w),
        Axis::Col => (w, h),
    };
    let at = |line: usize, i: usize| match axis {
        Axis::Row => (i, line),
        Axis::Col => (line, i),
    };
    for line in 0..lines {
        // prefix sums over the line
        let mut prefix = alloc::vec![0usize; len + 1];
        for i in 0..len {
            let (x, y) = at(line, i);
            prefix[i + 1] = prefix[i] + usize::from(mask.get(x, y));
        }
        for i in 0..len {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(len - 1);
            let ones = prefix[hi + 1] - prefix[lo];
            let v = if erode {
                // any window cell out of bounds counts as a zero
                i >= r && i + r < len && ones == side
            } else {
                ones > 0
            };
            let (x, y) = at(line, i);
            out.set(x, y, v);
        }
    }
    out
}
