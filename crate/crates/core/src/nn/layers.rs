//! Per-sample layer kernels. Activations are HWC; convolution weights are laid
//! out `[out][ky][kx][in]`, dense weights `[out][in]`.

use super::LayerSpec;

/// `c = a · b + beta · c` with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(a.len() > (m - 1) * rsa + k.saturating_sub(1) * csa || k == 0);
    assert!(b.len() > k.saturating_sub(1) * rsb + (n - 1) * csb || k == 0);
    assert!(c.len() > (m - 1) * rsc + (n - 1) * csc);
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

struct ConvGeom {
    side: usize,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    dilation: usize,
}

impl ConvGeom {
    fn of(spec: &LayerSpec) -> Self {
        match *spec {
            LayerSpec::Conv {
                side,
                in_ch,
                out_ch,
                kernel,
                dilation,
            } => ConvGeom {
                side,
                in_ch,
                out_ch,
                kernel,
                dilation,
            },
            _ => unreachable!("not a convolution"),
        }
    }

    fn patch_len(&self) -> usize {
        self.kernel * self.kernel * self.in_ch
    }

    fn pad(&self) -> isize {
        (self.dilation * (self.kernel - 1) / 2) as isize
    }

    /// Source row/col for output position `o` and tap `t`, if inside the image.
    #[inline]
    fn src(&self, o: usize, t: usize) -> Option<usize> {
        let p = o as isize + (t * self.dilation) as isize - self.pad();
        (p >= 0 && p < self.side as isize).then_some(p as usize)
    }
}

fn im2col(g: &ConvGeom, input: &[f64], patches: &mut [f64]) {
    let k = g.patch_len();
    for y in 0..g.side {
        for x in 0..g.side {
            let row = &mut patches[(y * g.side + x) * k..(y * g.side + x + 1) * k];
            for ky in 0..g.kernel {
                for kx in 0..g.kernel {
                    let dst = &mut row[(ky * g.kernel + kx) * g.in_ch..(ky * g.kernel + kx + 1) * g.in_ch];
                    match (g.src(y, ky), g.src(x, kx)) {
                        (Some(sy), Some(sx)) => {
                            let s = (sy * g.side + sx) * g.in_ch;
                            dst.copy_from_slice(&input[s..s + g.in_ch]);
                        }
                        _ => dst.fill(0.0),
                    }
                }
            }
        }
    }
}

fn col2im_add(g: &ConvGeom, dpatches: &[f64], dinput: &mut [f64]) {
    let k = g.patch_len();
    dinput.fill(0.0);
    for y in 0..g.side {
        for x in 0..g.side {
            let row = &dpatches[(y * g.side + x) * k..(y * g.side + x + 1) * k];
            for ky in 0..g.kernel {
                let Some(sy) = g.src(y, ky) else { continue };
                for kx in 0..g.kernel {
                    let Some(sx) = g.src(x, kx) else { continue };
                    let s = (sy * g.side + sx) * g.in_ch;
                    let src = &row[(ky * g.kernel + kx) * g.in_ch..(ky * g.kernel + kx + 1) * g.in_ch];
                    for (d, v) in dinput[s..s + g.in_ch].iter_mut().zip(src) {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// Same-padded (dilated) convolution followed by ReLU.
pub(crate) fn conv_forward(
    spec: &LayerSpec,
    w: &[f64],
    b: &[f64],
    input: &[f64],
    out: &mut [f64],
    patches: &mut [f64],
) {
    let g = ConvGeom::of(spec);
    let hw = g.side * g.side;
    let k = g.patch_len();
    im2col(&g, input, &mut patches[..hw * k]);
    for row in out.chunks_exact_mut(g.out_ch) {
        row.copy_from_slice(b);
    }
    // out[hw x O] += patches[hw x K] · Wᵀ[K x O]
    gemm(hw, k, g.out_ch, patches, (k, 1), w, (1, k), 1.0, out, (g.out_ch, 1));
    for v in out.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Backward through ReLU and the convolution. `dout` is overwritten with the
/// pre-activation gradient. `dinput` is skipped when `None` (first layer).
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    spec: &LayerSpec,
    w: &[f64],
    input: &[f64],
    output: &[f64],
    dout: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
    dinput: Option<&mut [f64]>,
    patches: &mut [f64],
    dpatches: &mut [f64],
) {
    let g = ConvGeom::of(spec);
    let hw = g.side * g.side;
    let k = g.patch_len();
    for (d, &o) in dout.iter_mut().zip(output) {
        if o <= 0.0 {
            *d = 0.0;
        }
    }
    for row in dout.chunks_exact(g.out_ch) {
        for (acc, d) in gb.iter_mut().zip(row) {
            *acc += d;
        }
    }
    im2col(&g, input, &mut patches[..hw * k]);
    // gw[O x K] += doutᵀ[O x hw] · patches[hw x K]
    gemm(g.out_ch, hw, k, dout, (1, g.out_ch), patches, (k, 1), 1.0, gw, (k, 1));
    if let Some(dinput) = dinput {
        // dpatches[hw x K] = dout[hw x O] · W[O x K]
        gemm(hw, g.out_ch, k, dout, (g.out_ch, 1), w, (k, 1), 0.0, &mut dpatches[..hw * k], (k, 1));
        col2im_add(&g, dpatches, dinput);
    }
}

/// 2×2 stride-2 max-pool; records the flat input index of each maximum.
pub(crate) fn pool_forward(spec: &LayerSpec, input: &[f64], out: &mut [f64], argmax: &mut [u32]) {
    let LayerSpec::MaxPool { side, channels } = *spec else {
        unreachable!("not a pool")
    };
    let os = side / 2;
    for oy in 0..os {
        for ox in 0..os {
            for c in 0..channels {
                let mut best = f64::NEG_INFINITY;
                let mut at = 0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let i = ((2 * oy + dy) * side + 2 * ox + dx) * channels + c;
                        if input[i] > best {
                            best = input[i];
                            at = i;
                        }
                    }
                }
                let o = (oy * os + ox) * channels + c;
                out[o] = best;
                argmax[o] = at as u32;
            }
        }
    }
}

pub(crate) fn pool_backward(dout: &[f64], argmax: &[u32], dinput: &mut [f64]) {
    dinput.fill(0.0);
    for (d, &i) in dout.iter().zip(argmax) {
        dinput[i as usize] += d;
    }
}

pub(crate) fn dense_forward(spec: &LayerSpec, w: &[f64], b: &[f64], input: &[f64], out: &mut [f64]) {
    let LayerSpec::Dense { inputs, relu, .. } = *spec else {
        unreachable!("not dense")
    };
    for ((o, row), &bias) in out.iter_mut().zip(w.chunks_exact(inputs)).zip(b) {
        let z = bias + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>();
        *o = if relu && z < 0.0 { 0.0 } else { z };
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn dense_backward(
    spec: &LayerSpec,
    w: &[f64],
    input: &[f64],
    output: &[f64],
    dout: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
    dinput: Option<&mut [f64]>,
) {
    let LayerSpec::Dense { inputs, relu, .. } = *spec else {
        unreachable!("not dense")
    };
    if relu {
        for (d, &o) in dout.iter_mut().zip(output) {
            if o <= 0.0 {
                *d = 0.0;
            }
        }
    }
    for ((grow, &d), gbi) in gw.chunks_exact_mut(inputs).zip(dout.iter()).zip(gb.iter_mut()) {
        *gbi += d;
        if d != 0.0 {
            for (g, x) in grow.iter_mut().zip(input) {
                *g += d * x;
            }
        }
    }
    if let Some(dinput) = dinput {
        dinput.fill(0.0);
        for (row, &d) in w.chunks_exact(inputs).zip(dout.iter()) {
            if d != 0.0 {
                for (di, a) in dinput.iter_mut().zip(row) {
                    *di += d * a;
                }
            }
        }
    }
}
