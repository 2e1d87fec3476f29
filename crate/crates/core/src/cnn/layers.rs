//! Per-sample layer kernels. Activations are channel-last (`[y][x][c]`),
//! convolution weights are `[ky][kx][in_c][out_c]` and dense weights
//! `[in][out]`. Backward kernels accumulate into the parameter gradients.

/// Dot product with four independent accumulators (fixed summation order).
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub h: usize,
    pub w: usize,
    pub in_c: usize,
    pub out_c: usize,
}

impl ConvShape {
    pub fn weight_len(&self) -> usize {
        9 * self.in_c * self.out_c
    }
}

/// Taps of a 3×3 window around `(y, x)` that fall inside the image
/// (zero padding of 1): yields `(tap index, source pixel index)`.
#[inline]
fn taps(y: usize, x: usize, h: usize, w: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..3usize).flat_map(move |ky| {
        (0..3usize).filter_map(move |kx| {
            let sy = (y + ky).checked_sub(1)?;
            let sx = (x + kx).checked_sub(1)?;
            (sy < h && sx < w).then_some((ky * 3 + kx, sy * w + sx))
        })
    })
}

/// 3×3 convolution, stride 1, zero padding 1 (no activation).
pub fn conv3x3_forward(s: ConvShape, input: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let (ci, co) = (s.in_c, s.out_c);
    for y in 0..s.h {
        for x in 0..s.w {
            let o = &mut out[(y * s.w + x) * co..(y * s.w + x + 1) * co];
            o.copy_from_slice(bias);
            for (tap, src) in taps(y, x, s.h, s.w) {
                let inp = &input[src * ci..(src + 1) * ci];
                let wtap = &weights[tap * ci * co..(tap + 1) * ci * co];
                for (c, &v) in inp.iter().enumerate() {
                    if v != 0.0 {
                        axpy(v, &wtap[c * co..(c + 1) * co], o);
                    }
                }
            }
        }
    }
}

/// Backward pass of [`conv3x3_forward`]. `grad_in`, when given, is overwritten.
pub fn conv3x3_backward(
    s: ConvShape,
    input: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    mut grad_in: Option<&mut [f64]>,
) {
    let (ci, co) = (s.in_c, s.out_c);
    if let Some(gi) = grad_in.as_deref_mut() {
        gi.iter_mut().for_each(|v| *v = 0.0);
    }
    for y in 0..s.h {
        for x in 0..s.w {
            let g = &grad_out[(y * s.w + x) * co..(y * s.w + x + 1) * co];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            axpy(1.0, g, grad_b);
            for (tap, src) in taps(y, x, s.h, s.w) {
                let inp = &input[src * ci..(src + 1) * ci];
                let base = tap * ci * co;
                for (c, &v) in inp.iter().enumerate() {
                    if v != 0.0 {
                        axpy(v, g, &mut grad_w[base + c * co..base + (c + 1) * co]);
                    }
                }
                if let Some(gi) = grad_in.as_deref_mut() {
                    let gin = &mut gi[src * ci..(src + 1) * ci];
                    for (c, slot) in gin.iter_mut().enumerate() {
                        *slot += dot(&weights[base + c * co..base + (c + 1) * co], g);
                    }
                }
            }
        }
    }
}

pub fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Masks `grad` by the derivative of ReLU, given the activation output.
pub fn relu_backward(activated: &[f64], grad: &mut [f64]) {
    for (g, &a) in grad.iter_mut().zip(activated) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// 2×2 max-pool with stride 2 over an `h×w×c` input (h, w even). Ties go to
/// the first element in row-major window order.
pub fn maxpool2_forward(h: usize, w: usize, c: usize, input: &[f64], out: &mut [f64], argmax: &mut [usize]) {
    let (oh, ow) = (h / 2, w / 2);
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((2 * y) * w + 2 * x) * c + ch;
                let mut best = input[best_idx];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * y + dy) * w + 2 * x + dx) * c + ch;
                    if input[idx] > best {
                        best = input[idx];
                        best_idx = idx;
                    }
                }
                let o = (y * ow + x) * c + ch;
                out[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
}

/// Routes each output gradient to its argmax. `grad_in` is overwritten.
pub fn maxpool2_backward(argmax: &[usize], grad_out: &[f64], grad_in: &mut [f64]) {
    grad_in.iter_mut().for_each(|v| *v = 0.0);
    for (&idx, &g) in argmax.iter().zip(grad_out) {
        grad_in[idx] += g;
    }
}

pub fn dense_forward(input: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let n_out = bias.len();
    out.copy_from_slice(bias);
    for (i, &v) in input.iter().enumerate() {
        if v != 0.0 {
            axpy(v, &weights[i * n_out..(i + 1) * n_out], out);
        }
    }
}

/// Backward pass of [`dense_forward`]. `grad_in`, when given, is overwritten.
pub fn dense_backward(
    input: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    grad_in: Option<&mut [f64]>,
) {
    let n_out = grad_out.len();
    axpy(1.0, grad_out, grad_b);
    for (i, &v) in input.iter().enumerate() {
        if v != 0.0 {
            axpy(v, grad_out, &mut grad_w[i * n_out..(i + 1) * n_out]);
        }
    }
    if let Some(gi) = grad_in {
        for (i, slot) in gi.iter_mut().enumerate() {
            *slot = dot(&weights[i * n_out..(i + 1) * n_out], grad_out);
        }
    }
}

/// Numerically stable softmax cross-entropy: returns the loss and its
/// gradient with respect to the logits (`softmax - onehot`).
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = max + sum.ln() - logits[label];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

/// Index of the largest logit; ties resolve to the lowest index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}
