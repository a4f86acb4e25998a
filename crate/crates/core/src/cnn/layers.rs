//! Stateless forward and backward kernels. Image tensors are `[N, C, H, W]`,
//! dense activations `[N, features]`.

use super::tensor::{gemm, Layout, Scalar, Tensor};
use super::CnnError;

fn shape4(t: &Tensor<impl Scalar>, what: &str) -> Result<[usize; 4], CnnError> {
    match *t.shape() {
        [n, c, h, w] => Ok([n, c, h, w]),
        ref s => Err(CnnError::Shape(format!("{what} must be [N, C, H, W], got {s:?}"))),
    }
}

fn shape2(t: &Tensor<impl Scalar>, what: &str) -> Result<[usize; 2], CnnError> {
    match *t.shape() {
        [a, b] => Ok([a, b]),
        ref s => Err(CnnError::Shape(format!("{what} must be 2-D, got {s:?}"))),
    }
}

/// Output side length of a sliding window, or `None` if the window does not fit.
pub fn window_output(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if stride == 0 || kernel == 0 || kernel > padded {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeometry {
    channels: usize,
    height: usize,
    width: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeometry {
    fn rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn cols(&self) -> usize {
        self.out_h * self.out_w
    }

    fn new(input: [usize; 4], weights: [usize; 4], stride: usize, padding: usize) -> Result<Self, CnnError> {
        let [_, c, h, w] = input;
        let [_, wc, kh, kw] = weights;
        if wc != c {
            return Err(CnnError::Shape(format!("weights expect {wc} input channels, input has {c}")));
        }
        if kh != kw {
            return Err(CnnError::Shape(format!("only square kernels are supported, got {kh}x{kw}")));
        }
        let (out_h, out_w) = match (window_output(h, kh, stride, padding), window_output(w, kw, stride, padding)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(CnnError::Shape(format!(
                    "{kh}x{kw} kernel (stride {stride}, padding {padding}) does not fit a {h}x{w} input"
                )))
            }
        };
        Ok(ConvGeometry {
            channels: c,
            height: h,
            width: w,
            kernel: kh,
            stride,
            padding,
            out_h,
            out_w,
        })
    }

    /// For kernel offset `k`, the range of output positions whose input
    /// coordinate `o * stride + k - padding` lies inside `[0, extent)`.
    fn valid_range(&self, k: usize, extent: usize, outputs: usize) -> (usize, usize) {
        let (s, p) = (self.stride, self.padding);
        let lo = if k >= p { 0 } else { (p - k).div_ceil(s) };
        let hi = if extent + p > k {
            ((extent + p - k - 1) / s + 1).min(outputs)
        } else {
            0
        };
        (lo.min(hi), hi)
    }

    fn im2col<T: Scalar>(&self, image: &[T], col: &mut [T]) {
        let (oh, ow) = (self.out_h, self.out_w);
        let cols = self.cols();
        for c in 0..self.channels {
            let plane = &image[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ki in 0..self.kernel {
                let (ylo, yhi) = self.valid_range(ki, self.height, oh);
                for kj in 0..self.kernel {
                    let row = (c * self.kernel + ki) * self.kernel + kj;
                    let dst = &mut col[row * cols..(row + 1) * cols];
                    let (xlo, xhi) = self.valid_range(kj, self.width, ow);
                    for oy in 0..oh {
                        let line = &mut dst[oy * ow..(oy + 1) * ow];
                        if oy < ylo || oy >= yhi {
                            line.fill(T::zero());
                            continue;
                        }
                        let iy = oy * self.stride + ki - self.padding;
                        let src = &plane[iy * self.width..(iy + 1) * self.width];
                        line[..xlo].fill(T::zero());
                        line[xhi..].fill(T::zero());
                        if self.stride == 1 {
                            let start = xlo + kj - self.padding;
                            line[xlo..xhi].copy_from_slice(&src[start..start + (xhi - xlo)]);
                        } else {
                            for ox in xlo..xhi {
                                line[ox] = src[ox * self.stride + kj - self.padding];
                            }
                        }
                    }
                }
            }
        }
    }

    fn col2im_add<T: Scalar>(&self, col: &[T], image: &mut [T]) {
        let (oh, ow) = (self.out_h, self.out_w);
        let cols = self.cols();
        for c in 0..self.channels {
            let plane = &mut image[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ki in 0..self.kernel {
                let (ylo, yhi) = self.valid_range(ki, self.height, oh);
                for kj in 0..self.kernel {
                    let row = (c * self.kernel + ki) * self.kernel + kj;
                    let src = &col[row * cols..(row + 1) * cols];
                    let (xlo, xhi) = self.valid_range(kj, self.width, ow);
                    for oy in ylo..yhi {
                        let iy = oy * self.stride + ki - self.padding;
                        let dst = &mut plane[iy * self.width..(iy + 1) * self.width];
                        let line = &src[oy * ow..(oy + 1) * ow];
                        for ox in xlo..xhi {
                            dst[ox * self.stride + kj - self.padding] += line[ox];
                        }
                    }
                }
            }
        }
    }
}

/// 2-D cross-correlation. `weights` is `[F, C, k, k]`, `bias` is `[F]`.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>, CnnError> {
    let ishape = shape4(input, "conv input")?;
    let wshape = shape4(weights, "conv weights")?;
    let f = wshape[0];
    if bias.shape() != [f] {
        return Err(CnnError::Shape(format!("bias {:?} for {f} filters", bias.shape())));
    }
    let g = ConvGeometry::new(ishape, wshape, stride, padding)?;
    let n = ishape[0];
    let (rows, cols) = (g.rows(), g.cols());
    let sample_in = g.channels * g.height * g.width;
    let mut out = Tensor::zeros(&[n, f, g.out_h, g.out_w]);
    let mut col = vec![T::zero(); rows * cols];
    for s in 0..n {
        g.im2col(&input.data()[s * sample_in..(s + 1) * sample_in], &mut col);
        let dst = &mut out.data_mut()[s * f * cols..(s + 1) * f * cols];
        for (plane, &b) in dst.chunks_mut(cols).zip(bias.data()) {
            plane.fill(b);
        }
        gemm(f, rows, cols, T::one(), weights.data(), Layout::RowMajor, &col, Layout::RowMajor, T::one(), dst);
    }
    Ok(out)
}

/// Gradients of a convolution.
#[derive(Debug, Clone)]
pub struct ConvGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Accumulates weight and bias gradients into `grad_w`/`grad_b` and, if
/// requested, returns the gradient with respect to the input.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv2d_backward_accumulate<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: usize,
    grad_w: &mut Tensor<T>,
    grad_b: &mut Tensor<T>,
    want_input: bool,
) -> Result<Option<Tensor<T>>, CnnError> {
    let ishape = shape4(input, "conv input")?;
    let wshape = shape4(weights, "conv weights")?;
    let g = ConvGeometry::new(ishape, wshape, stride, padding)?;
    let (n, f) = (ishape[0], wshape[0]);
    if grad_out.shape() != [n, f, g.out_h, g.out_w] {
        return Err(CnnError::Shape(format!(
            "conv output gradient {:?}, expected {:?}",
            grad_out.shape(),
            [n, f, g.out_h, g.out_w]
        )));
    }
    if grad_w.shape() != weights.shape() || grad_b.shape() != [f] {
        return Err(CnnError::Shape("conv parameter gradient buffers do not match".into()));
    }
    let (rows, cols) = (g.rows(), g.cols());
    let sample_in = g.channels * g.height * g.width;
    let mut col = vec![T::zero(); rows * cols];
    let mut dcol = if want_input { vec![T::zero(); rows * cols] } else { Vec::new() };
    let mut grad_in = if want_input { Some(Tensor::zeros(input.shape())) } else { None };
    for s in 0..n {
        let gout = &grad_out.data()[s * f * cols..(s + 1) * f * cols];
        g.im2col(&input.data()[s * sample_in..(s + 1) * sample_in], &mut col);
        gemm(f, cols, rows, T::one(), gout, Layout::RowMajor, &col, Layout::Transposed, T::one(), grad_w.data_mut());
        for (db, plane) in grad_b.data_mut().iter_mut().zip(gout.chunks(cols)) {
            *db += plane.iter().fold(T::zero(), |a, &v| a + v);
        }
        if let Some(gi) = grad_in.as_mut() {
            gemm(rows, f, cols, T::one(), weights.data(), Layout::Transposed, gout, Layout::RowMajor, T::zero(), &mut dcol);
            g.col2im_add(&dcol, &mut gi.data_mut()[s * sample_in..(s + 1) * sample_in]);
        }
    }
    Ok(grad_in)
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<ConvGrads<T>, CnnError> {
    let mut gw = Tensor::zeros(weights.shape());
    let mut gb = Tensor::zeros(&[weights.shape().first().copied().unwrap_or(0)]);
    let gi = conv2d_backward_accumulate(input, weights, grad_out, stride, padding, &mut gw, &mut gb, true)?
        .expect("input gradient requested");
    Ok(ConvGrads {
        input: gi,
        weights: gw,
        bias: gb,
    })
}

/// Max pooling output together with the flat input index of each maximum.
#[derive(Debug, Clone)]
pub struct PoolOutput<T: Scalar> {
    pub output: Tensor<T>,
    pub argmax: Vec<usize>,
}

pub fn maxpool_forward<T: Scalar>(input: &Tensor<T>, window: usize, stride: usize) -> Result<PoolOutput<T>, CnnError> {
    let [n, c, h, w] = shape4(input, "pool input")?;
    let (oh, ow) = match (window_output(h, window, stride, 0), window_output(w, window, stride, 0)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(CnnError::Shape(format!(
                "{window}x{window} pool window (stride {stride}) larger than {h}x{w} input"
            )))
        }
    };
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = vec![0usize; n * c * oh * ow];
    let data = input.data();
    let od = out.data_mut();
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * stride * w + ox * stride;
                for dy in 0..window {
                    let row = base + (oy * stride + dy) * w + ox * stride;
                    for idx in row..row + window {
                        if data[idx] > data[best] {
                            best = idx;
                        }
                    }
                }
                let o = (plane * oh + oy) * ow + ox;
                od[o] = data[best];
                argmax[o] = best;
            }
        }
    }
    Ok(PoolOutput { output: out, argmax })
}

pub fn maxpool_backward<T: Scalar>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, CnnError> {
    if argmax.len() != grad_out.len() {
        return Err(CnnError::Shape(format!(
            "{} pool indices for a gradient of {} values",
            argmax.len(),
            grad_out.len()
        )));
    }
    let mut gi = Tensor::zeros(input_shape);
    let gd = gi.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        *gd.get_mut(idx)
            .ok_or_else(|| CnnError::Shape(format!("pool index {idx} outside input {input_shape:?}")))? += g;
    }
    Ok(gi)
}

pub fn tanh_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| v.tanh())
}

/// Backward through tanh given its forward output `y`: `g * (1 - y^2)`.
pub fn tanh_backward<T: Scalar>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, CnnError> {
    if output.shape() != grad_out.shape() {
        return Err(CnnError::Shape(format!(
            "tanh gradient {:?} for output {:?}",
            grad_out.shape(),
            output.shape()
        )));
    }
    let data = output
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&y, &g)| g * (T::one() - y * y))
        .collect();
    Tensor::from_vec(output.shape(), data)
}

/// `y = x W^T + b` with `W` of shape `[out, in]`.
pub fn dense_forward<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>, CnnError> {
    let [n, inputs] = shape2(input, "dense input")?;
    let [outputs, w_in] = shape2(weights, "dense weights")?;
    if w_in != inputs || bias.shape() != [outputs] {
        return Err(CnnError::Shape(format!(
            "dense weights {:?} / bias {:?} for input {:?}",
            weights.shape(),
            bias.shape(),
            input.shape()
        )));
    }
    let mut out = Tensor::zeros(&[n, outputs]);
    for row in out.data_mut().chunks_mut(outputs) {
        row.copy_from_slice(bias.data());
    }
    gemm(n, inputs, outputs, T::one(), input.data(), Layout::RowMajor, weights.data(), Layout::Transposed, T::one(), out.data_mut());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub(crate) fn dense_backward_accumulate<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    grad_w: &mut Tensor<T>,
    grad_b: &mut Tensor<T>,
    want_input: bool,
) -> Result<Option<Tensor<T>>, CnnError> {
    let [n, inputs] = shape2(input, "dense input")?;
    let [outputs, _] = shape2(weights, "dense weights")?;
    if grad_out.shape() != [n, outputs] || grad_w.shape() != weights.shape() || grad_b.shape() != [outputs] {
        return Err(CnnError::Shape(format!(
            "dense gradient {:?} for {n} samples and {outputs} outputs",
            grad_out.shape()
        )));
    }
    gemm(outputs, n, inputs, T::one(), grad_out.data(), Layout::Transposed, input.data(), Layout::RowMajor, T::one(), grad_w.data_mut());
    for row in grad_out.data().chunks(outputs) {
        for (b, &g) in grad_b.data_mut().iter_mut().zip(row) {
            *b += g;
        }
    }
    if !want_input {
        return Ok(None);
    }
    let mut gi = Tensor::zeros(&[n, inputs]);
    gemm(n, outputs, inputs, T::one(), grad_out.data(), Layout::RowMajor, weights.data(), Layout::RowMajor, T::zero(), gi.data_mut());
    Ok(Some(gi))
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>, CnnError> {
    let mut gw = Tensor::zeros(weights.shape());
    let mut gb = Tensor::zeros(&[weights.shape().first().copied().unwrap_or(0)]);
    let gi = dense_backward_accumulate(input, weights, grad_out, &mut gw, &mut gb, true)?.expect("input gradient requested");
    Ok(DenseGrads {
        input: gi,
        weights: gw,
        bias: gb,
    })
}

/// Row-wise softmax of `[N, C]` logits, with max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, CnnError> {
    let [_, c] = shape2(logits, "logits")?;
    let mut out = logits.clone();
    if c == 0 {
        return Ok(out);
    }
    for row in out.data_mut().chunks_mut(c) {
        let max = row.iter().fold(T::neg_infinity(), |a, &v| a.max(v));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    Ok(out)
}

/// Probabilities are floored at this value before taking the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Sparse categorical cross-entropy of one probability vector.
pub fn scce_loss<T: Scalar>(probs: &[T], label: usize) -> Result<T, CnnError> {
    let p = probs.get(label).ok_or(CnnError::Label {
        label,
        classes: probs.len(),
    })?;
    let floor = T::from_f64(PROBABILITY_FLOOR);
    // written so that NaN propagates instead of being floored
    let p = if *p < floor { floor } else { *p };
    Ok(-p.ln())
}

/// Mean SCCE over a batch of logits and its gradient, `(softmax - one_hot) / N`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>), CnnError> {
    let [n, c] = shape2(logits, "logits")?;
    if labels.len() != n {
        return Err(CnnError::Shape(format!("{} labels for {n} rows", labels.len())));
    }
    let mut grad = softmax(logits)?;
    let mut loss = T::zero();
    let scale = T::one() / T::from_f64(n.max(1) as f64);
    for (row, &label) in grad.data_mut().chunks_mut(c).zip(labels) {
        loss += scce_loss(row, label)?;
        row[label] -= T::one();
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Ok((loss * scale, grad))
}
