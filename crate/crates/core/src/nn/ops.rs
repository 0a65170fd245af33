//! Forward and backward passes of the individual layer types, one example
//! at a time. Feature maps are `[height, width, channels]`; conv kernels are
//! `[kh, kw, c_in, filters]`; dense weights are `[inputs, units]`.
//!
//! The `*_into` variants accumulate parameter gradients into caller-owned
//! buffers so a batch can be summed without extra allocation.

use crate::error::{Error, Result};
use crate::nn::gemm::{gemm, View};
use crate::nn::tensor::Tensor;

fn shape_err(layer: usize, message: impl Into<String>) -> Error {
    Error::Shape {
        layer,
        message: message.into(),
    }
}

fn dims3(t: &Tensor, layer: usize, what: &str) -> Result<[usize; 3]> {
    match *t.shape() {
        [h, w, c] => Ok([h, w, c]),
        ref s => Err(shape_err(layer, format!("{what} expects [h, w, c], got {s:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Conv2D (same padding, stride 1)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConvCache {
    /// im2col matrix, `[h·w × kh·kw·c_in]`.
    cols: Vec<f64>,
    in_shape: [usize; 3],
    kernel: [usize; 2],
}

fn im2col(x: &[f64], [h, w, c]: [usize; 3], [kh, kw]: [usize; 2], cols: &mut [f64]) {
    let k = kh * kw * c;
    let (ph, pw) = ((kh / 2) as isize, (kw / 2) as isize);
    for y in 0..h {
        for xx in 0..w {
            let row = &mut cols[(y * w + xx) * k..(y * w + xx + 1) * k];
            let mut idx = 0;
            for ky in 0..kh {
                let iy = y as isize + ky as isize - ph;
                for kx in 0..kw {
                    let ix = xx as isize + kx as isize - pw;
                    let dst = &mut row[idx..idx + c];
                    if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                        let src = (iy as usize * w + ix as usize) * c;
                        dst.copy_from_slice(&x[src..src + c]);
                    } else {
                        dst.fill(0.0);
                    }
                    idx += c;
                }
            }
        }
    }
}

fn col2im_add(cols: &[f64], [h, w, c]: [usize; 3], [kh, kw]: [usize; 2], x: &mut [f64]) {
    let k = kh * kw * c;
    let (ph, pw) = ((kh / 2) as isize, (kw / 2) as isize);
    for y in 0..h {
        for xx in 0..w {
            let row = &cols[(y * w + xx) * k..(y * w + xx + 1) * k];
            let mut idx = 0;
            for ky in 0..kh {
                let iy = y as isize + ky as isize - ph;
                for kx in 0..kw {
                    let ix = xx as isize + kx as isize - pw;
                    if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                        let dst = (iy as usize * w + ix as usize) * c;
                        for (d, s) in x[dst..dst + c].iter_mut().zip(&row[idx..idx + c]) {
                            *d += s;
                        }
                    }
                    idx += c;
                }
            }
        }
    }
}

pub(crate) fn conv2d_forward_at(
    layer: usize,
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
) -> Result<(Tensor, ConvCache)> {
    let [h, w, c] = dims3(input, layer, "conv2d")?;
    let [kh, kw, wc, f] = match *weight.shape() {
        [a, b, c, d] => [a, b, c, d],
        ref s => return Err(shape_err(layer, format!("conv2d kernel must be 4-D, got {s:?}"))),
    };
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(shape_err(layer, format!("conv2d kernel {kh}×{kw} must have odd sides")));
    }
    if wc != c {
        return Err(shape_err(layer, format!("conv2d kernel expects {wc} channels, input has {c}")));
    }
    if bias.shape() != [f] {
        return Err(shape_err(layer, format!("conv2d bias must be [{f}], got {:?}", bias.shape())));
    }
    let k = kh * kw * c;
    let mut cols = vec![0.0; h * w * k];
    im2col(input.data(), [h, w, c], [kh, kw], &mut cols);
    let mut out = Vec::with_capacity(h * w * f);
    for _ in 0..h * w {
        out.extend_from_slice(bias.data());
    }
    gemm(h * w, k, f, View::row_major(&cols, k), View::row_major(weight.data(), f), 1.0, &mut out);
    Ok((
        Tensor::new(vec![h, w, f], out)?,
        ConvCache {
            cols,
            in_shape: [h, w, c],
            kernel: [kh, kw],
        },
    ))
}

pub fn conv2d_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<(Tensor, ConvCache)> {
    conv2d_forward_at(0, input, weight, bias)
}

/// Accumulates kernel/bias gradients; writes the input gradient if requested.
pub(crate) fn conv2d_backward_into(
    grad_out: &[f64],
    cache: &ConvCache,
    weight: &Tensor,
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
    grad_input: Option<&mut [f64]>,
) {
    let [h, w, c] = cache.in_shape;
    let [kh, kw] = cache.kernel;
    let k = kh * kw * c;
    let f = grad_bias.len();
    let hw = h * w;
    gemm(k, hw, f, View::transposed(&cache.cols, k), View::row_major(grad_out, f), 1.0, grad_weight);
    for row in grad_out.chunks_exact(f) {
        for (b, g) in grad_bias.iter_mut().zip(row) {
            *b += g;
        }
    }
    if let Some(gin) = grad_input {
        let mut gcols = vec![0.0; hw * k];
        gemm(hw, f, k, View::row_major(grad_out, f), View::transposed(weight.data(), f), 0.0, &mut gcols);
        gin.fill(0.0);
        col2im_add(&gcols, cache.in_shape, cache.kernel, gin);
    }
}

/// Returns `(grad_input, grad_weight, grad_bias)`.
pub fn conv2d_backward(grad_out: &Tensor, cache: &ConvCache, weight: &Tensor) -> (Tensor, Tensor, Tensor) {
    let mut gw = Tensor::zeros(weight.shape().to_vec());
    let mut gb = Tensor::zeros(vec![weight.shape()[3]]);
    let mut gin = Tensor::zeros(cache.in_shape.to_vec());
    conv2d_backward_into(
        grad_out.data(),
        cache,
        weight,
        gw.data_mut(),
        gb.data_mut(),
        Some(gin.data_mut()),
    );
    (gin, gw, gb)
}

// ---------------------------------------------------------------------------
// MaxPool2D (2×2, stride 2, floor)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PoolCache {
    /// Flat input index of the winning element for each output element.
    argmax: Vec<usize>,
    in_shape: [usize; 3],
}

pub fn pool_output_dims(h: usize, w: usize) -> (usize, usize) {
    (h / 2, w / 2)
}

pub(crate) fn maxpool2d_forward_at(layer: usize, input: &Tensor) -> Result<(Tensor, PoolCache)> {
    let [h, w, c] = dims3(input, layer, "maxpool2d")?;
    if h < 2 || w < 2 {
        return Err(shape_err(layer, format!("maxpool2d needs spatial dims >= 2, got {h}×{w}")));
    }
    let (oh, ow) = pool_output_dims(h, w);
    let x = input.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut argmax = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((2 * oy) * w + 2 * ox) * c + ch;
                let mut best = x[best_idx];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                    // strict comparison keeps the earliest position on ties
                    if x[idx] > best {
                        best = x[idx];
                        best_idx = idx;
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    Ok((
        Tensor::new(vec![oh, ow, c], out)?,
        PoolCache {
            argmax,
            in_shape: [h, w, c],
        },
    ))
}

pub fn maxpool2d_forward(input: &Tensor) -> Result<(Tensor, PoolCache)> {
    maxpool2d_forward_at(0, input)
}

pub(crate) fn maxpool2d_backward_into(grad_out: &[f64], cache: &PoolCache, grad_input: &mut [f64]) {
    grad_input.fill(0.0);
    for (g, &idx) in grad_out.iter().zip(&cache.argmax) {
        grad_input[idx] += g;
    }
}

pub fn maxpool2d_backward(grad_out: &Tensor, cache: &PoolCache) -> Tensor {
    let mut gin = Tensor::zeros(cache.in_shape.to_vec());
    maxpool2d_backward_into(grad_out.data(), cache, gin.data_mut());
    gin
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

pub(crate) fn dense_forward_at(layer: usize, input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let n_in = match *input.shape() {
        [n] => n,
        ref s => return Err(shape_err(layer, format!("dense expects a vector, got {s:?}"))),
    };
    let (w_in, units) = match *weight.shape() {
        [a, b] => (a, b),
        ref s => return Err(shape_err(layer, format!("dense weight must be 2-D, got {s:?}"))),
    };
    if w_in != n_in {
        return Err(shape_err(layer, format!("dense expects {w_in} inputs, got {n_in}")));
    }
    if bias.shape() != [units] {
        return Err(shape_err(layer, format!("dense bias must be [{units}]")));
    }
    let mut out = bias.data().to_vec();
    gemm(1, n_in, units, View::row_major(input.data(), n_in), View::row_major(weight.data(), units), 1.0, &mut out);
    Ok(Tensor::scalar_vec(out))
}

pub fn dense_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    dense_forward_at(0, input, weight, bias)
}

pub(crate) fn dense_backward_into(
    grad_out: &[f64],
    input: &[f64],
    weight: &Tensor,
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
    grad_input: Option<&mut [f64]>,
) {
    let n_in = input.len();
    let units = grad_out.len();
    gemm(n_in, 1, units, View::row_major(input, 1), View::row_major(grad_out, units), 1.0, grad_weight);
    for (b, g) in grad_bias.iter_mut().zip(grad_out) {
        *b += g;
    }
    if let Some(gin) = grad_input {
        gemm(n_in, units, 1, View::row_major(weight.data(), units), View::row_major(grad_out, 1), 0.0, gin);
    }
}

/// Returns `(grad_input, grad_weight, grad_bias)`.
pub fn dense_backward(grad_out: &Tensor, input: &Tensor, weight: &Tensor) -> (Tensor, Tensor, Tensor) {
    let mut gw = Tensor::zeros(weight.shape().to_vec());
    let mut gb = Tensor::zeros(vec![weight.shape()[1]]);
    let mut gin = Tensor::zeros(input.shape().to_vec());
    dense_backward_into(
        grad_out.data(),
        input.data(),
        weight,
        gw.data_mut(),
        gb.data_mut(),
        Some(gin.data_mut()),
    );
    (gin, gw, gb)
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Gradient through relu given its output.
pub fn relu_backward(grad_out: &[f64], output: &[f64]) -> Vec<f64> {
    grad_out
        .iter()
        .zip(output)
        .map(|(g, y)| if *y > 0.0 { *g } else { 0.0 })
        .collect()
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| sigmoid_scalar(v)).collect()
}

pub fn sigmoid_backward(grad_out: &[f64], output: &[f64]) -> Vec<f64> {
    grad_out
        .iter()
        .zip(output)
        .map(|(g, y)| g * y * (1.0 - y))
        .collect()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn softmax_backward(grad_out: &[f64], output: &[f64]) -> Vec<f64> {
    let dot: f64 = grad_out.iter().zip(output).map(|(g, y)| g * y).sum();
    grad_out
        .iter()
        .zip(output)
        .map(|(g, y)| y * (g - dot))
        .collect()
}
