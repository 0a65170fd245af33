use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::loss::LossKind;
use crate::nn::ops::{self, ConvCache, PoolCache};
use crate::nn::tensor::Tensor;
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationFn {
    Relu,
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Same padding, stride 1.
    Conv2d {
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
    },
    /// 2×2 window, stride 2, odd trailing row/column dropped.
    MaxPool2d,
    Flatten,
    Dense {
        units: usize,
    },
    Activation {
        function: ActivationFn,
    },
}

impl LayerSpec {
    pub fn conv3x3(filters: usize) -> Self {
        LayerSpec::Conv2d {
            filters,
            kernel_h: 3,
            kernel_w: 3,
        }
    }

    pub fn act(function: ActivationFn) -> Self {
        LayerSpec::Activation { function }
    }

    /// Output shape and parameter shapes for a given input shape.
    fn plan(&self, layer: usize, input: &[usize]) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
        let err = |m: String| Error::Shape { layer, message: m };
        match *self {
            LayerSpec::Conv2d {
                filters,
                kernel_h,
                kernel_w,
            } => {
                let [h, w, c] = <[usize; 3]>::try_from(input)
                    .map_err(|_| err(format!("conv2d expects [h, w, c], got {input:?}")))?;
                if filters == 0 || kernel_h == 0 || kernel_w == 0 {
                    return Err(err("conv2d filters and kernel sides must be positive".into()));
                }
                if kernel_h % 2 == 0 || kernel_w % 2 == 0 {
                    return Err(err(format!("conv2d kernel {kernel_h}×{kernel_w} must have odd sides")));
                }
                Ok((
                    vec![h, w, filters],
                    vec![vec![kernel_h, kernel_w, c, filters], vec![filters]],
                ))
            }
            LayerSpec::MaxPool2d => {
                let [h, w, c] = <[usize; 3]>::try_from(input)
                    .map_err(|_| err(format!("max_pool2d expects [h, w, c], got {input:?}")))?;
                if h < 2 || w < 2 {
                    return Err(err(format!("max_pool2d needs spatial dims >= 2, got {h}×{w}")));
                }
                let (oh, ow) = ops::pool_output_dims(h, w);
                Ok((vec![oh, ow, c], vec![]))
            }
            LayerSpec::Flatten => Ok((vec![input.iter().product()], vec![])),
            LayerSpec::Dense { units } => {
                if units == 0 {
                    return Err(err("dense units must be positive".into()));
                }
                match *input {
                    [n] => Ok((vec![units], vec![vec![n, units], vec![units]])),
                    _ => Err(err(format!("dense expects a flat input, got {input:?}"))),
                }
            }
            LayerSpec::Activation { .. } => Ok((input.to_vec(), vec![])),
        }
    }
}

/// A feed-forward stack of layers with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    params: Vec<Tensor>,
    /// Index of the first parameter tensor owned by each layer.
    slots: Vec<Option<usize>>,
    output_shapes: Vec<Vec<usize>>,
}

enum Cache {
    Conv(ConvCache),
    Pool(PoolCache),
    Flatten,
    Dense(Vec<f64>),
    Act(ActivationFn, Vec<f64>),
}

impl Model {
    /// Validates the stack and allocates zeroed parameters.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::Shape {
                layer: 0,
                message: format!("invalid input shape {input_shape:?}"),
            });
        }
        let mut shape = input_shape.clone();
        let mut params = Vec::new();
        let mut slots = Vec::with_capacity(layers.len());
        let mut output_shapes = Vec::with_capacity(layers.len());
        for (i, layer) in layers.iter().enumerate() {
            let (out, pshapes) = layer.plan(i, &shape)?;
            slots.push(if pshapes.is_empty() { None } else { Some(params.len()) });
            params.extend(pshapes.into_iter().map(Tensor::zeros));
            output_shapes.push(out.clone());
            shape = out;
        }
        Ok(Self {
            input_shape,
            layers,
            params,
            slots,
            output_shapes,
        })
    }

    /// Builds a model from stored parameters, checking every shape.
    pub fn from_parts(input_shape: Vec<usize>, layers: Vec<LayerSpec>, params: Vec<Tensor>) -> Result<Self> {
        let mut model = Self::new(input_shape, layers)?;
        if params.len() != model.params.len() {
            return Err(Error::Malformed {
                what: "model parameters",
                message: format!("expected {} tensors, got {}", model.params.len(), params.len()),
            });
        }
        for (i, (have, want)) in params.iter().zip(&model.params).enumerate() {
            if have.shape() != want.shape() {
                return Err(Error::Malformed {
                    what: "model parameters",
                    message: format!("tensor {i} has shape {:?}, expected {:?}", have.shape(), want.shape()),
                });
            }
        }
        model.params = params;
        Ok(model)
    }

    /// He-uniform for layers feeding a relu, Glorot-uniform otherwise; zero biases.
    pub fn init(&mut self, seed: u64) {
        for i in 0..self.layers.len() {
            let Some(slot) = self.slots[i] else { continue };
            let (fan_in, fan_out) = match self.layers[i] {
                LayerSpec::Conv2d {
                    kernel_h, kernel_w, filters, ..
                } => {
                    let c_in = self.params[slot].shape()[2];
                    (kernel_h * kernel_w * c_in, kernel_h * kernel_w * filters)
                }
                LayerSpec::Dense { units } => (self.params[slot].shape()[0], units),
                _ => unreachable!("only conv and dense layers own parameters"),
            };
            let relu_next = matches!(
                self.layers.get(i + 1),
                Some(LayerSpec::Activation {
                    function: ActivationFn::Relu
                })
            );
            let limit = if relu_next {
                (6.0 / fan_in as f64).sqrt()
            } else {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            };
            let mut rng = SeededRng::new(derive_seed(seed, i as u64));
            for w in self.params[slot].data_mut() {
                *w = rng.range(-limit, limit);
            }
            self.params[slot + 1].data_mut().fill(0.0);
        }
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.output_shapes.last().map_or(&self.input_shape, |s| s)
    }

    pub fn layer_output_shape(&self, layer: usize) -> &[usize] {
        &self.output_shapes[layer]
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn layer_param_count(&self, layer: usize) -> usize {
        match self.slots[layer] {
            Some(s) => self.params[s].len() + self.params[s + 1].len(),
            None => 0,
        }
    }

    /// `layer{i}.kernel`/`layer{i}.weight` and `layer{i}.bias`, in parameter order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.params.len());
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerSpec::Conv2d { .. } => {
                    names.push(format!("layer{i}.kernel"));
                    names.push(format!("layer{i}.bias"));
                }
                LayerSpec::Dense { .. } => {
                    names.push(format!("layer{i}.weight"));
                    names.push(format!("layer{i}.bias"));
                }
                _ => {}
            }
        }
        names
    }

    /// True when the stack has a dense head, i.e. it produces class scores.
    pub fn is_classifier(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, LayerSpec::Dense { .. }))
    }

    pub fn final_activation(&self) -> Option<ActivationFn> {
        match self.layers.last() {
            Some(LayerSpec::Activation { function }) => Some(*function),
            _ => None,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(Error::Shape {
                layer: 0,
                message: format!("input shape {:?}, model expects {:?}", x.shape(), self.input_shape),
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match *layer {
                LayerSpec::Conv2d { .. } => {
                    let s = self.slots[i].expect("conv owns parameters");
                    ops::conv2d_forward_at(i, &cur, &self.params[s], &self.params[s + 1])?.0
                }
                LayerSpec::MaxPool2d => ops::maxpool2d_forward_at(i, &cur)?.0,
                LayerSpec::Flatten => {
                    let n = cur.len();
                    cur.reshape(vec![n])?
                }
                LayerSpec::Dense { .. } => {
                    let s = self.slots[i].expect("dense owns parameters");
                    ops::dense_forward_at(i, &cur, &self.params[s], &self.params[s + 1])?
                }
                LayerSpec::Activation { function } => {
                    let shape = cur.shape().to_vec();
                    Tensor::new(shape, activate(function, cur.data()))?
                }
            };
        }
        Ok(cur)
    }

    /// Forward and backward for one example. Adds the gradient of the loss
    /// into `grads` (same layout as [`Model::params`]) and returns the loss
    /// and the network output.
    pub fn accumulate_gradients(
        &self,
        x: &Tensor,
        target: &[f64],
        loss: LossKind,
        grads: &mut [Tensor],
    ) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        assert_eq!(grads.len(), self.params.len(), "gradient buffers must mirror parameters");
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match *layer {
                LayerSpec::Conv2d { .. } => {
                    let s = self.slots[i].expect("conv owns parameters");
                    let (out, cache) = ops::conv2d_forward_at(i, &cur, &self.params[s], &self.params[s + 1])?;
                    caches.push(Cache::Conv(cache));
                    out
                }
                LayerSpec::MaxPool2d => {
                    let (out, cache) = ops::maxpool2d_forward_at(i, &cur)?;
                    caches.push(Cache::Pool(cache));
                    out
                }
                LayerSpec::Flatten => {
                    caches.push(Cache::Flatten);
                    let n = cur.len();
                    cur.reshape(vec![n])?
                }
                LayerSpec::Dense { .. } => {
                    let s = self.slots[i].expect("dense owns parameters");
                    let out = ops::dense_forward_at(i, &cur, &self.params[s], &self.params[s + 1])?;
                    caches.push(Cache::Dense(cur.into_data()));
                    out
                }
                LayerSpec::Activation { function } => {
                    let shape = cur.shape().to_vec();
                    let y = activate(function, cur.data());
                    caches.push(Cache::Act(function, y.clone()));
                    Tensor::new(shape, y)?
                }
            };
        }
        let output = cur.into_data();
        let (value, mut grad) = loss.eval(&output, target)?;

        for i in (0..self.layers.len()).rev() {
            let need_input = i > 0;
            let cache = caches.pop().expect("one cache per layer");
            grad = match cache {
                Cache::Conv(c) => {
                    let s = self.slots[i].expect("conv owns parameters");
                    let (gw, rest) = grads[s..].split_at_mut(1);
                    let mut gin = if need_input { vec![0.0; self.layer_input_len(i)] } else { Vec::new() };
                    ops::conv2d_backward_into(
                        &grad,
                        &c,
                        &self.params[s],
                        gw[0].data_mut(),
                        rest[0].data_mut(),
                        need_input.then_some(gin.as_mut_slice()),
                    );
                    gin
                }
                Cache::Pool(c) => {
                    let mut gin = vec![0.0; self.layer_input_len(i)];
                    ops::maxpool2d_backward_into(&grad, &c, &mut gin);
                    gin
                }
                Cache::Flatten => grad,
                Cache::Dense(input) => {
                    let s = self.slots[i].expect("dense owns parameters");
                    let (gw, rest) = grads[s..].split_at_mut(1);
                    let mut gin = if need_input { vec![0.0; input.len()] } else { Vec::new() };
                    ops::dense_backward_into(
                        &grad,
                        &input,
                        &self.params[s],
                        gw[0].data_mut(),
                        rest[0].data_mut(),
                        need_input.then_some(gin.as_mut_slice()),
                    );
                    gin
                }
                Cache::Act(f, y) => activate_backward(f, &grad, &y),
            };
        }
        Ok((value, output))
    }

    /// Loss and full parameter gradient for one example.
    pub fn gradients(&self, x: &Tensor, target: &[f64], loss: LossKind) -> Result<(f64, Vec<Tensor>)> {
        let mut grads = self.zero_grads();
        let (l, _) = self.accumulate_gradients(x, target, loss, &mut grads)?;
        Ok((l, grads))
    }

    fn layer_input_len(&self, layer: usize) -> usize {
        match layer {
            0 => self.input_shape.iter().product(),
            i => self.output_shapes[i - 1].iter().product(),
        }
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect()
    }
}

pub(crate) fn activate(f: ActivationFn, x: &[f64]) -> Vec<f64> {
    match f {
        ActivationFn::Relu => ops::relu(x),
        ActivationFn::Sigmoid => ops::sigmoid(x),
        ActivationFn::Softmax => ops::softmax(x),
    }
}

fn activate_backward(f: ActivationFn, grad: &[f64], y: &[f64]) -> Vec<f64> {
    match f {
        ActivationFn::Relu => ops::relu_backward(grad, y),
        ActivationFn::Sigmoid => ops::sigmoid_backward(grad, y),
        ActivationFn::Softmax => ops::softmax_backward(grad, y),
    }
}

fn check_image_input(input_shape: &[usize]) -> Result<()> {
    match *input_shape {
        [h, w, c] if h >= 8 && w >= 8 && c >= 1 => Ok(()),
        _ => Err(Error::Shape {
            layer: 0,
            message: format!("input must be [h >= 8, w >= 8, c >= 1], got {input_shape:?}"),
        }),
    }
}

/// Three conv/pool stages (32, 64, 128 filters), dense 128, then a single
/// sigmoid unit or, for `n_outputs > 1`, a softmax over `n_outputs`.
pub fn build_classifier(input_shape: &[usize], n_outputs: usize, seed: u64) -> Result<Model> {
    use ActivationFn::*;
    check_image_input(input_shape)?;
    if n_outputs == 0 {
        return Err(Error::param("classifier needs at least one output"));
    }
    let mut layers = Vec::new();
    for filters in [32, 64, 128] {
        layers.push(LayerSpec::conv3x3(filters));
        layers.push(LayerSpec::act(Relu));
        layers.push(LayerSpec::MaxPool2d);
    }
    layers.push(LayerSpec::Flatten);
    layers.push(LayerSpec::Dense { units: 128 });
    layers.push(LayerSpec::act(Relu));
    layers.push(LayerSpec::Dense { units: n_outputs });
    layers.push(LayerSpec::act(if n_outputs == 1 { Sigmoid } else { Softmax }));
    let mut model = Model::new(input_shape.to_vec(), layers)?;
    model.init(seed);
    Ok(model)
}

/// Four 3×3 conv layers (16, 32, 16, 1) without pooling; the sigmoid output
/// is a soft mask with the input's shape.
pub fn build_denoiser(input_shape: &[usize], seed: u64) -> Result<Model> {
    use ActivationFn::*;
    check_image_input(input_shape)?;
    let layers = vec![
        LayerSpec::conv3x3(16),
        LayerSpec::act(Relu),
        LayerSpec::conv3x3(32),
        LayerSpec::act(Relu),
        LayerSpec::conv3x3(16),
        LayerSpec::act(Relu),
        LayerSpec::conv3x3(1),
        LayerSpec::act(Sigmoid),
    ];
    let mut model = Model::new(input_shape.to_vec(), layers)?;
    model.init(seed);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifier_geometry() {
        let m = build_classifier(&[129, 61, 1], 1, 7).unwrap();
        let flat = m
            .layers()
            .iter()
            .position(|l| *l == LayerSpec::Flatten)
            .unwrap();
        assert_eq!(m.layer_output_shape(flat), &[14336]);
        assert_eq!(m.layer_param_count(0), 320);
        assert_eq!(m.output_shape(), &[1]);
        assert_eq!(m.final_activation(), Some(ActivationFn::Sigmoid));
        let multi = build_classifier(&[16, 16, 1], 5, 7).unwrap();
        assert_eq!(multi.output_shape(), &[5]);
        assert_eq!(multi.final_activation(), Some(ActivationFn::Softmax));
    }

    #[test]
    fn denoiser_preserves_shape() {
        for shape in [[129, 61, 1], [8, 9, 1], [20, 11, 2]] {
            let m = build_denoiser(&shape, 1).unwrap();
            assert_eq!(m.output_shape(), &[shape[0], shape[1], 1]);
            let y = m.predict(&Tensor::zeros(shape.to_vec())).unwrap();
            assert!(y.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn rejects_small_or_noncomposing() {
        assert!(build_classifier(&[7, 61, 1], 1, 0).is_err());
        let err = Model::new(vec![4, 4, 1], vec![LayerSpec::Dense { units: 3 }]).unwrap_err();
        assert!(matches!(err, Error::Shape { layer: 0, .. }));
        let err = Model::new(
            vec![4, 4, 1],
            vec![LayerSpec::Flatten, LayerSpec::conv3x3(2)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Shape { layer: 1, .. }));
    }

    #[test]
    fn layer_spec_json() {
        let s = serde_json::to_string(&LayerSpec::conv3x3(32)).unwrap();
        assert_eq!(s, r#"{"kind":"conv2d","filters":32,"kernel_h":3,"kernel_w":3}"#);
        let a: LayerSpec = serde_json::from_str(r#"{"kind":"activation","function":"relu"}"#).unwrap();
        assert_eq!(a, LayerSpec::act(ActivationFn::Relu));
    }

    #[test]
    fn model_gradient_matches_differences() {
        let m = build_classifier(&[8, 8, 1], 1, 3).unwrap();
        let mut rng = SeededRng::new(9);
        let x = Tensor::new(vec![8, 8, 1], (0..64).map(|_| rng.uniform()).collect()).unwrap();
        let t = [1.0];
        let (_, g) = m.gradients(&x, &t, LossKind::Bce).unwrap();
        // spot-check a handful of weights in the first and last dense layers
        for (pi, idx) in [(0usize, 4usize), (1, 0), (6, 17), (8, 3)] {
            let mut hi = m.clone();
            hi.params_mut()[pi].data_mut()[idx] += 1e-5;
            let mut lo = m.clone();
            lo.params_mut()[pi].data_mut()[idx] -= 1e-5;
            let num = (hi.gradients(&x, &t, LossKind::Bce).unwrap().0
                - lo.gradients(&x, &t, LossKind::Bce).unwrap().0)
                / 2e-5;
            let ana = g[pi].data()[idx];
            let scale = num.abs().max(ana.abs());
            assert!(
                scale < 1e-9 || (num - ana).abs() / scale < 1e-4,
                "param {pi}[{idx}]: {num} vs {ana}"
            );
        }
    }
}
