use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::init::{init_weights, InitScheme};
use super::layers::{
    conv2d_backward_accumulate, conv2d_forward, dense_backward_accumulate, dense_forward, maxpool_backward,
    maxpool_forward, softmax, tanh_backward, tanh_forward, window_output,
};
use super::tensor::{Scalar, Tensor};
use super::CnnError;

/// Convolution, tanh, then max pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlock {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub pool_window: usize,
    pub pool_stride: usize,
}

impl ConvBlock {
    pub const fn new(filters: usize, kernel: usize, stride: usize, padding: usize, pool_window: usize, pool_stride: usize) -> Self {
        ConvBlock {
            filters,
            kernel,
            stride,
            padding,
            pool_window,
            pool_stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// `(channels, height, width)`.
    pub input: (usize, usize, usize),
    pub blocks: Vec<ConvBlock>,
    /// Hidden dense widths, each followed by tanh.
    pub hidden: Vec<usize>,
    pub classes: usize,
    #[serde(default)]
    pub init: InitScheme,
}

/// Output shape of one layer, per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ModelConfig {
    /// Five conv/tanh/pool blocks (96, 256, 384, 384, 256 filters) on a
    /// 227x227 grayscale input, then dense 4096, 4096 and `classes`.
    pub fn alexnet(classes: usize) -> Self {
        ModelConfig {
            input: (1, 227, 227),
            blocks: vec![
                ConvBlock::new(96, 11, 4, 0, 3, 2),
                ConvBlock::new(256, 5, 1, 2, 3, 2),
                ConvBlock::new(384, 3, 1, 1, 3, 2),
                ConvBlock::new(384, 3, 1, 1, 3, 2),
                ConvBlock::new(256, 3, 1, 1, 2, 2),
            ],
            hidden: vec![4096, 4096],
            classes,
            init: InitScheme::GlorotNormal,
        }
    }

    /// A small two-block network for quick experiments on `(height, width)`
    /// grayscale inputs of at least 8x8.
    pub fn compact(height: usize, width: usize, classes: usize) -> Self {
        ModelConfig {
            input: (1, height, width),
            blocks: vec![ConvBlock::new(8, 5, 2, 2, 2, 2), ConvBlock::new(16, 3, 1, 1, 2, 2)],
            hidden: vec![32],
            classes,
            init: InitScheme::GlorotNormal,
        }
    }

    /// Per-sample output shape of every layer, in order.
    pub fn shape_chain(&self) -> Result<Vec<LayerShape>, CnnError> {
        let (c, mut h, mut w) = self.input;
        if c == 0 || h == 0 || w == 0 {
            return Err(CnnError::Config(format!("input {:?} has a zero dimension", self.input)));
        }
        if self.classes < 2 {
            return Err(CnnError::Config(format!("need at least 2 classes, got {}", self.classes)));
        }
        let mut chain = Vec::new();
        let mut channels = c;
        for (i, b) in self.blocks.iter().enumerate() {
            let n = i + 1;
            if b.filters == 0 {
                return Err(CnnError::Config(format!("conv{n} has no filters")));
            }
            let fit = |size: usize, k: usize, s: usize, p: usize, what: &str| {
                window_output(size, k, s, p)
                    .ok_or_else(|| CnnError::Config(format!("{what}{n}: window {k} stride {s} does not fit size {size}")))
            };
            h = fit(h, b.kernel, b.stride, b.padding, "conv")?;
            w = fit(w, b.kernel, b.stride, b.padding, "conv")?;
            channels = b.filters;
            chain.push(LayerShape {
                name: format!("conv{n}"),
                shape: vec![channels, h, w],
            });
            chain.push(LayerShape {
                name: format!("tanh_conv{n}"),
                shape: vec![channels, h, w],
            });
            h = fit(h, b.pool_window, b.pool_stride, 0, "pool")?;
            w = fit(w, b.pool_window, b.pool_stride, 0, "pool")?;
            chain.push(LayerShape {
                name: format!("pool{n}"),
                shape: vec![channels, h, w],
            });
        }
        chain.push(LayerShape {
            name: "flatten".into(),
            shape: vec![channels * h * w],
        });
        for (i, &units) in self.hidden.iter().enumerate() {
            if units == 0 {
                return Err(CnnError::Config(format!("dense{} has no units", i + 1)));
            }
            chain.push(LayerShape {
                name: format!("dense{}", i + 1),
                shape: vec![units],
            });
            chain.push(LayerShape {
                name: format!("tanh_dense{}", i + 1),
                shape: vec![units],
            });
        }
        chain.push(LayerShape {
            name: format!("dense{}", self.hidden.len() + 1),
            shape: vec![self.classes],
        });
        Ok(chain)
    }

    pub fn parameter_count(&self) -> Result<usize, CnnError> {
        let chain = self.shape_chain()?;
        let mut total = 0;
        let mut channels = self.input.0;
        for b in &self.blocks {
            total += b.filters * channels * b.kernel * b.kernel + b.filters;
            channels = b.filters;
        }
        let mut features = chain
            .iter()
            .find(|l| l.name == "flatten")
            .map(|l| l.shape[0])
            .expect("chain has a flatten layer");
        for &units in self.hidden.iter().chain(std::iter::once(&self.classes)) {
            total += units * features + units;
            features = units;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Param<T: Scalar> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Scalar> Param<T> {
    fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param { value, grad }
    }
}

#[derive(Debug, Clone)]
enum Layer<T: Scalar> {
    Conv {
        weights: Param<T>,
        bias: Param<T>,
        stride: usize,
        padding: usize,
        input: Option<Tensor<T>>,
    },
    Tanh {
        output: Option<Tensor<T>>,
    },
    Pool {
        window: usize,
        stride: usize,
        argmax: Vec<usize>,
        input_shape: Vec<usize>,
    },
    Flatten {
        input_shape: Vec<usize>,
    },
    Dense {
        weights: Param<T>,
        bias: Param<T>,
        input: Option<Tensor<T>>,
    },
}

/// Network parameters and per-layer caches for backpropagation.
#[derive(Debug, Clone)]
pub struct Network<T: Scalar = f32> {
    config: ModelConfig,
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Network<T> {
    /// Builds the network and draws initial weights from `seed`; biases start at zero.
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self, CnnError> {
        config.shape_chain()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut channels = config.input.0;
        let (_, mut h, mut w) = config.input;
        for b in &config.blocks {
            let k = b.kernel;
            let shape = [b.filters, channels, k, k];
            let weights = init_weights(config.init, &shape, channels * k * k, b.filters * k * k, &mut rng);
            layers.push(Layer::Conv {
                weights: Param::new(weights),
                bias: Param::new(Tensor::zeros(&[b.filters])),
                stride: b.stride,
                padding: b.padding,
                input: None,
            });
            layers.push(Layer::Tanh { output: None });
            layers.push(Layer::Pool {
                window: b.pool_window,
                stride: b.pool_stride,
                argmax: Vec::new(),
                input_shape: Vec::new(),
            });
            channels = b.filters;
            h = window_output(h, k, b.stride, b.padding).expect("checked by shape_chain");
            w = window_output(w, k, b.stride, b.padding).expect("checked by shape_chain");
            h = window_output(h, b.pool_window, b.pool_stride, 0).expect("checked by shape_chain");
            w = window_output(w, b.pool_window, b.pool_stride, 0).expect("checked by shape_chain");
        }
        layers.push(Layer::Flatten { input_shape: Vec::new() });
        let mut features = channels * h * w;
        let widths: Vec<usize> = config.hidden.iter().copied().chain([config.classes]).collect();
        for (i, &units) in widths.iter().enumerate() {
            let weights = init_weights(config.init, &[units, features], features, units, &mut rng);
            layers.push(Layer::Dense {
                weights: Param::new(weights),
                bias: Param::new(Tensor::zeros(&[units])),
                input: None,
            });
            if i + 1 < widths.len() {
                layers.push(Layer::Tanh { output: None });
            }
            features = units;
        }
        Ok(Network {
            config: config.clone(),
            layers,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(), CnnError> {
        let (c, h, w) = self.config.input;
        match *x.shape() {
            [_, xc, xh, xw] if (xc, xh, xw) == (c, h, w) => Ok(()),
            ref s => Err(CnnError::Shape(format!("network expects [N, {c}, {h}, {w}] input, got {s:?}"))),
        }
    }

    /// Logits for a batch, without touching the backpropagation caches.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, CnnError> {
        self.check_input(x)?;
        let mut a = x.clone();
        for layer in &self.layers {
            a = match layer {
                Layer::Conv {
                    weights,
                    bias,
                    stride,
                    padding,
                    ..
                } => conv2d_forward(&a, &weights.value, &bias.value, *stride, *padding)?,
                Layer::Tanh { .. } => tanh_forward(&a),
                Layer::Pool { window, stride, .. } => maxpool_forward(&a, *window, *stride)?.output,
                Layer::Flatten { .. } => {
                    let n = a.shape()[0];
                    let f = a.len() / n.max(1);
                    a.reshape(&[n, f])?
                }
                Layer::Dense { weights, bias, .. } => dense_forward(&a, &weights.value, &bias.value)?,
            };
        }
        Ok(a)
    }

    /// Class probabilities for a batch.
    pub fn predict_proba(&self, x: &Tensor<T>) -> Result<Tensor<T>, CnnError> {
        softmax(&self.forward(x)?)
    }

    /// Forward pass that keeps what [`Network::backward`] needs.
    pub fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, CnnError> {
        self.check_input(x)?;
        let mut a = x.clone();
        for layer in &mut self.layers {
            a = match layer {
                Layer::Conv {
                    weights,
                    bias,
                    stride,
                    padding,
                    input,
                } => {
                    let out = conv2d_forward(&a, &weights.value, &bias.value, *stride, *padding)?;
                    *input = Some(a);
                    out
                }
                Layer::Tanh { output } => {
                    let out = tanh_forward(&a);
                    *output = Some(out.clone());
                    out
                }
                Layer::Pool {
                    window,
                    stride,
                    argmax,
                    input_shape,
                } => {
                    let p = maxpool_forward(&a, *window, *stride)?;
                    *argmax = p.argmax;
                    *input_shape = a.shape().to_vec();
                    p.output
                }
                Layer::Flatten { input_shape } => {
                    *input_shape = a.shape().to_vec();
                    let n = a.shape()[0];
                    let f = a.len() / n.max(1);
                    a.reshape(&[n, f])?
                }
                Layer::Dense { weights, bias, input } => {
                    let out = dense_forward(&a, &weights.value, &bias.value)?;
                    *input = Some(a);
                    out
                }
            };
        }
        Ok(a)
    }

    /// Backpropagates the loss gradient w.r.t. the logits, accumulating
    /// parameter gradients. Returns the gradient w.r.t. the network input.
    pub fn backward(&mut self, grad_logits: &Tensor<T>) -> Result<Tensor<T>, CnnError> {
        let missing = || CnnError::Shape("backward called without a preceding forward_train".into());
        let mut g = grad_logits.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let want_input = i > 0;
            g = match layer {
                Layer::Conv {
                    weights,
                    bias,
                    stride,
                    padding,
                    input,
                } => {
                    let x = input.take().ok_or_else(missing)?;
                    let gi = conv2d_backward_accumulate(
                        &x,
                        &weights.value,
                        &g,
                        *stride,
                        *padding,
                        &mut weights.grad,
                        &mut bias.grad,
                        want_input,
                    )?;
                    gi.unwrap_or_else(|| Tensor::zeros(x.shape()))
                }
                Layer::Tanh { output } => tanh_backward(&output.take().ok_or_else(missing)?, &g)?,
                Layer::Pool { argmax, input_shape, .. } => {
                    if input_shape.is_empty() {
                        return Err(missing());
                    }
                    let gi = maxpool_backward(input_shape, argmax, &g)?;
                    argmax.clear();
                    input_shape.clear();
                    gi
                }
                Layer::Flatten { input_shape } => {
                    if input_shape.is_empty() {
                        return Err(missing());
                    }
                    let shape = std::mem::take(input_shape);
                    g.reshape(&shape)?
                }
                Layer::Dense { weights, bias, input } => {
                    let x = input.take().ok_or_else(missing)?;
                    let gi = dense_backward_accumulate(&x, &weights.value, &g, &mut weights.grad, &mut bias.grad, want_input)?;
                    gi.unwrap_or_else(|| Tensor::zeros(x.shape()))
                }
            };
        }
        Ok(g)
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Layer::Conv { weights, bias, .. } | Layer::Dense { weights, bias, .. } = layer {
                out.push(weights);
                out.push(bias);
            }
        }
        out
    }

    /// `(name, tensor)` for every parameter, in a fixed order.
    pub fn parameters(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        let (mut conv, mut dense) = (0, 0);
        for layer in &self.layers {
            match layer {
                Layer::Conv { weights, bias, .. } => {
                    conv += 1;
                    out.push((format!("conv{conv}.weight"), &weights.value));
                    out.push((format!("conv{conv}.bias"), &bias.value));
                }
                Layer::Dense { weights, bias, .. } => {
                    dense += 1;
                    out.push((format!("dense{dense}.weight"), &weights.value));
                    out.push((format!("dense{dense}.bias"), &bias.value));
                }
                _ => {}
            }
        }
        out
    }

    /// Gradients accumulated since the last [`Network::zero_grads`], in
    /// [`Network::parameters`] order.
    pub fn gradients(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let Layer::Conv { weights, bias, .. } | Layer::Dense { weights, bias, .. } = layer {
                out.push(&weights.grad);
                out.push(&bias.grad);
            }
        }
        out
    }

    /// Replaces parameter values, in [`Network::parameters`] order.
    pub fn set_parameters(&mut self, values: Vec<Tensor<T>>) -> Result<(), CnnError> {
        let mut params = self.params_mut();
        if params.len() != values.len() {
            return Err(CnnError::Shape(format!(
                "{} tensors supplied for {} parameters",
                values.len(),
                params.len()
            )));
        }
        for (p, v) in params.iter().zip(&values) {
            if p.value.shape() != v.shape() {
                return Err(CnnError::Shape(format!(
                    "parameter shape {:?} does not match {:?}",
                    v.shape(),
                    p.value.shape()
                )));
            }
        }
        for (p, v) in params.iter_mut().zip(values) {
            p.value = v;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(T::zero());
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|(_, t)| t.len()).sum()
    }

    /// Same network at another precision, without caches.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let mut net = Network::<U>::new(&self.config, 0).expect("config already validated");
        let values = self.parameters().into_iter().map(|(_, t)| t.cast()).collect();
        net.set_parameters(values).expect("same architecture");
        net
    }
}
