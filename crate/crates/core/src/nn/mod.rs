//! A small classifier with hand-written reverse-mode gradients.
//!
//! Layers operate on flat `f64` buffers. Image inputs keep the HWC
//! interleaved layout of [`ImageTensor`], and conv stages produce HWC
//! feature maps, so flattening is free.

mod checkpoint;
mod loss;
mod optim;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, invalid, Result};
use crate::rng::{self, purpose};
use crate::tensor::ImageTensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, sidecar_path};
pub use loss::{argmax, cross_entropy, log_softmax_t, softmax_t};
pub use optim::{LrSchedule, Sgd, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// `y = xW + b`, `W` stored row-major as `fan_in × fan_out`.
    Dense { fan_in: usize, fan_out: usize },
    /// Zero-padded 3×3 convolution, ReLU, then 2×2 average pooling (stride 2,
    /// trailing odd row/column dropped). Weights stored as `[ky][kx][ic][oc]`.
    ConvPool {
        height: usize,
        width: usize,
        in_channels: usize,
        out_channels: usize,
    },
}

impl LayerKind {
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Dense { fan_in, .. } => fan_in,
            LayerKind::ConvPool {
                height,
                width,
                in_channels,
                ..
            } => height * width * in_channels,
        }
    }

    pub fn fan_out(&self) -> usize {
        match *self {
            LayerKind::Dense { fan_out, .. } => fan_out,
            LayerKind::ConvPool {
                height,
                width,
                out_channels,
                ..
            } => (height / 2) * (width / 2) * out_channels,
        }
    }

    fn weight_len(&self) -> usize {
        match *self {
            LayerKind::Dense { fan_in, fan_out } => fan_in * fan_out,
            LayerKind::ConvPool {
                in_channels,
                out_channels,
                ..
            } => 9 * in_channels * out_channels,
        }
    }

    fn bias_len(&self) -> usize {
        match *self {
            LayerKind::Dense { fan_out, .. } => fan_out,
            LayerKind::ConvPool { out_channels, .. } => out_channels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(kind: LayerKind, activation: Activation) -> Self {
        Self {
            kind,
            activation,
            weights: vec![0.0; kind.weight_len()],
            biases: vec![0.0; kind.bias_len()],
        }
    }

    fn forward(&self, x: &[f64], pre: &mut Vec<f64>) -> Vec<f64> {
        match self.kind {
            LayerKind::Dense { fan_in, fan_out } => {
                pre.clear();
                pre.extend_from_slice(&self.biases);
                for (i, &xi) in x[..fan_in].iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &self.weights[i * fan_out..(i + 1) * fan_out];
                    for (p, w) in pre.iter_mut().zip(row) {
                        *p += xi * w;
                    }
                }
                pre.iter().map(|&v| activate(self.activation, v)).collect()
            }
            LayerKind::ConvPool {
                height,
                width,
                in_channels,
                out_channels,
            } => {
                conv3x3(
                    x,
                    &self.weights,
                    &self.biases,
                    height,
                    width,
                    in_channels,
                    out_channels,
                    pre,
                );
                let act: Vec<f64> = pre.iter().map(|&v| activate(self.activation, v)).collect();
                avg_pool2(&act, height, width, out_channels)
            }
        }
    }

    /// Accumulates parameter gradients into `gw`/`gb` and returns dL/dx.
    fn backward(&self, x: &[f64], pre: &[f64], dy: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
        match self.kind {
            LayerKind::Dense { fan_in, fan_out } => {
                let dpre: Vec<f64> = dy
                    .iter()
                    .zip(pre)
                    .map(|(&g, &p)| g * activation_slope(self.activation, p))
                    .collect();
                for (b, d) in gb.iter_mut().zip(&dpre) {
                    *b += d;
                }
                let mut dx = vec![0.0; fan_in];
                for i in 0..fan_in {
                    let xi = x[i];
                    let row = &self.weights[i * fan_out..(i + 1) * fan_out];
                    let grow = &mut gw[i * fan_out..(i + 1) * fan_out];
                    let mut acc = 0.0;
                    for o in 0..fan_out {
                        grow[o] += xi * dpre[o];
                        acc += row[o] * dpre[o];
                    }
                    dx[i] = acc;
                }
                dx
            }
            LayerKind::ConvPool {
                height,
                width,
                in_channels,
                out_channels,
            } => {
                let dact = avg_pool2_backward(dy, height, width, out_channels);
                let dpre: Vec<f64> = dact
                    .iter()
                    .zip(pre)
                    .map(|(&g, &p)| g * activation_slope(self.activation, p))
                    .collect();
                conv3x3_backward(
                    x,
                    &self.weights,
                    &dpre,
                    height,
                    width,
                    in_channels,
                    out_channels,
                    gw,
                    gb,
                )
            }
        }
    }
}

fn activate(a: Activation, v: f64) -> f64 {
    match a {
        Activation::Relu => v.max(0.0),
        Activation::Identity => v,
    }
}

fn activation_slope(a: Activation, v: f64) -> f64 {
    match a {
        Activation::Relu => {
            if v > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Identity => 1.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn conv3x3(x: &[f64], w: &[f64], b: &[f64], h: usize, wd: usize, ic: usize, oc: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(h * wd * oc, 0.0);
    for y in 0..h {
        for xx in 0..wd {
            let o = &mut out[(y * wd + xx) * oc..(y * wd + xx + 1) * oc];
            o.copy_from_slice(b);
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= wd as isize {
                        continue;
                    }
                    let src = (sy as usize * wd + sx as usize) * ic;
                    for c in 0..ic {
                        let v = x[src + c];
                        let wrow = &w[((ky * 3 + kx) * ic + c) * oc..((ky * 3 + kx) * ic + c + 1) * oc];
                        for (acc, wv) in o.iter_mut().zip(wrow) {
                            *acc += v * wv;
                        }
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv3x3_backward(
    x: &[f64],
    w: &[f64],
    dpre: &[f64],
    h: usize,
    wd: usize,
    ic: usize,
    oc: usize,
    gw: &mut [f64],
    gb: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; h * wd * ic];
    for y in 0..h {
        for xx in 0..wd {
            let d = &dpre[(y * wd + xx) * oc..(y * wd + xx + 1) * oc];
            for (g, dv) in gb.iter_mut().zip(d) {
                *g += dv;
            }
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= wd as isize {
                        continue;
                    }
                    let src = (sy as usize * wd + sx as usize) * ic;
                    for c in 0..ic {
                        let base = ((ky * 3 + kx) * ic + c) * oc;
                        let v = x[src + c];
                        let mut acc = 0.0;
                        for k in 0..oc {
                            gw[base + k] += v * d[k];
                            acc += w[base + k] * d[k];
                        }
                        dx[src + c] += acc;
                    }
                }
            }
        }
    }
    dx
}

fn avg_pool2(x: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; oh * ow * c];
    for y in 0..oh {
        for xx in 0..ow {
            for k in 0..c {
                let at = |yy: usize, xc: usize| x[(yy * w + xc) * c + k];
                out[(y * ow + xx) * c + k] = 0.25
                    * (at(2 * y, 2 * xx) + at(2 * y, 2 * xx + 1) + at(2 * y + 1, 2 * xx) + at(2 * y + 1, 2 * xx + 1));
            }
        }
    }
    out
}

fn avg_pool2_backward(dy: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut dx = vec![0.0; h * w * c];
    for y in 0..oh {
        for xx in 0..ow {
            for k in 0..c {
                let g = 0.25 * dy[(y * ow + xx) * c + k];
                for (dy_, dx_) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    dx[((2 * y + dy_) * w + 2 * xx + dx_) * c + k] = g;
                }
            }
        }
    }
    dx
}

/// Declarative description used to build and check models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Output channels of each conv + pool stage, applied before flattening.
    #[serde(default)]
    pub conv_channels: Vec<usize>,
    /// Hidden widths of the ReLU dense layers.
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl Architecture {
    /// flatten → 256 → 128 → head.
    pub fn mlp(height: usize, width: usize, channels: usize, classes: usize) -> Self {
        Self {
            height,
            width,
            channels,
            conv_channels: Vec::new(),
            hidden: vec![256, 128],
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            return Err(config("architecture: input dimensions must be positive"));
        }
        if self.classes < 2 {
            return Err(config("architecture: need at least 2 classes"));
        }
        if self.hidden.contains(&0) || self.conv_channels.contains(&0) {
            return Err(config("architecture: layer widths must be positive"));
        }
        let (mut h, mut w) = (self.height, self.width);
        for _ in &self.conv_channels {
            if h < 2 || w < 2 {
                return Err(config("architecture: too many conv stages for the input size"));
            }
            h /= 2;
            w /= 2;
        }
        Ok(())
    }

    fn kinds(&self) -> Vec<(LayerKind, Activation)> {
        let mut out = Vec::new();
        let (mut h, mut w, mut c) = (self.height, self.width, self.channels);
        for &oc in &self.conv_channels {
            out.push((
                LayerKind::ConvPool {
                    height: h,
                    width: w,
                    in_channels: c,
                    out_channels: oc,
                },
                Activation::Relu,
            ));
            h /= 2;
            w /= 2;
            c = oc;
        }
        let mut fan_in = h * w * c;
        for &n in &self.hidden {
            out.push((LayerKind::Dense { fan_in, fan_out: n }, Activation::Relu));
            fan_in = n;
        }
        out.push((
            LayerKind::Dense {
                fan_in,
                fan_out: self.classes,
            },
            Activation::Identity,
        ));
        out
    }
}

/// Input shape plus an ordered layer stack ending in a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    input: (usize, usize, usize),
    layers: Vec<Layer>,
}

/// Activations recorded by [`Model::forward`], consumed by [`Model::backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Cache {
    /// Which ReLU units were strictly active, in layer order. Two forwards
    /// with the same pattern are in the same linear piece of the network.
    pub fn relu_pattern(&self, model: &Model) -> Vec<bool> {
        model
            .layers
            .iter()
            .zip(&self.pre)
            .filter(|(l, _)| l.activation == Activation::Relu)
            .flat_map(|(_, p)| p.iter().map(|&v| v > 0.0))
            .collect()
    }
}

/// Parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: model.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Weights then biases, layer by layer; same order as [`Model::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

impl Model {
    /// He-uniform weights for ReLU layers, LeCun-uniform for the head,
    /// zero biases.
    pub fn new(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng::stream(seed, purpose::INIT, 0);
        let layers = arch
            .kinds()
            .into_iter()
            .map(|(kind, act)| {
                let mut layer = Layer::zeros(kind, act);
                let fan_in = match kind {
                    LayerKind::Dense { fan_in, .. } => fan_in,
                    LayerKind::ConvPool { in_channels, .. } => 9 * in_channels,
                } as f64;
                let gain = match act {
                    Activation::Relu => 6.0,
                    Activation::Identity => 3.0,
                };
                let bound = (gain / fan_in).sqrt();
                for w in &mut layer.weights {
                    *w = rng.random_range(-bound..bound);
                }
                layer
            })
            .collect();
        Ok(Self {
            input: (arch.height, arch.width, arch.channels),
            layers,
        })
    }

    /// Assembles a model from explicit layers, checking that dimensions chain.
    pub fn from_layers(input: (usize, usize, usize), layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("model needs at least one layer"));
        }
        let mut expect = input.0 * input.1 * input.2;
        for (i, l) in layers.iter().enumerate() {
            if l.kind.fan_in() != expect {
                return Err(invalid(format!(
                    "layer {i} expects {} inputs, previous layer yields {expect}",
                    l.kind.fan_in()
                )));
            }
            if l.weights.len() != l.kind.weight_len() || l.biases.len() != l.kind.bias_len() {
                return Err(invalid(format!("layer {i} parameter lengths do not match its kind")));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(invalid(format!("layer {i} has non-finite parameters")));
            }
            expect = l.kind.fan_out();
        }
        if matches!(layers[0].kind, LayerKind::ConvPool { height, width, in_channels, .. } if (height, width, in_channels) != input)
        {
            return Err(invalid("conv stage does not match the input shape"));
        }
        Ok(Self { input, layers })
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input
    }

    pub fn input_len(&self) -> usize {
        self.input.0 * self.input.1 * self.input.2
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.kind.fan_out())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// True when `other` has the same input shape and layer structure.
    pub fn congruent(&self, other: &Model) -> bool {
        self.input == other.input
            && self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.kind == b.kind && a.activation == b.activation)
    }

    pub fn forward_flat(&self, x: &[f64]) -> Result<(Vec<f64>, Cache)> {
        if x.len() != self.input_len() {
            return Err(invalid(format!(
                "input has {} values, model expects {}",
                x.len(),
                self.input_len()
            )));
        }
        let mut cache = Cache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut cur = x.to_vec();
        for l in &self.layers {
            let mut pre = Vec::new();
            let out = l.forward(&cur, &mut pre);
            cache.inputs.push(cur);
            cache.pre.push(pre);
            cur = out;
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite logits"));
        }
        Ok((cur, cache))
    }

    pub fn forward(&self, image: &ImageTensor) -> Result<(Vec<f64>, Cache)> {
        if image.shape() != self.input {
            return Err(invalid(format!(
                "image shape {:?} does not match model input {:?}",
                image.shape(),
                self.input
            )));
        }
        self.forward_flat(image.data())
    }

    pub fn logits(&self, image: &ImageTensor) -> Result<Vec<f64>> {
        self.forward(image).map(|(z, _)| z)
    }

    /// Backpropagates `upstream` = dL/dlogits, adds parameter gradients into
    /// `grads`, and returns dL/dinput.
    pub fn backward(&self, cache: &Cache, upstream: &[f64], grads: &mut Gradients) -> Result<Vec<f64>> {
        if cache.inputs.len() != self.layers.len()
            || upstream.len() != self.num_classes()
            || grads.weights.len() != self.layers.len()
            || cache
                .inputs
                .iter()
                .zip(&self.layers)
                .any(|(x, l)| x.len() != l.kind.fan_in())
        {
            return Err(invalid("cache or gradient buffers do not match the model"));
        }
        let mut d = upstream.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            d = l.backward(
                &cache.inputs[k],
                &cache.pre[k],
                &d,
                &mut grads.weights[k],
                &mut grads.biases[k],
            );
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(conv: bool) -> Model {
        let arch = Architecture {
            height: 4,
            width: 4,
            channels: 2,
            conv_channels: if conv { vec![3] } else { vec![] },
            hidden: vec![5],
            classes: 3,
        };
        let mut m = Model::new(&arch, 7).unwrap();
        let mut r = rng::stream(1, 0, 0);
        for l in m.layers_mut() {
            for b in &mut l.biases {
                *b = r.random_range(-0.3..0.3);
            }
        }
        m
    }

    fn input(seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0, 1);
        (0..32).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    fn loss(m: &Model, x: &[f64], y: usize) -> f64 {
        cross_entropy(&m.forward_flat(x).unwrap().0, y).unwrap().0
    }

    #[test]
    fn zero_head_gives_equal_logits() {
        let mut m = tiny(false);
        let head = m.layers_mut().last_mut().unwrap();
        head.weights.iter_mut().for_each(|w| *w = 0.0);
        head.biases.iter_mut().for_each(|b| *b = 0.0);
        let z = m.forward_flat(&input(0)).unwrap().0;
        assert!(z.iter().all(|&v| v == z[0]));
    }

    #[test]
    fn identity_layer_passes_input() {
        let mut layer = Layer::zeros(LayerKind::Dense { fan_in: 3, fan_out: 3 }, Activation::Identity);
        for i in 0..3 {
            layer.weights[i * 3 + i] = 1.0;
        }
        let m = Model::from_layers((1, 3, 1), vec![layer]).unwrap();
        assert_eq!(m.forward_flat(&[0.5, -2.0, 3.0]).unwrap().0, vec![0.5, -2.0, 3.0]);
    }

    #[test]
    fn forward_is_deterministic_and_checks_shape() {
        let m = tiny(true);
        let x = input(3);
        assert_eq!(m.forward_flat(&x).unwrap().0, m.forward_flat(&x).unwrap().0);
        assert!(m.forward_flat(&x[..31]).is_err());
        let img = ImageTensor::zeros(4, 4, 1).unwrap();
        assert!(m.forward(&img).is_err());
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let m = tiny(true);
        let (_, cache) = m.forward_flat(&input(2)).unwrap();
        let mut g = Gradients::zeros_like(&m);
        let dx = m.backward(&cache, &[0.0; 3], &mut g).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    fn check_grads(conv: bool) {
        let h = 1e-5;
        for seed in 0..5 {
            let m = tiny(conv);
            let x = input(seed);
            let y = seed as usize % 3;
            let (z, cache) = m.forward_flat(&x).unwrap();
            let pattern = cache.relu_pattern(&m);
            let (_, dz) = cross_entropy(&z, y).unwrap();
            let mut g = Gradients::zeros_like(&m);
            let dx = m.backward(&cache, &dz, &mut g).unwrap();
            let analytic = g.flat();
            let base = m.flat_params();
            let mut checked = 0;
            for i in 0..base.len() {
                let mut plus = m.clone();
                let mut minus = m.clone();
                let mut p = base.clone();
                p[i] += h;
                plus.set_flat_params(&p).unwrap();
                p[i] -= 2.0 * h;
                minus.set_flat_params(&p).unwrap();
                let kink = plus.forward_flat(&x).unwrap().1.relu_pattern(&plus) != pattern
                    || minus.forward_flat(&x).unwrap().1.relu_pattern(&minus) != pattern;
                if kink {
                    continue;
                }
                let fd = (loss(&plus, &x, y) - loss(&minus, &x, y)) / (2.0 * h);
                let err = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6);
                assert!(err < 1e-4, "param {i}: fd {fd} vs {}", analytic[i]);
                checked += 1;
            }
            assert!(checked as f64 >= 0.99 * base.len() as f64);
            for j in 0..x.len() {
                let mut xp = x.clone();
                xp[j] += h;
                let mut xm = x.clone();
                xm[j] -= h;
                let fd = (loss(&m, &xp, y) - loss(&m, &xm, y)) / (2.0 * h);
                let err = (fd - dx[j]).abs() / fd.abs().max(dx[j].abs()).max(1e-6);
                assert!(err < 1e-4, "input {j}: fd {fd} vs {}", dx[j]);
            }
        }
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        check_grads(false);
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        check_grads(true);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut m = tiny(true);
        let p = m.flat_params();
        m.set_flat_params(&p).unwrap();
        assert_eq!(m.flat_params(), p);
        assert!(m.set_flat_params(&p[1..]).is_err());
    }

    #[test]
    fn architecture_rejects_bad_shapes() {
        let mut a = Architecture::mlp(4, 4, 1, 3);
        assert!(a.validate().is_ok());
        a.conv_channels = vec![2, 2, 2];
        assert!(a.validate().is_err());
        a.conv_channels.clear();
        a.classes = 1;
        assert!(a.validate().is_err());
    }
}
