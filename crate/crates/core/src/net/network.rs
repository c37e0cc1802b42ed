use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::arch::{ArchSpec, Family};
use crate::error::{Error, Result};
use crate::rng::{self, role, StreamRng};

pub const LAYERNORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitDistribution {
    #[default]
    GlorotUniform,
    Gaussian,
    UniformBall,
    LongTailed,
}

impl std::str::FromStr for InitDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "glorot" | "glorot-uniform" | "uniform" => Ok(InitDistribution::GlorotUniform),
            "gaussian" | "normal" => Ok(InitDistribution::Gaussian),
            "uniform-ball" | "ball" => Ok(InitDistribution::UniformBall),
            "long-tailed" | "student-t" => Ok(InitDistribution::LongTailed),
            _ => Err(Error::InvalidArgument(format!("unknown init distribution {s:?}"))),
        }
    }
}

/// How to draw parameters. The weight magnitude factor lives on
/// [`ArchSpec::weight_scale`] so the architecture identifier carries it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct InitSpec {
    pub distribution: InitDistribution,
    pub seed: u64,
}

impl InitSpec {
    pub fn seeded(seed: u64) -> Self {
        InitSpec { distribution: InitDistribution::GlorotUniform, seed }
    }
}

/// Glorot bound `α·sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize, scale: f64) -> f64 {
    scale * (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense { weight: Array2::zeros((fan_out, fan_in)), bias: Array1::zeros(fan_out) }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.nrows()
    }

    /// `X W^T + b` for a batch `X` of shape `n × in`.
    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub gain: Array1<f64>,
    pub offset: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub affine: Dense,
    pub gate: Option<Dense>,
    pub norm: Option<LayerNormParams>,
}

/// A sum of sines with fixed integer frequency rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLayer {
    /// One row per component, entries in `0..=max_frequency`.
    pub frequencies: Array2<f64>,
    /// Angular frequency of integer frequency 1. With `m = 2·max_frequency`
    /// grid points per axis on the endpoint-inclusive `[-1, 1]` grid, the
    /// choice `π(m−1)/m` puts integer frequency `k` exactly on DFT bin `k`.
    pub omega: f64,
    pub phase: Array1<f64>,
    pub magnitude: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Mlp { hidden: Vec<HiddenLayer>, output: Dense },
    Unbiased(FourierLayer),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    GateWeight,
    GateBias,
    NormGain,
    NormOffset,
    Phase,
    Magnitude,
}

impl ParamKind {
    /// Multiplicative parameters that count as "weights" for magnitude statistics.
    pub fn is_weight(self) -> bool {
        matches!(self, ParamKind::Weight | ParamKind::GateWeight | ParamKind::Magnitude)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    pub kind: ParamKind,
    /// Hidden-layer index; the output layer is `depth`.
    pub layer: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: ArchSpec,
    body: Body,
}

impl Network {
    pub fn init(spec: &ArchSpec, init: &InitSpec) -> Result<Self> {
        spec.validate()?;
        let body = match spec.family {
            Family::Unbiased { max_frequency } => Body::Unbiased(init_fourier(spec, max_frequency, init)),
            Family::Mlp => {
                let mut hidden = Vec::with_capacity(spec.depth);
                for l in 0..spec.depth {
                    let fan_in = if l == 0 { spec.input_dim } else { spec.width };
                    let affine = init_dense(fan_in, spec.width, spec, init, l, role::WEIGHT, role::BIAS);
                    let gate = spec
                        .gating
                        .then(|| init_dense(fan_in, spec.width, spec, init, l, role::GATE_WEIGHT, role::GATE_BIAS));
                    let norm = spec.layernorm.then(|| LayerNormParams {
                        gain: Array1::ones(spec.width),
                        offset: Array1::zeros(spec.width),
                    });
                    hidden.push(HiddenLayer { affine, gate, norm });
                }
                let output = init_dense(spec.width, 1, spec, init, spec.depth, role::WEIGHT, role::BIAS);
                Body::Mlp { hidden, output }
            }
        };
        Ok(Network { spec: *spec, body })
    }

    /// Builds a network from explicit parts; shapes are checked against `spec`.
    pub fn from_parts(spec: ArchSpec, body: Body) -> Result<Self> {
        spec.validate()?;
        let net = Network { spec, body };
        let expected = Network::init(&spec, &InitSpec::default())?.param_info();
        let got = net.param_info();
        if expected != got {
            return Err(Error::InvalidSpec("parameter shapes do not match the architecture".into()));
        }
        Ok(net)
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.spec
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn body_mut(&mut self) -> &mut Body {
        &mut self.body
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    /// Learnable tensors in canonical order.
    pub fn params(&self) -> Vec<&[f64]> {
        fn sl(a: &Array2<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        fn sv(a: &Array1<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        let mut out = Vec::new();
        match &self.body {
            Body::Mlp { hidden, output } => {
                for layer in hidden {
                    out.push(sl(&layer.affine.weight));
                    out.push(sv(&layer.affine.bias));
                    if let Some(g) = &layer.gate {
                        out.push(sl(&g.weight));
                        out.push(sv(&g.bias));
                    }
                    if let Some(n) = &layer.norm {
                        out.push(sv(&n.gain));
                        out.push(sv(&n.offset));
                    }
                }
                out.push(sl(&output.weight));
                out.push(sv(&output.bias));
            }
            Body::Unbiased(f) => {
                out.push(sv(&f.phase));
                out.push(sv(&f.magnitude));
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        fn sl(a: &mut Array2<f64>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        fn sv(a: &mut Array1<f64>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        let mut out = Vec::new();
        match &mut self.body {
            Body::Mlp { hidden, output } => {
                for layer in hidden {
                    out.push(sl(&mut layer.affine.weight));
                    out.push(sv(&mut layer.affine.bias));
                    if let Some(g) = &mut layer.gate {
                        out.push(sl(&mut g.weight));
                        out.push(sv(&mut g.bias));
                    }
                    if let Some(n) = &mut layer.norm {
                        out.push(sv(&mut n.gain));
                        out.push(sv(&mut n.offset));
                    }
                }
                out.push(sl(&mut output.weight));
                out.push(sv(&mut output.bias));
            }
            Body::Unbiased(f) => {
                out.push(sv(&mut f.phase));
                out.push(sv(&mut f.magnitude));
            }
        }
        out
    }

    /// Names, kinds and sizes matching [`Network::params`].
    pub fn param_info(&self) -> Vec<ParamInfo> {
        let mut out = Vec::new();
        let mut push = |name: String, kind, layer, len| out.push(ParamInfo { name, kind, layer, len });
        match &self.body {
            Body::Mlp { hidden, output } => {
                for (l, layer) in hidden.iter().enumerate() {
                    push(format!("h{l}.weight"), ParamKind::Weight, l, layer.affine.weight.len());
                    push(format!("h{l}.bias"), ParamKind::Bias, l, layer.affine.bias.len());
                    if let Some(g) = &layer.gate {
                        push(format!("h{l}.gate.weight"), ParamKind::GateWeight, l, g.weight.len());
                        push(format!("h{l}.gate.bias"), ParamKind::GateBias, l, g.bias.len());
                    }
                    if let Some(n) = &layer.norm {
                        push(format!("h{l}.norm.gain"), ParamKind::NormGain, l, n.gain.len());
                        push(format!("h{l}.norm.offset"), ParamKind::NormOffset, l, n.offset.len());
                    }
                }
                let l = hidden.len();
                push("out.weight".into(), ParamKind::Weight, l, output.weight.len());
                push("out.bias".into(), ParamKind::Bias, l, output.bias.len());
            }
            Body::Unbiased(f) => {
                push("fourier.phase".into(), ParamKind::Phase, 0, f.phase.len());
                push("fourier.magnitude".into(), ParamKind::Magnitude, 1, f.magnitude.len());
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// `f_θ(x)` for a single input.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(self.forward_batch(view)?[0])
    }

    /// Row-wise forward pass over an `n × d` batch.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_input(x)?;
        match &self.body {
            Body::Unbiased(f) => {
                let z = f.arguments(x);
                let y = z.mapv(f64::sin).dot(&f.magnitude);
                ensure_finite(y.view(), 0, "output")?;
                Ok(y)
            }
            Body::Mlp { hidden, output } => {
                let mut h: Array2<f64> = x.to_owned();
                for (l, layer) in hidden.iter().enumerate() {
                    h = self.hidden_forward(layer, h.view(), l, None)?;
                }
                let y = output.apply(h.view()).column(0).to_owned();
                ensure_finite(y.view(), hidden.len(), "output")?;
                Ok(y)
            }
        }
    }

    /// Forward pass that keeps every intermediate needed by the backward pass.
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(x)?;
        match &self.body {
            Body::Unbiased(f) => {
                let z = f.arguments(x);
                let s = z.mapv(f64::sin);
                let y = s.dot(&f.magnitude);
                ensure_finite(y.view(), 0, "output")?;
                Ok(ForwardCache { output: y, layers: Vec::new(), last_hidden: z })
            }
            Body::Mlp { hidden, output } => {
                let mut h: Array2<f64> = x.to_owned();
                let mut layers = Vec::with_capacity(hidden.len());
                for (l, layer) in hidden.iter().enumerate() {
                    let mut cache = LayerCache::default();
                    let next = self.hidden_forward(layer, h.view(), l, Some(&mut cache))?;
                    cache.input = std::mem::replace(&mut h, next);
                    layers.push(cache);
                }
                let y = output.apply(h.view()).column(0).to_owned();
                ensure_finite(y.view(), hidden.len(), "output")?;
                Ok(ForwardCache { output: y, layers, last_hidden: h })
            }
        }
    }

    fn check_input(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.spec.input_dim {
            return Err(Error::DimensionMismatch { expected: self.spec.input_dim, got: x.ncols() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("input contains non-finite values".into()));
        }
        Ok(())
    }

    fn hidden_forward(
        &self,
        layer: &HiddenLayer,
        h: ArrayView2<f64>,
        l: usize,
        cache: Option<&mut LayerCache>,
    ) -> Result<Array2<f64>> {
        let act = self.spec.activation;
        let p = self.spec.prefactor;
        let mut z = layer.affine.apply(h);
        ensure_finite(z.view(), l, "affine")?;
        let mut norm_state = None;
        if let Some(norm) = &layer.norm {
            let (xhat, inv_std) = normalize_rows(z.view());
            z = &xhat * &norm.gain + &norm.offset;
            norm_state = Some((xhat, inv_std));
        }
        let mut a = z.mapv(|v| act.apply(p * v));
        let gate = layer.gate.as_ref().map(|g| g.apply(h).mapv(sigmoid));
        if let Some(g) = &gate {
            a *= g;
        }
        if self.spec.residual {
            a += &z;
        }
        ensure_finite(a.view(), l, "activation")?;
        if let Some(cache) = cache {
            cache.z = z;
            cache.norm = norm_state;
            cache.gate = gate;
        }
        Ok(a)
    }
}

impl FourierLayer {
    /// `ω·(X K^T) + phase`, shape `n × components`.
    pub fn arguments(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.frequencies.t());
        z *= self.omega;
        z += &self.phase;
        z
    }

    pub fn max_frequency(&self) -> usize {
        self.frequencies.iter().fold(0.0f64, |m, &v| m.max(v)) as usize
    }
}

/// Intermediates of one hidden layer.
#[derive(Debug, Clone, Default)]
pub struct LayerCache {
    pub input: Array2<f64>,
    /// Post-normalization pre-activation (the argument of `φ(p·z)`).
    pub z: Array2<f64>,
    /// `(x̂, 1/std)` per row when layer normalization is on.
    pub norm: Option<(Array2<f64>, Array1<f64>)>,
    pub gate: Option<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub output: Array1<f64>,
    pub layers: Vec<LayerCache>,
    /// Input to the output layer (for the unbiased model: the sine arguments).
    pub last_hidden: Array2<f64>,
}

/// Zero-mean, unit-variance rows; returns `(x̂, 1/sqrt(var + eps))`.
pub fn normalize_rows(z: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let width = z.ncols() as f64;
    let mut xhat = z.to_owned();
    let mut inv_std = Array1::zeros(z.nrows());
    for (mut row, inv) in xhat.axis_iter_mut(Axis(0)).zip(inv_std.iter_mut()) {
        let mean = row.sum() / width;
        row -= mean;
        let var = row.iter().map(|v| v * v).sum::<f64>() / width;
        *inv = 1.0 / (var + LAYERNORM_EPS).sqrt();
        row *= *inv;
    }
    (xhat, inv_std)
}

fn ensure_finite(values: impl IntoIterator<Item = impl std::borrow::Borrow<f64>>, layer: usize, stage: &'static str) -> Result<()> {
    if values.into_iter().all(|v| v.borrow().is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { layer, stage })
    }
}

fn draw_weight(rng: &mut StreamRng, dist: InitDistribution, bound: f64) -> f64 {
    match dist {
        InitDistribution::GlorotUniform => bound * (2.0 * rng.random::<f64>() - 1.0),
        InitDistribution::Gaussian => {
            let z: f64 = StandardNormal.sample(rng);
            z * bound / 3f64.sqrt()
        }
        InitDistribution::LongTailed => {
            // Student-t with 3 degrees of freedom has variance 3.
            let t = StudentT::new(3.0).expect("valid dof").sample(rng);
            t * bound / 3.0
        }
        InitDistribution::UniformBall => unreachable!("drawn row-wise"),
    }
}

fn init_dense(
    fan_in: usize,
    fan_out: usize,
    spec: &ArchSpec,
    init: &InitSpec,
    layer: usize,
    weight_role: u64,
    bias_role: u64,
) -> Dense {
    let bound = glorot_bound(fan_in, fan_out, spec.weight_scale);
    let mut wrng = rng::stream(init.seed, &[layer as u64, weight_role]);
    let weight = match init.distribution {
        InitDistribution::UniformBall => {
            // Uniform in the L2 ball whose radius matches the per-entry
            // variance s²/3 of U(-s, s): E|w_i|² = R²/(n+2).
            let radius = bound * ((fan_in as f64 + 2.0) / 3.0).sqrt();
            let mut w = Array2::zeros((fan_out, fan_in));
            for mut row in w.axis_iter_mut(Axis(0)) {
                let dir: Vec<f64> = (0..fan_in).map(|_| StandardNormal.sample(&mut wrng)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let r = radius * wrng.random::<f64>().powf(1.0 / fan_in as f64);
                for (dst, v) in row.iter_mut().zip(dir) {
                    *dst = v / norm * r;
                }
            }
            w
        }
        dist => Array2::from_shape_simple_fn((fan_out, fan_in), || draw_weight(&mut wrng, dist, bound)),
    };
    let mut brng = rng::stream(init.seed, &[layer as u64, bias_role]);
    let b = spec.bias_scale;
    let bias = Array1::from_shape_simple_fn(fan_out, || b * (2.0 * brng.random::<f64>() - 1.0));
    Dense { weight, bias }
}

fn init_fourier(spec: &ArchSpec, max_frequency: usize, init: &InitSpec) -> FourierLayer {
    let d = spec.input_dim;
    let per_axis = max_frequency + 1;
    let count = per_axis.pow(d as u32);
    // Row j enumerates {0..=K}^d in row-major order, last axis fastest.
    let frequencies = Array2::from_shape_fn((count, d), |(j, axis)| {
        let stride = per_axis.pow((d - 1 - axis) as u32);
        ((j / stride) % per_axis) as f64
    });
    // Integer frequency k lands on DFT bin k of an endpoint-inclusive 2K-point grid.
    let m = 2.0 * max_frequency.max(1) as f64;
    let omega = PI * (m - 1.0) / m;
    let mut prng = rng::stream(init.seed, &[0, role::PHASE]);
    let phase = Array1::from_shape_simple_fn(count, || PI * (2.0 * prng.random::<f64>() - 1.0));
    let bound = glorot_bound(count, 1, spec.weight_scale);
    let mut mrng = rng::stream(init.seed, &[1, role::MAGNITUDE]);
    let magnitude = match init.distribution {
        InitDistribution::UniformBall => {
            let radius = bound * ((count as f64 + 2.0) / 3.0).sqrt();
            let dir: Vec<f64> = (0..count).map(|_| StandardNormal.sample(&mut mrng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r = radius * mrng.random::<f64>().powf(1.0 / count as f64);
            Array1::from_iter(dir.into_iter().map(|v| v / norm * r))
        }
        dist => Array1::from_shape_simple_fn(count, || draw_weight(&mut mrng, dist, bound)),
    };
    FourierLayer { frequencies, omega, phase, magnitude }
}

/// Builds a network whose layers are given explicitly, used by tests and the
/// checkpoint reader.
pub fn mlp_from_layers(spec: ArchSpec, hidden: Vec<HiddenLayer>, output: Dense) -> Result<Network> {
    Network::from_parts(spec, Body::Mlp { hidden, output })
}
