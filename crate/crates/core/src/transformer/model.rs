//! GPT-2-style decoder in `f32`: learned token and position embeddings,
//! pre-layernorm blocks (attention, then MLP), a final layernorm and an
//! unembedding tied to the token embedding.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::ActivationKind;
use crate::rng::{self, role};

const LN_EPS: f32 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub vocab_size: usize,
    pub context: usize,
    pub activation: ActivationKind,
    /// Gain of every block layernorm.
    pub ln_scaling: f64,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig {
            n_layers: 6,
            d_model: 256,
            n_heads: 8,
            vocab_size: 5000,
            context: 128,
            activation: ActivationKind::Gelu,
            ln_scaling: 1.0,
            init_std: 0.02,
            seed: 0,
        }
    }
}

impl TransformerConfig {
    /// GPT-2 small dimensions.
    pub fn gpt2_small() -> Self {
        TransformerConfig { n_layers: 12, d_model: 768, n_heads: 12, vocab_size: 50257, context: 1024, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return bad(format!("d_model {} is not divisible into {} heads", self.d_model, self.n_heads));
        }
        if self.vocab_size < 2 || self.context < 2 {
            return bad(format!("need vocab >= 2 and context >= 2 (got {}, {})", self.vocab_size, self.context));
        }
        if !(self.ln_scaling >= 0.0 && self.ln_scaling.is_finite()) {
            return bad(format!("layernorm scaling must be finite and >= 0 (got {})", self.ln_scaling));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return bad(format!("init std must be finite and >= 0 (got {})", self.init_std));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// `V·d + C·d + L·(12d² + 13d) + 2d`.
    pub fn param_count(&self) -> usize {
        let (d, l) = (self.d_model, self.n_layers);
        self.vocab_size * d + self.context * d + l * (12 * d * d + 13 * d) + 2 * d
    }

    pub fn describe(&self) -> String {
        format!(
            "gpt-L{}-d{}-h{}-v{}-c{}-{}-g{}",
            self.n_layers, self.d_model, self.n_heads, self.vocab_size, self.context, self.activation, self.ln_scaling
        )
    }
}

/// `y = x W + b` with `W` stored row-major as `n_in × n_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Linear {
    fn init(n_in: usize, n_out: usize, std: f32, r: &mut impl Rng) -> Self {
        let weight = (0..n_in * n_out).map(|_| std * r.sample::<f32, _>(StandardNormal)).collect();
        Linear { n_in, n_out, weight, bias: vec![0.0; n_out] }
    }

    #[inline]
    fn apply(&self, x: &[f32], y: &mut [f32]) {
        y.copy_from_slice(&self.bias);
        accumulate(&self.weight, x, y);
    }

    fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Vec<f32>,
    pub offset: Vec<f32>,
}

impl LayerNorm {
    fn new(d: usize, gain: f32) -> Self {
        LayerNorm { gain: vec![gain; d], offset: vec![0.0; d] }
    }

    #[inline]
    fn apply(&self, x: &[f32], y: &mut [f32]) {
        let n = x.len() as f32;
        let mean = x.iter().sum::<f32>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for i in 0..x.len() {
            y[i] = (x[i] - mean) * inv * self.gain[i] + self.offset[i];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub ln1: LayerNorm,
    /// Fused query, key and value projection (`d × 3d`).
    pub qkv: Linear,
    pub attn_out: Linear,
    pub ln2: LayerNorm,
    pub fc: Linear,
    pub proj: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transformer {
    pub cfg: TransformerConfig,
    /// Token embedding, `V × d`; also the unembedding.
    pub wte: Vec<f32>,
    pub wpe: Vec<f32>,
    pub blocks: Vec<Block>,
    pub ln_f: LayerNorm,
    /// `wte` transposed (`d × V`) for the logit product.
    wte_t: Vec<f32>,
}

/// Per-layer keys and values of the positions seen so far.
#[derive(Debug, Clone, Default)]
pub struct KvCache {
    keys: Vec<Vec<f32>>,
    values: Vec<Vec<f32>>,
    len: usize,
}

impl KvCache {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Logits for every position plus attention probabilities `[layer][head]` (`T × T`).
#[derive(Debug, Clone)]
pub struct FullForward {
    pub logits: Array2<f32>,
    pub attention: Vec<Vec<Array2<f32>>>,
}

struct Scratch {
    h: Vec<f32>,
    qkv: Vec<f32>,
    att: Vec<f32>,
    tmp: Vec<f32>,
    hidden: Vec<f32>,
    scores: Vec<f32>,
}

impl Scratch {
    fn new(cfg: &TransformerConfig) -> Self {
        let d = cfg.d_model;
        Scratch {
            h: vec![0.0; d],
            qkv: vec![0.0; 3 * d],
            att: vec![0.0; d],
            tmp: vec![0.0; d],
            hidden: vec![0.0; 4 * d],
            scores: vec![0.0; cfg.context],
        }
    }
}

fn softmax_in_place(s: &mut [f32]) {
    let max = s.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let mut total = 0.0;
    for v in s.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in s.iter_mut() {
        *v /= total;
    }
}

/// `y += Σ_i x_i · W[i, :]` for row-major `W`.
fn accumulate(weight: &[f32], x: &[f32], y: &mut [f32]) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2. Without FMA the per-element
        // arithmetic is identical to the portable path.
        unsafe { accumulate_avx2(weight, x, y) };
        return;
    }
    accumulate_portable(weight, x, y);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn accumulate_avx2(weight: &[f32], x: &[f32], y: &mut [f32]) {
    accumulate_portable(weight, x, y);
}

#[inline(always)]
fn accumulate_portable(weight: &[f32], x: &[f32], y: &mut [f32]) {
    let n = y.len();
    for (&a, row) in x.iter().zip(weight.chunks_exact(n)) {
        if a == 0.0 {
            continue;
        }
        for (yo, &w) in y.iter_mut().zip(row) {
            *yo += a * w;
        }
    }
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax(xs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

impl Transformer {
    /// Weights `N(0, σ²)`, biases 0, block layernorm gain γ, final gain 1.
    pub fn init(cfg: &TransformerConfig) -> Result<Self> {
        cfg.validate()?;
        let (d, std) = (cfg.d_model, cfg.init_std as f32);
        let mut tensor = 0u64;
        let mut next_rng = || {
            tensor += 1;
            rng::stream(cfg.seed, &[role::EMBEDDING, tensor])
        };
        let gauss = |n: usize, r: &mut rng::StreamRng| -> Vec<f32> {
            (0..n).map(|_| std * r.sample::<f32, _>(StandardNormal)).collect()
        };
        let wte = gauss(cfg.vocab_size * d, &mut next_rng());
        let wpe = gauss(cfg.context * d, &mut next_rng());
        let gamma = cfg.ln_scaling as f32;
        let blocks = (0..cfg.n_layers)
            .map(|_| Block {
                ln1: LayerNorm::new(d, gamma),
                qkv: Linear::init(d, 3 * d, std, &mut next_rng()),
                attn_out: Linear::init(d, d, std, &mut next_rng()),
                ln2: LayerNorm::new(d, gamma),
                fc: Linear::init(d, 4 * d, std, &mut next_rng()),
                proj: Linear::init(4 * d, d, std, &mut next_rng()),
            })
            .collect();
        let mut m = Transformer { cfg: *cfg, wte, wpe, blocks, ln_f: LayerNorm::new(d, 1.0), wte_t: Vec::new() };
        m.refresh_unembedding();
        Ok(m)
    }

    /// Recomputes the transposed unembedding after `wte` is edited.
    pub fn refresh_unembedding(&mut self) {
        let (v, d) = (self.cfg.vocab_size, self.cfg.d_model);
        self.wte_t = vec![0.0; v * d];
        for t in 0..v {
            for i in 0..d {
                self.wte_t[i * v + t] = self.wte[t * d + i];
            }
        }
    }

    pub fn param_count(&self) -> usize {
        let ln = |l: &LayerNorm| l.gain.len() + l.offset.len();
        self.wte.len()
            + self.wpe.len()
            + self
                .blocks
                .iter()
                .map(|b| ln(&b.ln1) + b.qkv.len() + b.attn_out.len() + ln(&b.ln2) + b.fc.len() + b.proj.len())
                .sum::<usize>()
            + ln(&self.ln_f)
    }

    pub fn new_cache(&self) -> KvCache {
        let n = self.cfg.n_layers;
        let cap = self.cfg.context * self.cfg.d_model;
        KvCache { keys: vec![Vec::with_capacity(cap); n], values: vec![Vec::with_capacity(cap); n], len: 0 }
    }

    fn check_token(&self, token: usize) -> Result<()> {
        if token >= self.cfg.vocab_size {
            return Err(Error::InvalidArgument(format!("token {token} outside vocabulary of {}", self.cfg.vocab_size)));
        }
        Ok(())
    }

    /// Runs one block on the residual `x` at position `pos` (`keys`/`values`
    /// already hold this position). Optionally records attention rows.
    fn block_step(
        &self,
        b: &Block,
        x: &mut [f32],
        keys: &[f32],
        values: &[f32],
        pos: usize,
        q: &[f32],
        s: &mut Scratch,
        mut probs: Option<&mut Vec<Vec<f32>>>,
    ) {
        let d = self.cfg.d_model;
        let hd = self.cfg.head_dim();
        let scale = 1.0 / (hd as f32).sqrt();
        for head in 0..self.cfg.n_heads {
            let off = head * hd;
            let qh = &q[off..off + hd];
            let sc = &mut s.scores[..=pos];
            for (t, sv) in sc.iter_mut().enumerate() {
                let k = &keys[t * d + off..t * d + off + hd];
                *sv = qh.iter().zip(k).map(|(a, b)| a * b).sum::<f32>() * scale;
            }
            softmax_in_place(sc);
            let out = &mut s.att[off..off + hd];
            out.fill(0.0);
            for (t, &p) in sc.iter().enumerate() {
                let v = &values[t * d + off..t * d + off + hd];
                for (o, &vv) in out.iter_mut().zip(v) {
                    *o += p * vv;
                }
            }
            if let Some(pr) = probs.as_deref_mut() {
                pr.push(sc.to_vec());
            }
        }
        b.attn_out.apply(&s.att, &mut s.tmp);
        for (xi, a) in x.iter_mut().zip(&s.tmp) {
            *xi += a;
        }
        b.ln2.apply(x, &mut s.h);
        b.fc.apply(&s.h, &mut s.hidden);
        let act = self.cfg.activation;
        for v in s.hidden.iter_mut() {
            *v = act.apply_f32(*v);
        }
        b.proj.apply(&s.hidden, &mut s.tmp);
        for (xi, a) in x.iter_mut().zip(&s.tmp) {
            *xi += a;
        }
    }

    fn embed(&self, token: usize, pos: usize) -> Vec<f32> {
        let d = self.cfg.d_model;
        (0..d).map(|i| self.wte[token * d + i] + self.wpe[pos * d + i]).collect()
    }

    fn unembed(&self, x: &[f32], s: &mut Scratch, logits: &mut [f32]) {
        let v = self.cfg.vocab_size;
        self.ln_f.apply(x, &mut s.h);
        debug_assert_eq!(logits.len(), v);
        logits.fill(0.0);
        accumulate(&self.wte_t, &s.h, logits);
    }

    /// Appends `token` at the next position and returns its next-token logits.
    pub fn step(&self, cache: &mut KvCache, token: usize) -> Result<Vec<f32>> {
        self.check_token(token)?;
        let pos = cache.len;
        if pos >= self.cfg.context {
            return Err(Error::InvalidArgument(format!("context of {} positions exhausted", self.cfg.context)));
        }
        let d = self.cfg.d_model;
        let mut s = Scratch::new(&self.cfg);
        let mut x = self.embed(token, pos);
        for (l, b) in self.blocks.iter().enumerate() {
            b.ln1.apply(&x, &mut s.h);
            b.qkv.apply(&s.h, &mut s.qkv);
            cache.keys[l].extend_from_slice(&s.qkv[d..2 * d]);
            cache.values[l].extend_from_slice(&s.qkv[2 * d..]);
            let q = s.qkv[..d].to_vec();
            self.block_step(b, &mut x, &cache.keys[l], &cache.values[l], pos, &q, &mut s, None);
        }
        cache.len += 1;
        let mut logits = vec![0.0; self.cfg.vocab_size];
        self.unembed(&x, &mut s, &mut logits);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { layer: self.cfg.n_layers, stage: "logits" });
        }
        Ok(logits)
    }

    /// Processes the whole sequence layer by layer with an explicit causal mask.
    pub fn forward(&self, tokens: &[usize]) -> Result<FullForward> {
        let t_len = tokens.len();
        if t_len == 0 || t_len > self.cfg.context {
            return Err(Error::InvalidArgument(format!("sequence length {t_len} outside 1..={}", self.cfg.context)));
        }
        for &t in tokens {
            self.check_token(t)?;
        }
        let d = self.cfg.d_model;
        let mut s = Scratch::new(&self.cfg);
        let mut xs: Vec<Vec<f32>> = tokens.iter().enumerate().map(|(p, &t)| self.embed(t, p)).collect();
        let mut attention = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let mut q = vec![0.0; t_len * d];
            let mut keys = vec![0.0; t_len * d];
            let mut values = vec![0.0; t_len * d];
            for (p, x) in xs.iter().enumerate() {
                b.ln1.apply(x, &mut s.h);
                b.qkv.apply(&s.h, &mut s.qkv);
                q[p * d..(p + 1) * d].copy_from_slice(&s.qkv[..d]);
                keys[p * d..(p + 1) * d].copy_from_slice(&s.qkv[d..2 * d]);
                values[p * d..(p + 1) * d].copy_from_slice(&s.qkv[2 * d..]);
            }
            let mut rows: Vec<Vec<f32>> = Vec::new();
            for (p, x) in xs.iter_mut().enumerate() {
                self.block_step(b, x, &keys, &values, p, &q[p * d..(p + 1) * d], &mut s, Some(&mut rows));
            }
            // rows are ordered (position, head); regroup into per-head matrices with zeros above the diagonal.
            let h = self.cfg.n_heads;
            let per_head = (0..h)
                .map(|head| {
                    Array2::from_shape_fn((t_len, t_len), |(i, j)| if j <= i { rows[i * h + head][j] } else { 0.0 })
                })
                .collect();
            attention.push(per_head);
        }
        let mut logits = Array2::zeros((t_len, self.cfg.vocab_size));
        let mut buf = vec![0.0; self.cfg.vocab_size];
        for (p, x) in xs.iter().enumerate() {
            self.unembed(x, &mut s, &mut buf);
            logits.row_mut(p).assign(&ndarray::ArrayView1::from(&buf));
        }
        Ok(FullForward { logits, attention })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedSequence {
    pub prompt: usize,
    pub tokens: Vec<usize>,
    /// Configuration identifier and seed.
    pub provenance: String,
}

pub const GENERATED_TOKENS: usize = 100;

/// Greedy decoding from a single prompt token.
pub fn greedy_generate(model: &Transformer, prompt: usize, steps: usize) -> Result<GeneratedSequence> {
    if steps + 1 > model.cfg.context {
        return Err(Error::InvalidArgument(format!("{steps} steps exceed the context of {}", model.cfg.context)));
    }
    let mut cache = model.new_cache();
    let mut tokens = Vec::with_capacity(steps);
    let mut current = prompt;
    for _ in 0..steps {
        let logits = model.step(&mut cache, current)?;
        current = argmax(&logits);
        tokens.push(current);
    }
    Ok(GeneratedSequence {
        prompt,
        tokens,
        provenance: format!("{} seed={}", model.cfg.describe(), model.cfg.seed),
    })
}
