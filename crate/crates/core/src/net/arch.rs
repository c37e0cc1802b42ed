//! Architecture descriptions and their canonical one-line identifiers.
//!
//! Identifier grammar (EBNF):
//!
//! ```text
//! arch      = mlp | unbiased ;
//! mlp       = "mlp-" act "-i" int "-d" int "-w" int "-a" real "-p" real "-b" real
//!             [ "-res" ] [ "-ln" ] [ "-gate" ] ;
//! unbiased  = "unbiased-i" int "-k" int "-a" real "-b" real ;
//! act       = "relu" | "gelu" | "swish" | "selu" | "tanh" | "gaussian" | "sine" ;
//! int       = digit { digit } ;
//! real      = digit { digit } "." digit { digit } ;
//! ```
//!
//! `i` is the input dimension, `d` the number of hidden layers, `w` the
//! width, `a` the weight scale, `p` the activation prefactor, `b` the bias
//! scale and `k` the largest integer frequency of the unbiased model. Reals
//! are printed in the shortest decimal form that parses back to the same
//! `f64`, never in exponent notation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::activation::ActivationKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Mlp,
    /// One hidden sine layer with fixed integer frequency rows over
    /// `{0..=max_frequency}^d`; only phases and magnitudes are learnable.
    Unbiased { max_frequency: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub family: Family,
    pub input_dim: usize,
    pub depth: usize,
    pub width: usize,
    pub activation: ActivationKind,
    pub residual: bool,
    pub layernorm: bool,
    pub gating: bool,
    pub prefactor: f64,
    pub weight_scale: f64,
    pub bias_scale: f64,
}

impl Default for ArchSpec {
    fn default() -> Self {
        ArchSpec {
            family: Family::Mlp,
            input_dim: 2,
            depth: 3,
            width: 64,
            activation: ActivationKind::Relu,
            residual: false,
            layernorm: false,
            gating: false,
            prefactor: 1.0,
            weight_scale: 1.0,
            bias_scale: 1.0,
        }
    }
}

impl ArchSpec {
    pub fn mlp(activation: ActivationKind, depth: usize, width: usize) -> Self {
        ArchSpec { activation, depth, width, ..ArchSpec::default() }
    }

    /// The inverse-Fourier model on `input_dim` inputs with frequencies
    /// `0..=max_frequency` per axis.
    pub fn unbiased(input_dim: usize, max_frequency: usize) -> Self {
        ArchSpec {
            family: Family::Unbiased { max_frequency },
            input_dim,
            depth: 1,
            width: (max_frequency + 1).pow(input_dim as u32),
            activation: ActivationKind::Sine,
            ..ArchSpec::default()
        }
    }

    pub fn is_unbiased(&self) -> bool {
        matches!(self.family, Family::Unbiased { .. })
    }

    pub fn with_activation(mut self, activation: ActivationKind) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.width = width;
        self
    }

    pub fn with_input_dim(mut self, input_dim: usize) -> Self {
        self.input_dim = input_dim;
        if let Family::Unbiased { max_frequency } = self.family {
            self.width = (max_frequency + 1).pow(input_dim as u32);
        }
        self
    }

    pub fn with_weight_scale(mut self, scale: f64) -> Self {
        self.weight_scale = scale;
        self
    }

    pub fn with_bias_scale(mut self, scale: f64) -> Self {
        self.bias_scale = scale;
        self
    }

    pub fn with_prefactor(mut self, prefactor: f64) -> Self {
        self.prefactor = prefactor;
        self
    }

    pub fn with_residual(mut self, on: bool) -> Self {
        self.residual = on;
        self
    }

    pub fn with_layernorm(mut self, on: bool) -> Self {
        self.layernorm = on;
        self
    }

    pub fn with_gating(mut self, on: bool) -> Self {
        self.gating = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.input_dim == 0 {
            return bad("input dimension must be positive".into());
        }
        if self.width == 0 || self.depth == 0 {
            return bad("depth and width must be positive".into());
        }
        if !(self.weight_scale.is_finite() && self.weight_scale >= 0.0) {
            return bad(format!("weight scale must be finite and >= 0, got {}", self.weight_scale));
        }
        if !(self.bias_scale.is_finite() && self.bias_scale >= 0.0) {
            return bad(format!("bias scale must be finite and >= 0, got {}", self.bias_scale));
        }
        if !(self.prefactor.is_finite() && self.prefactor > 0.0) {
            return bad(format!("prefactor must be finite and > 0, got {}", self.prefactor));
        }
        if let Family::Unbiased { max_frequency } = self.family {
            if self.residual || self.layernorm || self.gating {
                return bad("the unbiased model cannot be combined with residual, layernorm or gating".into());
            }
            if self.depth != 1 {
                return bad(format!("the unbiased model has exactly one hidden layer, got depth {}", self.depth));
            }
            if self.prefactor != 1.0 {
                return bad("the unbiased model has no activation prefactor".into());
            }
            if max_frequency == 0 {
                return bad("the unbiased model needs max_frequency >= 1".into());
            }
            let expected = (max_frequency as u128 + 1).checked_pow(self.input_dim as u32);
            if expected != Some(self.width as u128) {
                return bad(format!(
                    "unbiased width must be (k+1)^d = {expected:?}, got {}",
                    self.width
                ));
            }
        }
        Ok(())
    }

    /// Canonical identifier, see the module docs for the grammar.
    pub fn describe(&self) -> String {
        match self.family {
            Family::Unbiased { max_frequency } => format!(
                "unbiased-i{}-k{}-a{}-b{}",
                self.input_dim,
                max_frequency,
                fmt_real(self.weight_scale),
                fmt_real(self.bias_scale)
            ),
            Family::Mlp => {
                let mut id = format!(
                    "mlp-{}-i{}-d{}-w{}-a{}-p{}-b{}",
                    self.activation,
                    self.input_dim,
                    self.depth,
                    self.width,
                    fmt_real(self.weight_scale),
                    fmt_real(self.prefactor),
                    fmt_real(self.bias_scale)
                );
                if self.residual {
                    id.push_str("-res");
                }
                if self.layernorm {
                    id.push_str("-ln");
                }
                if self.gating {
                    id.push_str("-gate");
                }
                id
            }
        }
    }

    pub fn parse(id: &str) -> Result<Self> {
        let fail = |reason: &str| Error::ParseArch { id: id.to_string(), reason: reason.to_string() };
        let mut parts = id.split('-');
        match parts.next() {
            Some("mlp") => {
                let activation: ActivationKind =
                    parts.next().ok_or_else(|| fail("missing activation"))?.parse().map_err(|_| fail("bad activation"))?;
                let input_dim = field_int(&mut parts, 'i').ok_or_else(|| fail("expected i<int>"))?;
                let depth = field_int(&mut parts, 'd').ok_or_else(|| fail("expected d<int>"))?;
                let width = field_int(&mut parts, 'w').ok_or_else(|| fail("expected w<int>"))?;
                let weight_scale = field_real(&mut parts, 'a').ok_or_else(|| fail("expected a<real>"))?;
                let prefactor = field_real(&mut parts, 'p').ok_or_else(|| fail("expected p<real>"))?;
                let bias_scale = field_real(&mut parts, 'b').ok_or_else(|| fail("expected b<real>"))?;
                let mut spec = ArchSpec {
                    family: Family::Mlp,
                    input_dim,
                    depth,
                    width,
                    activation,
                    residual: false,
                    layernorm: false,
                    gating: false,
                    prefactor,
                    weight_scale,
                    bias_scale,
                };
                // Flags must appear in canonical order, each at most once.
                let mut rank = 0;
                for flag in parts {
                    let (r, slot) = match flag {
                        "res" => (1, &mut spec.residual),
                        "ln" => (2, &mut spec.layernorm),
                        "gate" => (3, &mut spec.gating),
                        _ => return Err(fail("unknown component flag")),
                    };
                    if r <= rank {
                        return Err(fail("component flags out of order or repeated"));
                    }
                    rank = r;
                    *slot = true;
                }
                Ok(spec)
            }
            Some("unbiased") => {
                let input_dim = field_int(&mut parts, 'i').ok_or_else(|| fail("expected i<int>"))?;
                let k = field_int(&mut parts, 'k').ok_or_else(|| fail("expected k<int>"))?;
                let weight_scale = field_real(&mut parts, 'a').ok_or_else(|| fail("expected a<real>"))?;
                let bias_scale = field_real(&mut parts, 'b').ok_or_else(|| fail("expected b<real>"))?;
                if parts.next().is_some() {
                    return Err(fail("trailing fields"));
                }
                Ok(ArchSpec::unbiased(input_dim, k).with_weight_scale(weight_scale).with_bias_scale(bias_scale))
            }
            _ => Err(fail("expected prefix 'mlp' or 'unbiased'")),
        }
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl FromStr for ArchSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchSpec::parse(s)
    }
}

/// Shortest round-trip decimal, always with a fractional part.
pub(crate) fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn field_int<'a>(parts: &mut impl Iterator<Item = &'a str>, tag: char) -> Option<usize> {
    parts.next()?.strip_prefix(tag)?.parse().ok()
}

fn field_real<'a>(parts: &mut impl Iterator<Item = &'a str>, tag: char) -> Option<f64> {
    let s = parts.next()?.strip_prefix(tag)?;
    if !s.contains('.') || s.contains(['e', 'E']) {
        return None;
    }
    s.parse().ok()
}
