use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Gelu,
    Swish,
    Selu,
    Tanh,
    Gaussian,
    Sine,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 7] = [
        ActivationKind::Relu,
        ActivationKind::Gelu,
        ActivationKind::Swish,
        ActivationKind::Selu,
        ActivationKind::Tanh,
        ActivationKind::Gaussian,
        ActivationKind::Sine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Gelu => "gelu",
            ActivationKind::Swish => "swish",
            ActivationKind::Selu => "selu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Gaussian => "gaussian",
            ActivationKind::Sine => "sine",
        }
    }

    /// ReLU and its smooth relatives.
    pub fn is_relu_like(self) -> bool {
        matches!(
            self,
            ActivationKind::Relu | ActivationKind::Gelu | ActivationKind::Swish | ActivationKind::Selu
        )
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Gelu => x * normal_cdf(x),
            ActivationKind::Swish => x * sigmoid(x),
            ActivationKind::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
                }
            }
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Gaussian => (-0.5 * x * x).exp(),
            ActivationKind::Sine => x.sin(),
        }
    }

    /// Derivative. At the ReLU/SELU kink the right-hand derivative is
    /// returned for x > 0 and the left-hand one for x <= 0.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Gelu => normal_cdf(x) + x * INV_SQRT_2PI * (-0.5 * x * x).exp(),
            ActivationKind::Swish => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            ActivationKind::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * x.exp()
                }
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Gaussian => -x * (-0.5 * x * x).exp(),
            ActivationKind::Sine => x.cos(),
        }
    }

    /// Single-precision variant used by the transformer.
    #[inline]
    pub fn apply_f32(self, x: f32) -> f32 {
        match self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Gelu => x * (0.5 * (1.0 + libm::erff(x * INV_SQRT_2 as f32))),
            ActivationKind::Swish => x / (1.0 + (-x).exp()),
            ActivationKind::Selu => {
                if x > 0.0 {
                    SELU_LAMBDA as f32 * x
                } else {
                    (SELU_LAMBDA * SELU_ALPHA) as f32 * x.exp_m1()
                }
            }
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Gaussian => (-0.5 * x * x).exp(),
            ActivationKind::Sine => x.sin(),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        ActivationKind::ALL
            .into_iter()
            .find(|a| a.name() == lower || (lower == "sin" && *a == ActivationKind::Sine))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activation {s:?}")))
    }
}

/// Standard normal CDF via the error function.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * INV_SQRT_2))
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
