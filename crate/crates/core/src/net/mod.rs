//! The feedforward architecture zoo.
//!
//! Each hidden layer computes, in order:
//!
//! ```text
//! z = W h + b
//! z = gain ⊙ (z − mean(z)) / sqrt(var(z) + 1e-5) + offset      (layernorm)
//! a = φ(p · z)                                                  (p: prefactor)
//! a = a ⊙ σ(W' h + b')                                          (gating)
//! h = z + a                                                     (residual)
//! ```
//!
//! followed by a linear scalar output with no output activation.

mod activation;
mod arch;
mod backward;
pub mod checkpoint;
mod network;

pub use activation::{normal_cdf, sigmoid, ActivationKind, SELU_ALPHA, SELU_LAMBDA};
pub use arch::{ArchSpec, Family};
pub use backward::Gradients;
pub use network::{
    glorot_bound, mlp_from_layers, normalize_rows, Body, Dense, ForwardCache, FourierLayer, HiddenLayer,
    InitDistribution, InitSpec, LayerCache, LayerNormParams, Network, ParamInfo, ParamKind, LAYERNORM_EPS,
};

#[allow(unused_imports)]
pub(crate) use arch::fmt_real;
