//! Probing the preferred complexity of neural architectures.
//!
//! Random-weight networks are evaluated on regular grids (or on straight
//! traversals of the input hypercube) and the resulting function samples are
//! scored with three complexity measures: a frequency-weighted Fourier
//! magnitude mean, the analogous order-weighted mean over an orthogonal
//! polynomial basis, and the LZ78 dictionary size of a discretized sequence.
//! The same measures are then tracked on gradient-trained models and on
//! sequences decoded from randomly initialized transformers.
//!
//! Module map:
//! - [`net`]: the feedforward architecture zoo, initialization, exact forward
//!   and backward passes, checkpoints.
//! - [`grid`]: grid and corner-traversal sampling, PGM rendering.
//! - [`complexity`]: Fourier, polynomial and LZ measures plus normalization.
//! - [`train`]: full-batch Adam training, weight shuffling and statistics.
//! - [`tasks`]: modulo addition, Colored-MNIST, coordinate-image targets.
//! - [`transformer`]: random GPT-2-style decoder with greedy decoding.
//! - [`experiments`]: sweep drivers that write CSV/PGM artifacts.

pub mod complexity;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod net;
pub mod pgm;
pub mod rng;
pub mod stats;
pub mod tasks;
pub mod train;
pub mod transformer;

pub use complexity::{ComplexityScore, Measure};
pub use error::{Error, Result};
pub use grid::{FunctionSample, GridSpec, TraversalSample};
pub use net::{ActivationKind, ArchSpec, InitDistribution, InitSpec, Network};
