//! Randomly initialized decoder-only transformer and the complexity of its
//! greedy decodes.

mod model;
mod sweep;
#[cfg(test)]
mod tests;

pub use model::{
    argmax, greedy_generate, Block, FullForward, GeneratedSequence, KvCache, LayerNorm, Linear, Transformer,
    TransformerConfig, GENERATED_TOKENS,
};
pub use sweep::{
    sample_sequence, sequence_complexities, sequence_complexity_sweep, sequence_seed, uniform_control,
    SequenceSweep, SweepAxis, SweepCell,
};
