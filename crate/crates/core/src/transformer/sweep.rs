//! LZ complexity of greedily decoded sequences across architecture variants.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{greedy_generate, Transformer, TransformerConfig, GENERATED_TOKENS};
use crate::complexity::lz78_phrases;
use crate::csv::{self, Table};
use crate::error::Result;
use crate::net::ActivationKind;
use crate::rng::{self, role};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    Activation(Vec<ActivationKind>),
    Depth(Vec<usize>),
    LnScaling(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Activation(_) => "activation",
            SweepAxis::Depth(_) => "depth",
            SweepAxis::LnScaling(_) => "ln_scaling",
        }
    }

    /// `(label, config)` for every value on the axis.
    pub fn cells(&self, base: &TransformerConfig) -> Vec<(String, TransformerConfig)> {
        match self {
            SweepAxis::Activation(v) => {
                v.iter().map(|&a| (a.to_string(), TransformerConfig { activation: a, ..*base })).collect()
            }
            SweepAxis::Depth(v) => {
                v.iter().map(|&l| (l.to_string(), TransformerConfig { n_layers: l, ..*base })).collect()
            }
            SweepAxis::LnScaling(v) => {
                v.iter().map(|&g| (csv::real(g), TransformerConfig { ln_scaling: g, ..*base })).collect()
            }
        }
    }
}

/// Seed of the model behind sequence `index`; shared by all cells of a sweep.
pub fn sequence_seed(base_seed: u64, index: usize) -> u64 {
    rng::derive(base_seed, &[index as u64])
}

/// One freshly initialized model per sequence, decoded from a random prompt.
pub fn sample_sequence(cfg: &TransformerConfig, index: usize) -> Result<(usize, Vec<usize>)> {
    let seed = sequence_seed(cfg.seed, index);
    let model = Transformer::init(&TransformerConfig { seed, ..*cfg })?;
    let prompt = rng::stream(seed, &[role::PROMPT]).random_range(0..cfg.vocab_size);
    let seq = greedy_generate(&model, prompt, GENERATED_TOKENS)?;
    Ok((prompt, seq.tokens))
}

/// LZ78 phrase counts of `n` sequences, in sequence order.
pub fn sequence_complexities(cfg: &TransformerConfig, n: usize) -> Result<Vec<usize>> {
    (0..n).into_par_iter().map(|i| sample_sequence(cfg, i).map(|(_, t)| lz78_phrases(&t))).collect()
}

/// LZ78 phrase counts of iid uniform token sequences.
pub fn uniform_control(vocab: usize, len: usize, n: usize, seed: u64) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let mut r = rng::stream(seed, &[i as u64, role::PROMPT, 1]);
            let t: Vec<usize> = (0..len).map(|_| r.random_range(0..vocab)).collect();
            lz78_phrases(&t)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub label: String,
    pub config: TransformerConfig,
    pub scores: Vec<usize>,
}

impl SweepCell {
    fn as_f64(&self) -> Vec<f64> {
        self.scores.iter().map(|&s| s as f64).collect()
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.as_f64())
    }

    pub fn std_dev(&self) -> f64 {
        stats::std_dev(&self.as_f64())
    }

    pub fn std_err(&self) -> f64 {
        stats::std_err(&self.as_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSweep {
    pub axis: String,
    pub cells: Vec<SweepCell>,
}

impl SequenceSweep {
    /// One row per (cell, sequence).
    pub fn rows_csv(&self) -> Table {
        let mut t = Table::new(&["axis", "value", "sequence", "seed", "lz"]);
        for c in &self.cells {
            for (i, &s) in c.scores.iter().enumerate() {
                t.row(vec![
                    self.axis.clone(),
                    c.label.clone(),
                    i.to_string(),
                    sequence_seed(c.config.seed, i).to_string(),
                    s.to_string(),
                ]);
            }
        }
        t
    }

    pub fn summary_csv(&self) -> Table {
        let mut t = Table::new(&["axis", "value", "n", "mean", "std", "stderr"]);
        for c in &self.cells {
            t.row(vec![
                self.axis.clone(),
                c.label.clone(),
                c.scores.len().to_string(),
                csv::real(c.mean()),
                csv::real(c.std_dev()),
                csv::real(c.std_err()),
            ]);
        }
        t
    }
}

pub fn sequence_complexity_sweep(base: &TransformerConfig, axis: &SweepAxis, n_sequences: usize) -> Result<SequenceSweep> {
    let cells = axis
        .cells(base)
        .into_iter()
        .map(|(label, config)| Ok(SweepCell { scores: sequence_complexities(&config, n_sequences)?, label, config }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceSweep { axis: axis.name().into(), cells })
}
