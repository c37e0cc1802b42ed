//! Transformer sequence-complexity study with an iid-token control.

use serde::{Deserialize, Serialize};

use super::artifacts::Artifacts;
use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::net::ActivationKind;
use crate::stats;
use crate::transformer::{sequence_complexity_sweep, uniform_control, SequenceSweep, SweepAxis, TransformerConfig, GENERATED_TOKENS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerStudySpec {
    pub base: TransformerConfig,
    pub axes: Vec<SweepAxis>,
    pub sequences: usize,
}

impl Default for TransformerStudySpec {
    fn default() -> Self {
        TransformerStudySpec {
            base: TransformerConfig::default(),
            axes: vec![
                SweepAxis::Activation(vec![ActivationKind::Relu, ActivationKind::Gelu]),
                SweepAxis::Depth(vec![0, 1, 2, 4, 6]),
                SweepAxis::LnScaling(vec![0.5, 1.0, 2.0, 4.0]),
            ],
            sequences: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerStudy {
    pub spec: TransformerStudySpec,
    pub sweeps: Vec<SequenceSweep>,
    /// LZ of iid uniform token sequences of the generated length.
    pub control: Vec<usize>,
}

pub fn run_transformer_study(spec: &TransformerStudySpec) -> Result<TransformerStudy> {
    if spec.sequences < 2 {
        return Err(Error::InvalidArgument("transformer study needs at least 2 sequences per cell".into()));
    }
    spec.base.validate()?;
    let sweeps =
        spec.axes.iter().map(|a| sequence_complexity_sweep(&spec.base, a, spec.sequences)).collect::<Result<Vec<_>>>()?;
    let control = uniform_control(spec.base.vocab_size, GENERATED_TOKENS, spec.sequences, spec.base.seed);
    Ok(TransformerStudy { spec: spec.clone(), sweeps, control })
}

impl TransformerStudy {
    fn control_f64(&self) -> Vec<f64> {
        self.control.iter().map(|&c| c as f64).collect()
    }

    pub fn control_mean(&self) -> f64 {
        stats::mean(&self.control_f64())
    }

    pub fn control_std_err(&self) -> f64 {
        stats::std_err(&self.control_f64())
    }

    pub fn sweep(&self, axis: &str) -> Option<&SequenceSweep> {
        self.sweeps.iter().find(|s| s.axis == axis)
    }

    pub fn rows_csv(&self) -> Table {
        let mut t = Table::new(&["axis", "value", "sequence", "seed", "lz"]);
        for s in &self.sweeps {
            for r in crate::csv::parse(s.rows_csv().as_str()).into_iter().skip(1) {
                t.row(r);
            }
        }
        for (i, &c) in self.control.iter().enumerate() {
            t.row(vec!["control".into(), "uniform".into(), i.to_string(), self.spec.base.seed.to_string(), c.to_string()]);
        }
        t
    }

    pub fn summary_csv(&self) -> Table {
        let mut t = Table::new(&["axis", "value", "n", "mean", "std", "stderr"]);
        for s in &self.sweeps {
            for r in crate::csv::parse(s.summary_csv().as_str()).into_iter().skip(1) {
                t.row(r);
            }
        }
        let c = self.control_f64();
        t.row(vec![
            "control".into(),
            "uniform".into(),
            c.len().to_string(),
            csv::real(stats::mean(&c)),
            csv::real(stats::std_dev(&c)),
            csv::real(stats::std_err(&c)),
        ]);
        t
    }

    pub fn write(&self, out: &Artifacts) -> Result<()> {
        out.csv("rows.csv", &self.rows_csv())?;
        out.csv("summary.csv", &self.summary_csv())?;
        out.metadata(
            "metadata.txt",
            &[
                ("config", self.spec.base.describe()),
                ("sequences", self.spec.sequences.to_string()),
                ("generated_tokens", GENERATED_TOKENS.to_string()),
                ("decoding", "greedy, ties to the lowest token id".into()),
                ("measure", "LZ78 phrase count over raw token ids".into()),
            ],
        )
    }
}
