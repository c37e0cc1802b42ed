//! Colored-MNIST shortcut study: color versus digit generalization across prefactors.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::Artifacts;
use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::net::{ActivationKind, ArchSpec, InitSpec, Network};
use crate::rng;
use crate::stats;
use crate::tasks::{build_colored_mnist, bundled_mnist_dir, load_mnist_dir, regression_accuracy, CmnistVariant, ColoredMnist};
use crate::train::{predict, train, Loss, Probe, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmnistStudySpec {
    pub activations: Vec<ActivationKind>,
    pub prefactors: Vec<f64>,
    pub seeds: usize,
    /// Training examples taken from the head of the train split.
    pub train_size: usize,
    pub test_size: usize,
    pub depth: usize,
    pub width: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Corner count and points per segment of the traversal probe.
    pub traversal_points: usize,
    /// Directory with IDX files; the bundled subset when `None`.
    pub mnist_dir: Option<PathBuf>,
    pub base_seed: u64,
}

impl Default for CmnistStudySpec {
    fn default() -> Self {
        CmnistStudySpec {
            activations: vec![ActivationKind::Tanh, ActivationKind::Gaussian, ActivationKind::Sine],
            prefactors: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            seeds: 3,
            train_size: 6000,
            test_size: 1000,
            depth: 2,
            width: 64,
            iterations: 10_000,
            learning_rate: 0.002,
            traversal_points: 64,
            mnist_dir: None,
            base_seed: 0,
        }
    }
}

impl CmnistStudySpec {
    pub fn seed(&self, s: usize) -> u64 {
        rng::derive(self.base_seed, &[s as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmnistRow {
    pub activation: ActivationKind,
    pub prefactor: f64,
    pub seed: u64,
    /// Traversal LZ at initialization.
    pub init_lz: f64,
    pub train_accuracy: f64,
    pub color_accuracy: f64,
    pub digit_accuracy: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmnistStudy {
    pub spec: CmnistStudySpec,
    pub rows: Vec<CmnistRow>,
}

struct Sets {
    train: ColoredMnist,
    digit: ColoredMnist,
    color: ColoredMnist,
}

fn load_sets(spec: &CmnistStudySpec) -> Result<Sets> {
    let dir = spec.mnist_dir.clone().unwrap_or_else(bundled_mnist_dir);
    let raw = load_mnist_dir(&dir)?;
    if raw.train.len() < spec.train_size || raw.test.len() < spec.test_size {
        return Err(Error::InvalidArgument(format!(
            "{} has {} train / {} test images, fewer than the requested {} / {}",
            dir.display(),
            raw.train.len(),
            raw.test.len(),
            spec.train_size,
            spec.test_size
        )));
    }
    let (tr, te) = (raw.train.head(spec.train_size), raw.test.head(spec.test_size));
    Ok(Sets {
        train: build_colored_mnist(&tr, CmnistVariant::Train, spec.base_seed)?,
        digit: build_colored_mnist(&te, CmnistVariant::TestDigitCorrelated, spec.base_seed)?,
        color: build_colored_mnist(&te, CmnistVariant::TestColorCorrelated, spec.base_seed)?,
    })
}

/// `1 − MAE` with predictions clipped to the label range.
fn accuracy(net: &Network, set: &ColoredMnist) -> Result<f64> {
    let p = predict(net, set.inputs.view(), Loss::Mse)?.mapv(|v| v.clamp(0.0, 1.0));
    regression_accuracy(p.as_slice().unwrap(), set.labels.as_slice().unwrap())
}

fn run_one(spec: &CmnistStudySpec, sets: &Sets, act: ActivationKind, p: f64, seed: u64) -> Result<CmnistRow> {
    let arch = ArchSpec::mlp(act, spec.depth, spec.width).with_input_dim(sets.train.inputs.ncols()).with_prefactor(p);
    let net = Network::init(&arch, &InitSpec::seeded(seed))?;
    let init_lz =
        Probe::LzTraversal { points: spec.traversal_points, seed }.measure(&net)?.unwrap_or(f64::NAN);
    let cfg = TrainConfig {
        loss: Loss::Mse,
        learning_rate: spec.learning_rate,
        iterations: spec.iterations,
        seed,
        ..TrainConfig::default()
    };
    let (net, traj) = train(net, sets.train.inputs.view(), sets.train.labels.view(), &cfg)?;
    Ok(CmnistRow {
        activation: act,
        prefactor: p,
        seed,
        init_lz,
        train_accuracy: accuracy(&net, &sets.train)?,
        color_accuracy: accuracy(&net, &sets.color)?,
        digit_accuracy: accuracy(&net, &sets.digit)?,
        final_loss: traj.final_loss().unwrap_or(f64::NAN),
    })
}

pub fn run_cmnist_study(spec: &CmnistStudySpec) -> Result<CmnistStudy> {
    if spec.activations.is_empty() || spec.prefactors.is_empty() || spec.seeds == 0 {
        return Err(Error::InvalidArgument("Colored-MNIST study needs activations, prefactors and seeds".into()));
    }
    let sets = load_sets(spec)?;
    let jobs: Vec<(ActivationKind, f64, u64)> = spec
        .activations
        .iter()
        .flat_map(|&a| spec.prefactors.iter().flat_map(move |&p| (0..spec.seeds).map(move |s| (a, p, s))))
        .map(|(a, p, s)| (a, p, spec.seed(s)))
        .collect();
    let rows = jobs.par_iter().map(|&(a, p, s)| run_one(spec, &sets, a, p, s)).collect::<Result<Vec<_>>>()?;
    Ok(CmnistStudy { spec: spec.clone(), rows })
}

/// Seed-averaged accuracies for one (activation, prefactor) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmnistCell {
    pub init_lz: f64,
    pub color_accuracy: f64,
    pub digit_accuracy: f64,
}

impl CmnistStudy {
    pub fn cell(&self, act: ActivationKind, prefactor: f64) -> Option<CmnistCell> {
        let sel: Vec<&CmnistRow> =
            self.rows.iter().filter(|r| r.activation == act && r.prefactor == prefactor).collect();
        if sel.is_empty() {
            return None;
        }
        let avg = |f: fn(&CmnistRow) -> f64| stats::mean(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
        Some(CmnistCell {
            init_lz: avg(|r| r.init_lz),
            color_accuracy: avg(|r| r.color_accuracy),
            digit_accuracy: avg(|r| r.digit_accuracy),
        })
    }

    /// Seed-averaged digit accuracy along the prefactor grid.
    pub fn digit_curve(&self, act: ActivationKind) -> Vec<f64> {
        self.spec.prefactors.iter().filter_map(|&p| self.cell(act, p)).map(|c| c.digit_accuracy).collect()
    }

    pub fn rows_csv(&self) -> Table {
        let mut t = Table::new(&[
            "activation",
            "prefactor",
            "seed",
            "init_lz",
            "train_accuracy",
            "color_accuracy",
            "digit_accuracy",
            "final_loss",
        ]);
        for r in &self.rows {
            t.row(vec![
                r.activation.to_string(),
                csv::real(r.prefactor),
                r.seed.to_string(),
                csv::real(r.init_lz),
                csv::real(r.train_accuracy),
                csv::real(r.color_accuracy),
                csv::real(r.digit_accuracy),
                csv::real(r.final_loss),
            ]);
        }
        t
    }

    pub fn cells_csv(&self) -> Table {
        let mut t = Table::new(&["activation", "prefactor", "init_lz", "color_accuracy", "digit_accuracy"]);
        for &a in &self.spec.activations {
            for &p in &self.spec.prefactors {
                if let Some(c) = self.cell(a, p) {
                    t.row(vec![
                        a.to_string(),
                        csv::real(p),
                        csv::real(c.init_lz),
                        csv::real(c.color_accuracy),
                        csv::real(c.digit_accuracy),
                    ]);
                }
            }
        }
        t
    }

    pub fn write(&self, out: &Artifacts) -> Result<()> {
        out.csv("rows.csv", &self.rows_csv())?;
        out.csv("cells.csv", &self.cells_csv())?;
        let s = &self.spec;
        out.metadata(
            "metadata.txt",
            &[
                ("train_size", s.train_size.to_string()),
                ("test_size", s.test_size.to_string()),
                ("depth", s.depth.to_string()),
                ("width", s.width.to_string()),
                ("iterations", s.iterations.to_string()),
                ("learning_rate", csv::real(s.learning_rate)),
                ("seeds", s.seeds.to_string()),
                ("loss", "mse".into()),
                ("accuracy", "1 - mean |clip(pred, 0, 1) - label|".into()),
                ("mnist_dir", s.mnist_dir.clone().unwrap_or_else(bundled_mnist_dir).display().to_string()),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_study_rows_and_cells() {
        let spec = CmnistStudySpec {
            activations: vec![ActivationKind::Tanh],
            prefactors: vec![0.5, 2.0],
            seeds: 2,
            train_size: 100,
            test_size: 50,
            width: 8,
            iterations: 20,
            traversal_points: 8,
            ..CmnistStudySpec::default()
        };
        let s = run_cmnist_study(&spec).unwrap();
        assert_eq!(s.rows.len(), 4);
        for r in &s.rows {
            assert!((0.0..=1.0).contains(&r.color_accuracy) && (0.0..=1.0).contains(&r.digit_accuracy));
            assert!(r.init_lz >= 1.0);
        }
        assert_eq!(s.digit_curve(ActivationKind::Tanh).len(), 2);
        assert_eq!(crate::csv::parse(s.cells_csv().as_str()).len(), 3);
    }

    #[test]
    fn oversized_request_is_rejected() {
        let spec = CmnistStudySpec { train_size: 1_000_000, ..CmnistStudySpec::default() };
        assert!(run_cmnist_study(&spec).is_err());
    }
}
