//! Modulo addition: generalization versus activation and prefactor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::Artifacts;
use crate::complexity::{measure_sample, Measure};
use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::grid::{sample_grid, GridSpec};
use crate::net::{ActivationKind, ArchSpec, InitSpec, Network};
use crate::rng;
use crate::stats;
use crate::tasks::{binary_accuracy, gen_modulo, ModuloTask};
use crate::train::{predict, train, Loss, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuloStudySpec {
    pub moduli: Vec<usize>,
    pub dim: usize,
    /// Each activation with its prefactor grid.
    pub runs: Vec<(ActivationKind, Vec<f64>)>,
    pub seeds: usize,
    pub depth: usize,
    pub width: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Activation whose accuracy-versus-prefactor curve gets a quadratic fit.
    pub fit_activation: ActivationKind,
    pub base_seed: u64,
}

impl Default for ModuloStudySpec {
    fn default() -> Self {
        let grid = vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
        ModuloStudySpec {
            moduli: vec![10, 7, 4],
            dim: 2,
            runs: vec![
                (ActivationKind::Relu, vec![1.0]),
                (ActivationKind::Tanh, grid.clone()),
                (ActivationKind::Gaussian, grid.clone()),
                (ActivationKind::Sine, grid),
            ],
            seeds: 5,
            depth: 4,
            width: 128,
            iterations: 3000,
            learning_rate: 1e-3,
            fit_activation: ActivationKind::Gaussian,
            base_seed: 0,
        }
    }
}

impl ModuloStudySpec {
    pub fn seed(&self, s: usize) -> u64 {
        rng::derive(self.base_seed, &[s as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuloRow {
    pub modulus: usize,
    pub activation: ActivationKind,
    pub prefactor: f64,
    pub seed: u64,
    /// LZ complexity of the network at initialization (2D grid) or on traversals.
    pub init_lz: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub modulus: usize,
    /// Test accuracy ≈ a t² + b t + c with t = log₂(prefactor).
    pub coefficients: [f64; 3],
    pub peak_prefactor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuloStudy {
    pub spec: ModuloStudySpec,
    pub rows: Vec<ModuloRow>,
    pub peaks: Vec<PeakFit>,
}

fn init_complexity(net: &Network, dim: usize, seed: u64) -> Result<f64> {
    if dim == 2 {
        return Ok(measure_sample(&sample_grid(net, GridSpec::default())?, Measure::Lz)?.raw);
    }
    crate::train::Probe::LzTraversal { points: 64, seed }.measure(net).map(|v| v.unwrap_or(f64::NAN))
}

fn run_one(spec: &ModuloStudySpec, modulus: usize, act: ActivationKind, p: f64, seed: u64) -> Result<ModuloRow> {
    let data = gen_modulo(&ModuloTask::new(spec.dim, modulus, seed))?;
    let arch = ArchSpec::mlp(act, spec.depth, spec.width).with_input_dim(spec.dim).with_prefactor(p);
    let net = Network::init(&arch, &InitSpec::seeded(seed))?;
    let init_lz = init_complexity(&net, spec.dim, seed)?;
    let cfg = TrainConfig {
        loss: Loss::Bce,
        learning_rate: spec.learning_rate,
        iterations: spec.iterations,
        seed,
        ..TrainConfig::default()
    };
    let (net, traj) = train(net, data.train.x.view(), data.train.y.view(), &cfg)?;
    let acc = |x: ndarray::ArrayView2<f64>, y: &ndarray::Array1<f64>| -> Result<f64> {
        let p = predict(&net, x, Loss::Bce)?;
        binary_accuracy(p.as_slice().unwrap(), y.as_slice().unwrap())
    };
    Ok(ModuloRow {
        modulus,
        activation: act,
        prefactor: p,
        seed,
        init_lz,
        train_accuracy: acc(data.train.x.view(), &data.train.y)?,
        test_accuracy: acc(data.test.x.view(), &data.test.y)?,
        final_loss: traj.final_loss().unwrap_or(f64::NAN),
    })
}

/// Trains every (modulus, activation, prefactor, seed) combination.
pub fn run_modulo_study(spec: &ModuloStudySpec) -> Result<ModuloStudy> {
    if spec.moduli.is_empty() || spec.runs.is_empty() || spec.seeds == 0 {
        return Err(Error::InvalidArgument("modulo study needs moduli, activations and seeds".into()));
    }
    let mut jobs = Vec::new();
    for &m in &spec.moduli {
        for (act, ps) in &spec.runs {
            for &p in ps {
                for s in 0..spec.seeds {
                    jobs.push((m, *act, p, spec.seed(s)));
                }
            }
        }
    }
    let rows =
        jobs.par_iter().map(|&(m, a, p, s)| run_one(spec, m, a, p, s)).collect::<Result<Vec<ModuloRow>>>()?;
    let mut peaks = Vec::new();
    for &m in &spec.moduli {
        let pts: Vec<&ModuloRow> =
            rows.iter().filter(|r| r.modulus == m && r.activation == spec.fit_activation).collect();
        let xs: Vec<f64> = pts.iter().map(|r| r.prefactor.log2()).collect();
        let ys: Vec<f64> = pts.iter().map(|r| r.test_accuracy).collect();
        if let Ok(c) = stats::quadratic_fit(&xs, &ys) {
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            peaks.push(PeakFit { modulus: m, coefficients: c, peak_prefactor: stats::quadratic_peak(c, lo, hi).exp2() });
        }
    }
    Ok(ModuloStudy { spec: spec.clone(), rows, peaks })
}

impl ModuloStudy {
    pub fn select(&self, modulus: usize, act: ActivationKind) -> Vec<&ModuloRow> {
        self.rows.iter().filter(|r| r.modulus == modulus && r.activation == act).collect()
    }

    pub fn peak(&self, modulus: usize) -> Option<f64> {
        self.peaks.iter().find(|p| p.modulus == modulus).map(|p| p.peak_prefactor)
    }

    pub fn rows_csv(&self) -> Table {
        let mut t = Table::new(&[
            "modulus", "activation", "prefactor", "seed", "init_lz", "train_accuracy", "test_accuracy", "final_loss",
        ]);
        for r in &self.rows {
            t.row(vec![
                r.modulus.to_string(),
                r.activation.to_string(),
                csv::real(r.prefactor),
                r.seed.to_string(),
                csv::real(r.init_lz),
                csv::real(r.train_accuracy),
                csv::real(r.test_accuracy),
                csv::real(r.final_loss),
            ]);
        }
        t
    }

    /// Seed-averaged cells.
    pub fn cells_csv(&self) -> Table {
        let mut t = Table::new(&["modulus", "activation", "prefactor", "init_lz", "train_accuracy", "test_accuracy", "n"]);
        for &m in &self.spec.moduli {
            for (act, ps) in &self.spec.runs {
                for &p in ps {
                    let sel: Vec<&ModuloRow> =
                        self.rows.iter().filter(|r| r.modulus == m && r.activation == *act && r.prefactor == p).collect();
                    let avg = |f: fn(&ModuloRow) -> f64| stats::mean(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
                    t.row(vec![
                        m.to_string(),
                        act.to_string(),
                        csv::real(p),
                        csv::real(avg(|r| r.init_lz)),
                        csv::real(avg(|r| r.train_accuracy)),
                        csv::real(avg(|r| r.test_accuracy)),
                        sel.len().to_string(),
                    ]);
                }
            }
        }
        t
    }

    pub fn peaks_csv(&self) -> Table {
        let mut t = Table::new(&["modulus", "activation", "a", "b", "c", "peak_prefactor"]);
        for p in &self.peaks {
            t.row(vec![
                p.modulus.to_string(),
                self.spec.fit_activation.to_string(),
                csv::real(p.coefficients[0]),
                csv::real(p.coefficients[1]),
                csv::real(p.coefficients[2]),
                csv::real(p.peak_prefactor),
            ]);
        }
        t
    }

    pub fn write(&self, out: &Artifacts) -> Result<()> {
        out.csv("rows.csv", &self.rows_csv())?;
        out.csv("cells.csv", &self.cells_csv())?;
        out.csv("peaks.csv", &self.peaks_csv())?;
        out.metadata(
            "metadata.txt",
            &[
                ("dim", self.spec.dim.to_string()),
                ("depth", self.spec.depth.to_string()),
                ("width", self.spec.width.to_string()),
                ("iterations", self.spec.iterations.to_string()),
                ("learning_rate", csv::real(self.spec.learning_rate)),
                ("seeds", self.spec.seeds.to_string()),
                ("loss", "bce".into()),
                ("fit", "test accuracy vs log2(prefactor), all seeds".into()),
            ],
        )
    }
}
