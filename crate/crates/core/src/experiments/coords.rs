//! Coordinate-MLP fits: trajectories, reconstructions and the weight-shuffle analysis.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::Artifacts;
use crate::complexity::fourier_complexity;
use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::grid::{render_pgm, sample_grid, FunctionSample, GridSpec};
use crate::net::{ActivationKind, ArchSpec, InitSpec, Network};
use crate::pgm::GrayImage;
use crate::rng;
use crate::stats;
use crate::tasks::{gen_waves, image_task, shapes_task, CoordinateImageTask};
use crate::train::{shuffle_within_layers, train, Loss, Probe, TrainConfig, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoordinateTarget {
    /// Synthetic photograph stand-in with a random 40% of pixels revealed.
    Shapes,
    /// Two orthogonal sines trained on their extrema only.
    Waves { frequency: f64 },
    /// A square PGM with a random 40% of pixels revealed.
    Image { path: PathBuf },
}

impl CoordinateTarget {
    pub fn build(&self, m: usize, seed: u64) -> Result<CoordinateImageTask> {
        match self {
            CoordinateTarget::Shapes => shapes_task(m, seed),
            CoordinateTarget::Waves { frequency } => gen_waves(*frequency, m),
            CoordinateTarget::Image { path } => {
                let img = GrayImage::read(path)?;
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into());
                image_task(&name, &img, seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateStudySpec {
    pub targets: Vec<CoordinateTarget>,
    pub activations: Vec<ActivationKind>,
    /// Weight scales α at initialization.
    pub scales: Vec<f64>,
    pub grid_points: usize,
    pub depth: usize,
    pub width: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub log_every: usize,
    /// Untrained networks per (activation, scale) forming the reference distribution.
    pub reference_seeds: usize,
    /// Independent within-layer permutations of the trained weights.
    pub shuffles: usize,
    pub base_seed: u64,
}

impl Default for CoordinateStudySpec {
    fn default() -> Self {
        CoordinateStudySpec {
            targets: vec![CoordinateTarget::Shapes, CoordinateTarget::Waves { frequency: 2.0 }],
            activations: vec![ActivationKind::Relu, ActivationKind::Tanh, ActivationKind::Sine],
            scales: vec![1.0, 4.0],
            grid_points: 64,
            depth: 3,
            width: 64,
            iterations: 3000,
            learning_rate: 0.02,
            log_every: 50,
            reference_seeds: 20,
            shuffles: 10,
            base_seed: 0,
        }
    }
}

impl CoordinateStudySpec {
    fn arch(&self, act: ActivationKind, scale: f64) -> ArchSpec {
        ArchSpec::mlp(act, self.depth, self.width).with_weight_scale(scale)
    }

    fn grid(&self) -> GridSpec {
        GridSpec::square(self.grid_points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateRun {
    pub target: String,
    pub activation: ActivationKind,
    pub scale: f64,
    pub seed: u64,
    pub trajectory: Trajectory,
    pub init_complexity: f64,
    pub trained_complexity: f64,
    /// Mean over the shuffles.
    pub shuffled_complexity: f64,
    pub shuffled: Vec<f64>,
    pub target_complexity: f64,
    /// C_Fourier of untrained networks with the same specification.
    pub reference: Vec<f64>,
    pub final_loss: f64,
    pub init_map: FunctionSample,
    pub trained_map: FunctionSample,
    pub shuffled_map: FunctionSample,
}

impl CoordinateRun {
    pub fn reference_mean(&self) -> f64 {
        stats::mean(&self.reference)
    }

    pub fn reference_std(&self) -> f64 {
        stats::std_dev(&self.reference)
    }

    /// Distance from the reference mean in reference standard deviations.
    pub fn z(&self, c: f64) -> f64 {
        (c - self.reference_mean()) / self.reference_std()
    }

    fn label(&self) -> String {
        format!("{}_{}_s{}", self.target, self.activation, self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateStudy {
    pub spec: CoordinateStudySpec,
    pub tasks: Vec<CoordinateImageTask>,
    pub runs: Vec<CoordinateRun>,
}

fn complexity(net: &Network, grid: GridSpec) -> Result<(f64, FunctionSample)> {
    let s = sample_grid(net, grid)?;
    Ok((fourier_complexity(&s)?.0, s))
}

fn reference(spec: &CoordinateStudySpec, act: ActivationKind, scale: f64) -> Result<Vec<f64>> {
    (0..spec.reference_seeds)
        .map(|k| {
            let seed = rng::derive(spec.base_seed, &[1 << 20, k as u64]);
            let net = Network::init(&spec.arch(act, scale), &InitSpec::seeded(seed))?;
            Ok(complexity(&net, spec.grid())?.0)
        })
        .collect()
}

fn run_one(spec: &CoordinateStudySpec, task: &CoordinateImageTask, act: ActivationKind, scale: f64) -> Result<CoordinateRun> {
    let seed = spec.base_seed;
    let grid = spec.grid();
    let net = Network::init(&spec.arch(act, scale), &InitSpec::seeded(seed))?;
    let (x, y) = task.train_set()?;
    let cfg = TrainConfig {
        loss: Loss::Mse,
        learning_rate: spec.learning_rate,
        iterations: spec.iterations,
        seed,
        log_every: spec.log_every,
        probe: Probe::Fourier(grid),
        ..TrainConfig::default()
    };
    let (init_c, init_map) = complexity(&net, grid)?;
    let (trained, trajectory) = train(net, x.view(), y.view(), &cfg)?;
    let (trained_c, trained_map) = complexity(&trained, grid)?;
    let mut shuffled = Vec::with_capacity(spec.shuffles);
    let mut shuffled_map = None;
    for k in 0..spec.shuffles {
        let (c, map) = complexity(&shuffle_within_layers(&trained, rng::derive(seed, &[2, k as u64])), grid)?;
        shuffled.push(c);
        shuffled_map.get_or_insert(map);
    }
    let shuffled_map = shuffled_map.expect("at least one shuffle");
    Ok(CoordinateRun {
        target: task.name.clone(),
        activation: act,
        scale,
        seed,
        final_loss: trajectory.final_loss().unwrap_or(f64::NAN),
        trajectory,
        init_complexity: init_c,
        trained_complexity: trained_c,
        shuffled_complexity: stats::mean(&shuffled),
        shuffled,
        target_complexity: fourier_complexity(&task.target_sample()?)?.0,
        reference: reference(spec, act, scale)?,
        init_map,
        trained_map,
        shuffled_map,
    })
}

pub fn run_coordinate_study(spec: &CoordinateStudySpec) -> Result<CoordinateStudy> {
    if spec.targets.is_empty() || spec.activations.is_empty() || spec.scales.is_empty() {
        return Err(Error::InvalidArgument("coordinate study needs targets, activations and scales".into()));
    }
    if spec.reference_seeds < 2 {
        return Err(Error::InvalidArgument("reference distribution needs at least 2 seeds".into()));
    }
    if spec.shuffles == 0 {
        return Err(Error::InvalidArgument("shuffle analysis needs at least one permutation".into()));
    }
    let tasks =
        spec.targets.iter().map(|t| t.build(spec.grid_points, spec.base_seed)).collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for t in 0..tasks.len() {
        for &a in &spec.activations {
            for &s in &spec.scales {
                jobs.push((t, a, s));
            }
        }
    }
    let runs = jobs.par_iter().map(|&(t, a, s)| run_one(spec, &tasks[t], a, s)).collect::<Result<Vec<_>>>()?;
    Ok(CoordinateStudy { spec: spec.clone(), tasks, runs })
}

impl CoordinateStudy {
    pub fn find(&self, target: &str, act: ActivationKind, scale: f64) -> Option<&CoordinateRun> {
        self.runs.iter().find(|r| r.target == target && r.activation == act && r.scale == scale)
    }

    pub fn summary_csv(&self) -> Table {
        let mut t = Table::new(&[
            "target",
            "activation",
            "scale",
            "seed",
            "final_loss",
            "target_c",
            "init_c",
            "trained_c",
            "shuffled_c",
            "reference_mean",
            "reference_std",
            "trained_z",
            "shuffled_z",
        ]);
        for r in &self.runs {
            t.row(vec![
                r.target.clone(),
                r.activation.to_string(),
                csv::real(r.scale),
                r.seed.to_string(),
                csv::real(r.final_loss),
                csv::real(r.target_complexity),
                csv::real(r.init_complexity),
                csv::real(r.trained_complexity),
                csv::real(r.shuffled_complexity),
                csv::real(r.reference_mean()),
                csv::real(r.reference_std()),
                csv::real(r.z(r.trained_complexity)),
                csv::real(r.z(r.shuffled_complexity)),
            ]);
        }
        t
    }

    pub fn trajectories_csv(&self) -> Table {
        let mut t = Table::new(&["target", "activation", "scale", "iteration", "loss", "mean_abs_weight", "complexity"]);
        for r in &self.runs {
            for p in &r.trajectory.points {
                t.row(vec![
                    r.target.clone(),
                    r.activation.to_string(),
                    csv::real(r.scale),
                    p.iteration.to_string(),
                    csv::real(p.loss),
                    csv::real(p.mean_abs_weight),
                    p.complexity.map(csv::real).unwrap_or_default(),
                ]);
            }
        }
        t
    }

    pub fn write(&self, out: &Artifacts) -> Result<()> {
        out.csv("summary.csv", &self.summary_csv())?;
        out.csv("trajectories.csv", &self.trajectories_csv())?;
        for task in &self.tasks {
            out.pgm(&format!("{}_target.pgm", task.name), &render_pgm(&task.target_sample()?)?)?;
            out.pgm(&format!("{}_mask.pgm", task.name), &task.mask_image()?)?;
        }
        for r in &self.runs {
            let l = r.label();
            out.pgm(&format!("{l}_init.pgm"), &render_pgm(&r.init_map)?)?;
            out.pgm(&format!("{l}_trained.pgm"), &render_pgm(&r.trained_map)?)?;
            out.pgm(&format!("{l}_shuffled.pgm"), &render_pgm(&r.shuffled_map)?)?;
        }
        let s = &self.spec;
        out.metadata(
            "metadata.txt",
            &[
                ("grid_points", s.grid_points.to_string()),
                ("depth", s.depth.to_string()),
                ("width", s.width.to_string()),
                ("iterations", s.iterations.to_string()),
                ("learning_rate", csv::real(s.learning_rate)),
                ("reference_seeds", s.reference_seeds.to_string()),
                ("shuffles", s.shuffles.to_string()),
                ("measure", "fourier".into()),
            ],
        )
    }
}
