//! Full-batch Adam training with complexity trajectories.

mod adam;
mod shuffle;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use shuffle::{mean_abs_weight, shuffle_within_layers, tail_ratio, weight_stats, LayerStats};

use crate::complexity::{fourier_complexity, lz_complexity, DEFAULT_LEVELS};
use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::grid::{sample_grid, sample_traversals, GridSpec};
use crate::net::{sigmoid, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// Mean squared error on the raw output.
    Mse,
    /// Binary cross-entropy on `σ(output)`.
    Bce,
}

impl Loss {
    /// Mean loss and per-example `∂ℓ_i/∂f_i`.
    pub fn evaluate(self, f: ArrayView1<f64>, y: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let n = f.len().max(1) as f64;
        let mut grad = Array1::zeros(f.len());
        let mut total = 0.0;
        match self {
            Loss::Mse => Zip::from(&mut grad).and(f).and(y).for_each(|g, &f, &y| {
                let r = f - y;
                total += r * r;
                *g = 2.0 * r;
            }),
            Loss::Bce => Zip::from(&mut grad).and(f).and(y).for_each(|g, &f, &y| {
                // softplus(f) − y·f, computed without overflow
                total += f.max(0.0) + (-f.abs()).exp().ln_1p() - y * f;
                *g = sigmoid(f) - y;
            }),
        }
        (total / n, grad)
    }

    /// Maps raw outputs to predictions in label space.
    pub fn link(self, f: f64) -> f64 {
        match self {
            Loss::Mse => f,
            Loss::Bce => sigmoid(f),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Mse => "mse",
            Loss::Bce => "bce",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Loss::Mse),
            "bce" | "binary-cross-entropy" => Ok(Loss::Bce),
            _ => Err(Error::InvalidArgument(format!("unknown loss {s:?}"))),
        }
    }
}

/// Function measured along a training trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Probe {
    None,
    /// C_Fourier on a regular grid (2D tasks).
    Fourier(GridSpec),
    /// LZ on corner traversals, differences mode (high-dimensional tasks).
    LzTraversal { points: usize, seed: u64 },
}

impl Probe {
    pub fn measure(&self, net: &Network) -> Result<Option<f64>> {
        match *self {
            Probe::None => Ok(None),
            Probe::Fourier(grid) => Ok(Some(fourier_complexity(&sample_grid(net, grid)?)?.0)),
            Probe::LzTraversal { points, seed } => {
                let t = sample_traversals(net, points, seed)?;
                Ok(Some(lz_complexity(&t.values, DEFAULT_LEVELS, true)? as f64))
            }
        }
    }

    /// Fourier for two inputs, LZ traversals otherwise.
    pub fn for_input_dim(d: usize, seed: u64) -> Self {
        if d == 2 {
            Probe::Fourier(GridSpec::default())
        } else {
            Probe::LzTraversal { points: 64, seed }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub learning_rate: f64,
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Log every this many updates; 0 logs only the first and last state.
    pub log_every: usize,
    pub probe: Probe,
    /// Optional global gradient-norm clip.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: Loss::Mse,
            learning_rate: 1e-3,
            iterations: 3000,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            log_every: 0,
            probe: Probe::None,
            clip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub loss: f64,
    pub mean_abs_weight: f64,
    pub complexity: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn to_csv(&self) -> Table {
        let mut t = Table::new(&["iteration", "loss", "mean_abs_weight", "complexity"]);
        for p in &self.points {
            t.row(vec![
                p.iteration.to_string(),
                csv::real(p.loss),
                csv::real(p.mean_abs_weight),
                p.complexity.map(csv::real).unwrap_or_default(),
            ]);
        }
        t
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.points.last().map(|p| p.loss)
    }
}

fn param_norm(net: &Network) -> f64 {
    net.params().iter().flat_map(|p| p.iter()).map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs exactly `cfg.iterations` full-batch Adam updates.
pub fn train(mut net: Network, x: ArrayView2<f64>, y: ArrayView1<f64>, cfg: &TrainConfig) -> Result<(Network, Trajectory)> {
    if x.nrows() != y.len() {
        return Err(Error::InvalidArgument(format!("{} inputs but {} targets", x.nrows(), y.len())));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training data must be finite".into()));
    }
    if cfg.loss == Loss::Bce && y.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidArgument("cross-entropy targets must lie in [0, 1]".into()));
    }
    let shapes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    let mut adam = AdamState::new(&shapes, cfg.beta1, cfg.beta2, cfg.eps);
    let mut traj = Trajectory::default();
    let n = x.nrows().max(1) as f64;
    for it in 0..=cfg.iterations {
        let cache = net.forward_cached(x)?;
        let (loss, dl) = cfg.loss.evaluate(cache.output.view(), y);
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration: it, param_norm: param_norm(&net) });
        }
        let log_now = it == 0 || it == cfg.iterations || (cfg.log_every > 0 && it % cfg.log_every == 0);
        if log_now {
            traj.points.push(TrajectoryPoint {
                iteration: it,
                loss,
                mean_abs_weight: mean_abs_weight(&net),
                complexity: cfg.probe.measure(&net)?,
            });
        }
        if it == cfg.iterations {
            break;
        }
        let mut g = net.backward_batch(&cache, dl.view());
        g.scale(1.0 / n);
        if let Some(limit) = cfg.clip {
            let norm = g.norm();
            if norm > limit {
                g.scale(limit / norm);
            }
        }
        let mut params = net.params_mut();
        adam.step(&mut params, &g.tensors, cfg.learning_rate);
    }
    Ok((net, traj))
}

/// Outputs mapped through the loss link.
pub fn predict(net: &Network, x: ArrayView2<f64>, loss: Loss) -> Result<Array1<f64>> {
    Ok(net.forward_batch(x)?.mapv(|f| loss.link(f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ActivationKind, ArchSpec, InitSpec};
    use ndarray::{Array1, Array2, Axis};

    fn line_data() -> (Array2<f64>, Array1<f64>) {
        let x = Array2::from_shape_fn((32, 1), |(i, _)| -1.0 + 2.0 * i as f64 / 31.0);
        let y = x.column(0).mapv(|v| 0.5 * v + 0.2);
        (x, y)
    }

    #[test]
    fn fits_a_line() {
        let (x, y) = line_data();
        let spec = ArchSpec::mlp(ActivationKind::Relu, 1, 16).with_input_dim(1);
        let net = Network::init(&spec, &InitSpec::seeded(0)).unwrap();
        let cfg = TrainConfig { learning_rate: 1e-2, ..Default::default() };
        let (_, traj) = train(net, x.view(), y.view(), &cfg).unwrap();
        assert!(traj.final_loss().unwrap() < 1e-4, "{:?}", traj.final_loss());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (x, y) = line_data();
        let spec = ArchSpec::mlp(ActivationKind::Tanh, 2, 8).with_input_dim(1);
        let net = Network::init(&spec, &InitSpec::seeded(1)).unwrap();
        let cfg = TrainConfig { learning_rate: 0.0, iterations: 20, ..Default::default() };
        let (out, _) = train(net.clone(), x.view(), y.view(), &cfg).unwrap();
        assert_eq!(out, net);
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let (x, y) = line_data();
        let spec = ArchSpec::mlp(ActivationKind::Gelu, 2, 8).with_input_dim(1);
        let net = Network::init(&spec, &InitSpec::seeded(2)).unwrap();
        let cfg = TrainConfig { learning_rate: 1e-2, iterations: 50, log_every: 10, ..Default::default() };
        let (a, ta) = train(net.clone(), x.view(), y.view(), &cfg).unwrap();
        let (b, _) = train(net.clone(), x.view(), y.view(), &cfg).unwrap();
        assert_eq!(a, b);
        let iters: Vec<usize> = ta.points.iter().map(|p| p.iteration).collect();
        assert_eq!(iters, vec![0, 10, 20, 30, 40, 50]);
        let perm: Vec<usize> = (0..32).rev().collect();
        let (c, _) = train(net, x.select(Axis(0), &perm).view(), y.select(Axis(0), &perm).view(), &cfg).unwrap();
        for (p, q) in a.params().iter().zip(c.params()) {
            for (u, v) in p.iter().zip(q) {
                assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0));
            }
        }
    }

    #[test]
    fn cross_entropy_learns_a_threshold() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| if j == 0 { -1.0 + i as f64 / 20.0 } else { 0.3 });
        let y = x.column(0).mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let net = Network::init(&ArchSpec::mlp(ActivationKind::Relu, 2, 16), &InitSpec::seeded(3)).unwrap();
        let cfg = TrainConfig { loss: Loss::Bce, learning_rate: 1e-2, iterations: 500, ..Default::default() };
        let (trained, traj) = train(net, x.view(), y.view(), &cfg).unwrap();
        assert!(traj.points.last().unwrap().loss < traj.points[0].loss);
        let p = predict(&trained, x.view(), Loss::Bce).unwrap();
        let acc = p.iter().zip(&y).filter(|(p, y)| (**p > 0.5) == (**y > 0.5)).count();
        assert!(acc >= 38);
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let f = Array1::from(vec![-3.0, -0.2, 0.4, 5.0]);
        let y = Array1::from(vec![0.0, 1.0, 0.3, 1.0]);
        for loss in [Loss::Mse, Loss::Bce] {
            let (_, g) = loss.evaluate(f.view(), y.view());
            for i in 0..4 {
                let mut fp = f.clone();
                fp[i] += 1e-6;
                let mut fm = f.clone();
                fm[i] -= 1e-6;
                let fd = (loss.evaluate(fp.view(), y.view()).0 - loss.evaluate(fm.view(), y.view()).0) / 2e-6 * 4.0;
                assert!((fd - g[i]).abs() < 1e-6, "{loss} {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let (x, _) = line_data();
        let y = x.column(0).mapv(|v| v * 1e200);
        let net = Network::init(&ArchSpec::mlp(ActivationKind::Relu, 1, 4).with_input_dim(1), &InitSpec::seeded(0))
            .unwrap();
        let cfg = TrainConfig { iterations: 5, ..Default::default() };
        let err = train(net, x.view(), y.view(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { iteration: 0, .. }), "{err}");
        assert!(err.is_numerical());
    }

    #[test]
    fn trajectory_records_complexity() {
        let x = Array2::from_shape_fn((16, 2), |(i, j)| if j == 0 { (i % 4) as f64 / 3.0 } else { (i / 4) as f64 / 3.0 });
        let y = x.column(0).to_owned();
        let net = Network::init(&ArchSpec::mlp(ActivationKind::Relu, 2, 8), &InitSpec::seeded(5)).unwrap();
        let cfg = TrainConfig {
            iterations: 4,
            log_every: 2,
            probe: Probe::Fourier(GridSpec::square(16)),
            ..Default::default()
        };
        let (_, traj) = train(net, x.view(), y.view(), &cfg).unwrap();
        assert_eq!(traj.points.len(), 3);
        assert!(traj.points.iter().all(|p| p.complexity.unwrap() > 0.0));
        let rows = csv::parse(traj.to_csv().as_str());
        assert_eq!(rows[0], vec!["iteration", "loss", "mean_abs_weight", "complexity"]);
        assert_eq!(rows.len(), 4);
    }
}
