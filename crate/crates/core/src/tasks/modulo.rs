//! Modulo-addition classification on an integer grid.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, role};

/// Largest enumerable input grid.
pub const MAX_MODULO_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuloTask {
    /// Alphabet size; inputs take values in `0..alphabet`.
    pub alphabet: usize,
    pub dim: usize,
    pub modulus: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl ModuloTask {
    pub fn new(dim: usize, modulus: usize, seed: u64) -> Self {
        ModuloTask { alphabet: 16, dim, modulus, train_fraction: 0.5, seed }
    }
}

/// `1` iff `(Σ x_i mod M) ≤ M/2`.
pub fn modulo_label(x: &[u32], modulus: usize) -> bool {
    let s: u64 = x.iter().map(|&v| v as u64).sum();
    2 * (s % modulus as u64) <= modulus as u64
}

/// Maps `0..alphabet` onto `[−1, 1]`.
pub fn scale_input(v: u32, alphabet: usize) -> f64 {
    2.0 * v as f64 / (alphabet - 1) as f64 - 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuloSplit {
    pub raw: Array2<u32>,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

impl ModuloSplit {
    fn from_points(points: &[Vec<u32>], task: &ModuloTask) -> Self {
        let n = points.len();
        let raw = Array2::from_shape_fn((n, task.dim), |(i, j)| points[i][j]);
        let x = raw.mapv(|v| scale_input(v, task.alphabet));
        let y = Array1::from_iter(points.iter().map(|p| if modulo_label(p, task.modulus) { 1.0 } else { 0.0 }));
        ModuloSplit { raw, x, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuloData {
    pub task: ModuloTask,
    pub train: ModuloSplit,
    pub test: ModuloSplit,
}

/// Every point of `[0, N−1]^d` exactly once, split by a seeded permutation.
pub fn gen_modulo(task: &ModuloTask) -> Result<ModuloData> {
    if task.alphabet < 2 || task.modulus < 1 || task.dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "modulo task needs alphabet >= 2, modulus >= 1, dim >= 1 (got {}, {}, {})",
            task.alphabet, task.modulus, task.dim
        )));
    }
    if !(task.train_fraction > 0.0 && task.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {} outside (0, 1)", task.train_fraction)));
    }
    let total = (task.alphabet as u128).pow(task.dim as u32);
    if total > MAX_MODULO_POINTS as u128 {
        return Err(Error::GridTooLarge { points: total, budget: MAX_MODULO_POINTS });
    }
    let total = total as usize;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng::stream(task.seed, &[task.dim as u64, role::SPLIT]));
    let n_train = ((total as f64 * task.train_fraction).round() as usize).clamp(1, total - 1);
    let decode = |mut flat: usize| {
        let mut p = vec![0u32; task.dim];
        for slot in p.iter_mut().rev() {
            *slot = (flat % task.alphabet) as u32;
            flat /= task.alphabet;
        }
        p
    };
    let mut train: Vec<usize> = order[..n_train].to_vec();
    let mut test: Vec<usize> = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    let tr: Vec<Vec<u32>> = train.into_iter().map(decode).collect();
    let te: Vec<Vec<u32>> = test.into_iter().map(decode).collect();
    Ok(ModuloData { task: *task, train: ModuloSplit::from_points(&tr, task), test: ModuloSplit::from_points(&te, task) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn worked_labels() {
        assert!(modulo_label(&[0, 0, 0, 0], 10));
        assert!(modulo_label(&[15, 15], 4));
        assert!(!modulo_label(&[3, 3], 10));
        assert!(modulo_label(&[7, 7, 1], 7));
    }

    #[test]
    fn positive_fraction_on_full_grid() {
        for m in [10usize, 7, 4] {
            // Count sums s = a + b over 16×16 directly.
            let mut pos = 0;
            for a in 0..16u64 {
                for b in 0..16u64 {
                    if 2 * ((a + b) % m as u64) <= m as u64 {
                        pos += 1;
                    }
                }
            }
            let data = gen_modulo(&ModuloTask::new(2, m, 3)).unwrap();
            let got = data.train.y.sum() + data.test.y.sum();
            assert_eq!(got as usize, pos, "M={m}");
        }
        // M = 10: residues 0..=5 are positive.
        let data = gen_modulo(&ModuloTask::new(2, 10, 0)).unwrap();
        assert_eq!((data.train.y.sum() + data.test.y.sum()) as usize, 154);
    }

    #[test]
    fn split_is_disjoint_complete_and_seeded() {
        let a = gen_modulo(&ModuloTask::new(2, 7, 11)).unwrap();
        let b = gen_modulo(&ModuloTask::new(2, 7, 11)).unwrap();
        let c = gen_modulo(&ModuloTask::new(2, 7, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train.raw, c.train.raw);
        assert_eq!(a.train.len(), 128);
        let tr: HashSet<Vec<u32>> = a.train.raw.rows().into_iter().map(|r| r.to_vec()).collect();
        let te: HashSet<Vec<u32>> = a.test.raw.rows().into_iter().map(|r| r.to_vec()).collect();
        assert!(tr.is_disjoint(&te));
        assert_eq!(tr.len() + te.len(), 256);
        assert_eq!(a.train.x[[0, 0]], scale_input(a.train.raw[[0, 0]], 16));
        assert_eq!(scale_input(0, 16), -1.0);
        assert_eq!(scale_input(15, 16), 1.0);
    }

    #[test]
    fn oversized_grid_rejected() {
        assert!(matches!(gen_modulo(&ModuloTask::new(8, 10, 0)), Err(Error::GridTooLarge { .. })));
        assert!(gen_modulo(&ModuloTask { train_fraction: 1.0, ..ModuloTask::new(2, 10, 0) }).is_err());
    }

    proptest! {
        #[test]
        fn labels_ignore_coordinate_order(mut x in proptest::collection::vec(0u32..16, 1..6), m in 1usize..12, seed: u64) {
            let before = modulo_label(&x, m);
            x.shuffle(&mut rng::stream(seed, &[]));
            prop_assert_eq!(before, modulo_label(&x, m));
        }
    }
}
