//! Agreement between complexity measures over a pool of random architectures.

use rand::Rng;
use rayon::prelude::*;

use super::artifacts::Artifacts;
use crate::complexity::{measure_sample, normalize, Measure};
use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::grid::{sample_grid, GridSpec};
use crate::net::{ActivationKind, ArchSpec, InitSpec, Network};
use crate::rng::{self, role};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub arch: ArchSpec,
    pub seed: u64,
}

/// `n` random two-input MLPs: any activation, depth 1–6, width 64, weight
/// scale log-uniform in [0.5, 6], each component flag on with probability 1/3.
pub fn random_pool(n: usize, seed: u64) -> Vec<PoolEntry> {
    let mut r = rng::stream(seed, &[role::POOL]);
    (0..n)
        .map(|i| {
            let act = ActivationKind::ALL[r.random_range(0..ActivationKind::ALL.len())];
            let depth = r.random_range(1..=6);
            let scale = (0.5f64.ln() + r.random::<f64>() * (12f64).ln()).exp();
            let arch = ArchSpec::mlp(act, depth, 64)
                .with_weight_scale(scale)
                .with_residual(r.random_bool(1.0 / 3.0))
                .with_layernorm(r.random_bool(1.0 / 3.0))
                .with_gating(r.random_bool(1.0 / 3.0));
            PoolEntry { arch, seed: rng::derive(seed, &[i as u64]) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationStudy {
    pub measures: Vec<Measure>,
    pub entries: Vec<PoolEntry>,
    /// Raw scores per entry, one per measure; NaN rows are excluded from the statistics.
    pub raw: Vec<Vec<f64>>,
    /// Min-max normalized over the finite entries.
    pub normalized: Vec<Vec<f64>>,
    pub excluded: usize,
    /// Spearman ρ for every measure pair, in (i < j) order.
    pub pairs: Vec<(Measure, Measure, f64)>,
}

impl CorrelationStudy {
    pub fn rho(&self, a: Measure, b: Measure) -> Option<f64> {
        self.pairs.iter().find(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a)).map(|p| p.2)
    }

    pub fn scatter_csv(&self) -> Table {
        let mut header = vec!["arch".to_string(), "seed".to_string()];
        for m in &self.measures {
            header.push(format!("{m}_raw"));
            header.push(format!("{m}_normalized"));
        }
        let mut t = Table::new(&header);
        for (i, e) in self.entries.iter().enumerate() {
            let mut row = vec![e.arch.describe(), e.seed.to_string()];
            for k in 0..self.measures.len() {
                row.push(csv::real(self.raw[i][k]));
                row.push(csv::real(self.normalized[i][k]));
            }
            t.row(row);
        }
        t
    }

    pub fn pairs_csv(&self) -> Table {
        let mut t = Table::new(&["measure_a", "measure_b", "spearman", "n"]);
        for (a, b, rho) in &self.pairs {
            t.row(vec![a.to_string(), b.to_string(), csv::real(*rho), (self.entries.len() - self.excluded).to_string()]);
        }
        t
    }

    pub fn write(&self, out: &Artifacts) -> Result<()> {
        out.csv("scatter.csv", &self.scatter_csv())?;
        out.csv("correlations.csv", &self.pairs_csv())?;
        out.metadata(
            "metadata.txt",
            &[("pool", self.entries.len().to_string()), ("excluded", self.excluded.to_string())],
        )
    }
}

pub fn run_correlation_study(pool: &[PoolEntry], measures: &[Measure], grid: GridSpec) -> Result<CorrelationStudy> {
    if pool.len() < 3 || measures.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 3 architectures and 2 measures".into()));
    }
    let raw: Vec<Vec<f64>> = pool
        .par_iter()
        .map(|e| {
            let sample = Network::init(&e.arch, &InitSpec::seeded(e.seed)).and_then(|n| sample_grid(&n, grid));
            match sample {
                Ok(s) => measures.iter().map(|&m| measure_sample(&s, m).map_or(f64::NAN, |c| c.raw)).collect(),
                Err(_) => vec![f64::NAN; measures.len()],
            }
        })
        .collect();
    let keep: Vec<usize> = (0..pool.len()).filter(|&i| raw[i].iter().all(|v| v.is_finite())).collect();
    if keep.len() < 3 {
        return Err(Error::Degenerate(format!("only {} finite pool entries", keep.len())));
    }
    let mut normalized = vec![vec![f64::NAN; measures.len()]; pool.len()];
    let mut columns = Vec::new();
    for k in 0..measures.len() {
        let col: Vec<f64> = keep.iter().map(|&i| raw[i][k]).collect();
        for (&i, v) in keep.iter().zip(normalize(&col)) {
            normalized[i][k] = v;
        }
        columns.push(col);
    }
    let mut pairs = Vec::new();
    for a in 0..measures.len() {
        for b in a + 1..measures.len() {
            pairs.push((measures[a], measures[b], stats::spearman(&columns[a], &columns[b])?));
        }
    }
    Ok(CorrelationStudy {
        measures: measures.to_vec(),
        entries: pool.to_vec(),
        raw,
        normalized,
        excluded: pool.len() - keep.len(),
        pairs,
    })
}
