//! Depth × weight-scale sweeps of random networks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{fixed_scale_image, Artifacts};
use crate::complexity::{measure_sample, Measure};
use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::grid::{render_pgm, sample_grid, FunctionSample, GridSpec};
use crate::net::{ArchSpec, InitSpec, Network};
use crate::rng;
use crate::stats;

/// `n` values from `lo` to `hi` inclusive, evenly spaced in log scale.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| if i + 1 == n { hi } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() }).collect()
}

/// Ten weight scales from 0.5 to 6.
pub fn default_scales() -> Vec<f64> {
    log_spaced(0.5, 6.0, 10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Activation, width and component flags; depth and scale are overridden per cell.
    pub template: ArchSpec,
    pub depths: Vec<usize>,
    pub scales: Vec<f64>,
    pub seeds: usize,
    pub measures: Vec<Measure>,
    pub grid: GridSpec,
    pub base_seed: u64,
}

impl SweepSpec {
    /// Depths 1..=6 (only 1 for the unbiased model), default scales, 20 seeds, Fourier.
    pub fn new(template: ArchSpec) -> Self {
        let depths = if template.is_unbiased() { vec![1] } else { (1..=6).collect() };
        SweepSpec {
            template,
            depths,
            scales: default_scales(),
            seeds: 20,
            measures: vec![Measure::Fourier],
            grid: GridSpec::default(),
            base_seed: 0,
        }
    }

    pub fn cell_spec(&self, depth: usize, scale: f64) -> ArchSpec {
        let s = self.template.with_weight_scale(scale);
        if s.is_unbiased() {
            s
        } else {
            s.with_depth(depth)
        }
    }

    /// Network seed for seed index `s`, shared by every cell.
    pub fn seed(&self, s: usize) -> u64 {
        rng::derive(self.base_seed, &[s as u64])
    }

    fn validate(&self) -> Result<()> {
        if self.template.input_dim != 2 || self.grid.dim != 2 {
            return Err(Error::InvalidArgument("heatmap sweeps need two-input architectures and a 2D grid".into()));
        }
        if self.depths.is_empty() || self.scales.is_empty() || self.seeds == 0 || self.measures.is_empty() {
            return Err(Error::InvalidArgument("sweep axes, seeds and measures must be non-empty".into()));
        }
        for &d in &self.depths {
            self.cell_spec(d, self.scales[0]).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub arch: String,
    pub depth: usize,
    pub scale: f64,
    pub seed: u64,
    pub measure: Measure,
    /// NaN when the sample or the measure failed.
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Ordered by depth, scale, seed, measure.
    pub rows: Vec<SweepRow>,
    /// `(depth index, scale index, reason)` for each failed sample.
    pub failures: Vec<(usize, usize, u64, String)>,
    /// First-seed function maps for every other cell (checkerboard pattern).
    pub maps: Vec<(usize, usize, FunctionSample)>,
}

struct Job {
    di: usize,
    si: usize,
    seed: u64,
}

struct Outcome {
    raws: Vec<f64>,
    failure: Option<String>,
    map: Option<FunctionSample>,
}

fn run_one(spec: &SweepSpec, job: &Job, keep_map: bool) -> Outcome {
    let arch = spec.cell_spec(spec.depths[job.di], spec.scales[job.si]);
    let sample = Network::init(&arch, &InitSpec::seeded(job.seed)).and_then(|n| sample_grid(&n, spec.grid));
    let sample = match sample {
        Ok(s) => s,
        Err(e) => return Outcome { raws: vec![f64::NAN; spec.measures.len()], failure: Some(e.to_string()), map: None },
    };
    let mut failure = None;
    let raws = spec
        .measures
        .iter()
        .map(|&m| match measure_sample(&sample, m) {
            Ok(c) => c.raw,
            Err(e) => {
                failure.get_or_insert(format!("{m}: {e}"));
                f64::NAN
            }
        })
        .collect();
    Outcome { raws, failure, map: keep_map.then_some(sample) }
}

/// Samples every (depth, scale, seed) cell; rows are min-max normalized within
/// this sweep (see [`normalize_jointly`] to share one scale across sweeps).
pub fn run_heatmap_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let jobs: Vec<Job> = (0..spec.depths.len())
        .flat_map(|di| (0..spec.scales.len()).flat_map(move |si| (0..spec.seeds).map(move |s| (di, si, s))))
        .map(|(di, si, s)| Job { di, si, seed: spec.seed(s) })
        .collect();
    let first_seed = spec.seed(0);
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|j| run_one(spec, j, j.seed == first_seed && (j.di + j.si) % 2 == 0))
        .collect();
    let mut rows = Vec::with_capacity(jobs.len() * spec.measures.len());
    let mut failures = Vec::new();
    let mut maps = Vec::new();
    for (job, out) in jobs.iter().zip(outcomes) {
        let arch = spec.cell_spec(spec.depths[job.di], spec.scales[job.si]).describe();
        for (&measure, &raw) in spec.measures.iter().zip(&out.raws) {
            rows.push(SweepRow {
                arch: arch.clone(),
                depth: spec.depths[job.di],
                scale: spec.scales[job.si],
                seed: job.seed,
                measure,
                raw,
                normalized: f64::NAN,
            });
        }
        if let Some(reason) = out.failure {
            failures.push((job.di, job.si, job.seed, reason));
        }
        if let Some(m) = out.map {
            maps.push((job.di, job.si, m));
        }
    }
    let mut result = SweepResult { spec: spec.clone(), rows, failures, maps };
    normalize_jointly(std::slice::from_mut(&mut result));
    Ok(result)
}

/// Min-max normalizes each measure over the finite rows of all `results` together.
pub fn normalize_jointly(results: &mut [SweepResult]) {
    for m in Measure::ALL {
        let raw: Vec<f64> =
            results.iter().flat_map(|r| r.rows.iter()).filter(|r| r.measure == m && r.raw.is_finite()).map(|r| r.raw).collect();
        if raw.is_empty() {
            continue;
        }
        let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for row in results.iter_mut().flat_map(|r| r.rows.iter_mut()).filter(|r| r.measure == m) {
            row.normalized = if !row.raw.is_finite() {
                f64::NAN
            } else if hi > lo {
                (row.raw - lo) / (hi - lo)
            } else {
                0.0
            };
        }
    }
}

impl SweepResult {
    fn cell_values(&self, measure: Measure, di: usize, si: usize, normalized: bool) -> (Vec<f64>, usize) {
        let (d, s) = (self.spec.depths[di], self.spec.scales[si]);
        let mut vals = Vec::new();
        let mut excluded = 0;
        for r in self.rows.iter().filter(|r| r.measure == measure && r.depth == d && r.scale == s) {
            let v = if normalized { r.normalized } else { r.raw };
            if v.is_finite() {
                vals.push(v);
            } else {
                excluded += 1;
            }
        }
        (vals, excluded)
    }

    /// Per-cell statistics of the normalized values, indexed `[depth][scale]`.
    pub fn cells(&self, measure: Measure) -> Vec<Vec<CellSummary>> {
        self.cells_of(measure, true)
    }

    /// Per-cell statistics of the raw values.
    pub fn raw_cells(&self, measure: Measure) -> Vec<Vec<CellSummary>> {
        self.cells_of(measure, false)
    }

    fn cells_of(&self, measure: Measure, normalized: bool) -> Vec<Vec<CellSummary>> {
        (0..self.spec.depths.len())
            .map(|di| {
                (0..self.spec.scales.len())
                    .map(|si| {
                        let (v, excluded) = self.cell_values(measure, di, si, normalized);
                        CellSummary { mean: stats::mean(&v), std: stats::std_dev(&v), count: v.len(), excluded }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn rows_csv(&self) -> Table {
        let mut t = Table::new(&["arch", "depth", "scale", "seed", "measure", "raw", "normalized"]);
        for r in &self.rows {
            t.row(vec![
                r.arch.clone(),
                r.depth.to_string(),
                csv::real(r.scale),
                r.seed.to_string(),
                r.measure.to_string(),
                csv::real(r.raw),
                csv::real(r.normalized),
            ]);
        }
        t
    }

    pub fn cells_csv(&self) -> Table {
        let mut t = Table::new(&["measure", "depth", "scale", "mean", "std", "count", "excluded", "raw_mean"]);
        for &m in &self.spec.measures {
            let (norm, raw) = (self.cells(m), self.raw_cells(m));
            for (di, &d) in self.spec.depths.iter().enumerate() {
                for (si, &s) in self.spec.scales.iter().enumerate() {
                    let c = norm[di][si];
                    t.row(vec![
                        m.to_string(),
                        d.to_string(),
                        csv::real(s),
                        csv::real(c.mean),
                        csv::real(c.std),
                        c.count.to_string(),
                        c.excluded.to_string(),
                        csv::real(raw[di][si].mean),
                    ]);
                }
            }
        }
        t
    }

    pub fn failures_csv(&self) -> Table {
        let mut t = Table::new(&["depth", "scale", "seed", "reason"]);
        for (di, si, seed, reason) in &self.failures {
            t.row(vec![
                self.spec.depths[*di].to_string(),
                csv::real(self.spec.scales[*si]),
                seed.to_string(),
                reason.clone(),
            ]);
        }
        t
    }

    /// Cell means with scales as rows (smallest on top) and depths as columns.
    pub fn heatmap(&self, measure: Measure) -> Result<crate::pgm::GrayImage> {
        let cells = self.cells(measure);
        let (nd, ns) = (self.spec.depths.len(), self.spec.scales.len());
        let values: Vec<f64> = (0..ns * nd).map(|k| cells[k % nd][k / nd].mean).collect();
        fixed_scale_image(ns, nd, &values, 8)
    }

    /// Writes rows, cells, failures, metadata, one heatmap per measure and the function maps.
    pub fn write(&self, out: &Artifacts, prefix: &str) -> Result<()> {
        out.csv(&format!("{prefix}rows.csv"), &self.rows_csv())?;
        out.csv(&format!("{prefix}cells.csv"), &self.cells_csv())?;
        out.csv(&format!("{prefix}failures.csv"), &self.failures_csv())?;
        let scales: Vec<String> = self.spec.scales.iter().map(|&s| csv::real(s)).collect();
        let depths: Vec<String> = self.spec.depths.iter().map(|d| d.to_string()).collect();
        out.metadata(
            &format!("{prefix}metadata.txt"),
            &[
                ("template", self.spec.template.describe()),
                ("depths", depths.join(" ")),
                ("scales", scales.join(" ")),
                ("seeds", self.spec.seeds.to_string()),
                ("base_seed", self.spec.base_seed.to_string()),
                ("grid", format!("{}^{}", self.spec.grid.points_per_axis, self.spec.grid.dim)),
                ("failures", self.failures.len().to_string()),
                ("maps", "first seed of cells with (depth index + scale index) even".into()),
            ],
        )?;
        for &m in &self.spec.measures {
            out.pgm(&format!("{prefix}heatmap_{m}.pgm"), &self.heatmap(m)?)?;
        }
        for (di, si, sample) in &self.maps {
            out.pgm(&format!("{prefix}map_d{}_s{si}.pgm", self.spec.depths[*di]), &render_pgm(sample)?)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ActivationKind;

    fn small(act: ActivationKind) -> SweepSpec {
        SweepSpec {
            depths: vec![1, 3],
            scales: vec![0.5, 2.0, 6.0],
            seeds: 3,
            measures: vec![Measure::Fourier, Measure::Lz],
            grid: GridSpec::square(32),
            ..SweepSpec::new(ArchSpec::mlp(act, 1, 16))
        }
    }

    #[test]
    fn log_spacing() {
        let s = default_scales();
        assert_eq!(s.len(), 10);
        assert_eq!((s[0], s[9]), (0.5, 6.0));
        for w in s.windows(2) {
            assert!((w[1] / w[0] - 12f64.powf(1.0 / 9.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn row_count_and_order() {
        let r = run_heatmap_sweep(&small(ActivationKind::Tanh)).unwrap();
        assert_eq!(r.rows.len(), 2 * 3 * 3 * 2);
        assert_eq!((r.rows[0].depth, r.rows[0].scale, r.rows[0].measure), (1, 0.5, Measure::Fourier));
        assert_eq!(r.rows[1].measure, Measure::Lz);
        assert_eq!(r.rows.last().unwrap().depth, 3);
        // Identical seed lists in every cell.
        let seeds: Vec<u64> = r.rows.iter().take(6).step_by(2).map(|x| x.seed).collect();
        assert!(r.rows.chunks(6).all(|c| c.iter().step_by(2).map(|x| x.seed).collect::<Vec<_>>() == seeds));
        assert!(r.rows.iter().all(|x| (0.0..=1.0).contains(&x.normalized)));
        assert_eq!(r.maps.len(), 3);
        let cells = r.cells(Measure::Fourier);
        assert_eq!(cells[1][2].count, 3);
    }

    #[test]
    fn joint_normalization_spans_all_results() {
        let mut rs = vec![
            run_heatmap_sweep(&small(ActivationKind::Relu)).unwrap(),
            run_heatmap_sweep(&small(ActivationKind::Sine)).unwrap(),
        ];
        normalize_jointly(&mut rs);
        let all: Vec<f64> = rs.iter().flat_map(|r| r.rows.iter()).filter(|r| r.measure == Measure::Fourier).map(|r| r.normalized).collect();
        assert_eq!(all.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(all.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
    }

    #[test]
    fn overflow_is_counted_not_dropped() {
        let spec = SweepSpec {
            depths: vec![6],
            scales: vec![1.0, 1e150],
            seeds: 2,
            measures: vec![Measure::Fourier],
            grid: GridSpec::square(16),
            ..SweepSpec::new(ArchSpec::mlp(ActivationKind::Relu, 1, 16))
        };
        let r = run_heatmap_sweep(&spec).unwrap();
        assert_eq!(r.rows.len(), 4);
        let cells = r.cells(Measure::Fourier);
        assert_eq!((cells[0][0].count, cells[0][0].excluded), (2, 0));
        assert_eq!((cells[0][1].count, cells[0][1].excluded), (0, 2));
        assert_eq!(r.failures.len(), 2);
        assert!(r.failures_csv().as_str().contains("non-finite"));
    }

    #[test]
    fn writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_heatmap_sweep(&small(ActivationKind::Gaussian)).unwrap();
        r.write(&Artifacts::new(dir.path()), "").unwrap();
        for f in ["rows.csv", "cells.csv", "failures.csv", "metadata.txt", "heatmap_fourier.pgm", "heatmap_lz.pgm", "map_d1_s0.pgm"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let img = crate::pgm::GrayImage::read(dir.path().join("heatmap_fourier.pgm")).unwrap();
        assert_eq!((img.width, img.height), (16, 24));
    }
}
