//! Regular-grid and corner-traversal sampling of network functions.
//!
//! Grid points are endpoint-inclusive (`-1` and `+1` are both sampled) and
//! enumerated row-major with the last axis fastest: for `d = 2`, value
//! `i * m + j` sits at `(x_i, y_j)`.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::net::Network;
use crate::pgm::GrayImage;
use crate::rng::{self, role};

/// Largest number of grid points materialized at once.
pub const POINT_BUDGET: usize = 1 << 22;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { dim: 2, points_per_axis: 64 }
    }
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize) -> Result<Self> {
        if dim == 0 || points_per_axis < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs dim >= 1 and at least 2 points per axis (got d={dim}, m={points_per_axis})"
            )));
        }
        Ok(GridSpec { dim, points_per_axis })
    }

    pub fn square(m: usize) -> Self {
        GridSpec { dim: 2, points_per_axis: m }
    }

    /// Total points, or an error if above [`POINT_BUDGET`].
    pub fn len(&self) -> Result<usize> {
        let total = (self.points_per_axis as u128).checked_pow(self.dim as u32).unwrap_or(u128::MAX);
        if total > POINT_BUDGET as u128 {
            return Err(Error::GridTooLarge { points: total, budget: POINT_BUDGET });
        }
        Ok(total as usize)
    }

    /// Coordinate of index `i` along any axis.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        let m = self.points_per_axis;
        if i + 1 == m {
            1.0
        } else {
            -1.0 + 2.0 * i as f64 / (m - 1) as f64
        }
    }

    /// Per-axis indices of flat point `flat`.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let m = self.points_per_axis;
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % m;
            flat /= m;
        }
        idx
    }

    /// Coordinates of points `start..end` as rows.
    pub fn points_range(&self, start: usize, end: usize) -> Array2<f64> {
        let m = self.points_per_axis;
        Array2::from_shape_fn((end - start, self.dim), |(r, axis)| {
            let stride = m.pow((self.dim - 1 - axis) as u32);
            self.coordinate(((start + r) / stride) % m)
        })
    }

    pub fn points(&self) -> Result<Array2<f64>> {
        Ok(self.points_range(0, self.len()?))
    }
}

/// Outputs of a function on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Architecture identifier and seed, or a task name.
    pub provenance: String,
}

impl FunctionSample {
    pub fn new(grid: GridSpec, values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        let n = grid.len()?;
        if values.len() != n {
            return Err(Error::InvalidArgument(format!("{} values for a grid of {n} points", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite sample value at point {i}")));
        }
        Ok(FunctionSample { grid, values, provenance: provenance.into() })
    }

    /// Samples an analytic function.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64, provenance: impl Into<String>) -> Result<Self> {
        let pts = grid.points()?;
        let values = pts.rows().into_iter().map(|r| f(r.as_slice().expect("standard layout"))).collect();
        FunctionSample::new(grid, values, provenance)
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    /// Values as an `m × m` array indexed `[x, y]` (d = 2 only).
    pub fn as_matrix(&self) -> Result<ArrayView2<'_, f64>> {
        if self.grid.dim != 2 {
            return Err(Error::UnsupportedDimension { dim: self.grid.dim, measure: "matrix view" });
        }
        let m = self.grid.points_per_axis;
        ArrayView2::from_shape((m, m), &self.values).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// CSV with one index column per axis followed by the value.
    pub fn to_csv(&self) -> Table {
        let mut header: Vec<String> = (0..self.grid.dim).map(|a| format!("i{a}")).collect();
        header.push("value".into());
        let mut t = Table::new(&header);
        for (flat, &v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.multi_index(flat).iter().map(|i| i.to_string()).collect();
            row.push(csv::real(v));
            t.row(row);
        }
        t
    }
}

/// Evaluates `net` on every grid point, in grid order.
pub fn sample_grid(net: &Network, grid: GridSpec) -> Result<FunctionSample> {
    if grid.dim != net.input_dim() {
        return Err(Error::DimensionMismatch { expected: net.input_dim(), got: grid.dim });
    }
    let n = grid.len()?;
    let chunks: Vec<(usize, usize)> = (0..n).step_by(CHUNK).map(|s| (s, (s + CHUNK).min(n))).collect();
    let parts = chunks
        .par_iter()
        .map(|&(s, e)| net.forward_batch(grid.points_range(s, e).view()).map(|y| y.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let values = parts.concat();
    FunctionSample::new(grid, values, net.spec().describe())
}

/// Outputs along `m` straight segments joining `m` random hypercube corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalSample {
    pub dim: usize,
    pub num_corners: usize,
    pub points_per_segment: usize,
    /// Corners in visiting order; segment `s` runs from corner `s` to corner `s + 1` (cyclically).
    pub corners: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// The `m` random corners in `{-1, 1}^d` fixed by `seed`.
pub fn traversal_corners(d: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, &[d as u64, role::CORNERS]);
    (0..m).map(|_| (0..d).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect()).collect()
}

/// All `m²` traversal points, segment by segment; each segment includes both endpoints.
pub fn traversal_points(corners: &[Vec<f64>], points_per_segment: usize) -> Array2<f64> {
    let m = corners.len();
    let d = corners.first().map_or(0, Vec::len);
    let p = points_per_segment;
    Array2::from_shape_fn((m * p, d), |(row, axis)| {
        let (seg, k) = (row / p, row % p);
        let a = corners[seg][axis];
        let b = corners[(seg + 1) % m][axis];
        if k + 1 == p {
            b
        } else {
            let t = k as f64 / (p - 1) as f64;
            a + t * (b - a)
        }
    })
}

pub fn sample_traversals(net: &Network, m: usize, seed: u64) -> Result<TraversalSample> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("traversals need m >= 2 (got {m})")));
    }
    let d = net.input_dim();
    let corners = traversal_corners(d, m, seed);
    let pts = traversal_points(&corners, m);
    let values = net.forward_batch(pts.view())?.to_vec();
    Ok(TraversalSample { dim: d, num_corners: m, points_per_segment: m, corners, values })
}

/// Min-max normalized grayscale image of a 2D sample: column = x index,
/// row = y index.
pub fn render_pgm(sample: &FunctionSample) -> Result<GrayImage> {
    let grid = sample.grid;
    if grid.dim != 2 {
        return Err(Error::UnsupportedDimension { dim: grid.dim, measure: "image rendering" });
    }
    let m = grid.points_per_axis;
    let transposed: Vec<f64> = (0..m * m).map(|k| sample.values[(k % m) * m + k / m]).collect();
    GrayImage::from_values(m, m, &transposed)
}
