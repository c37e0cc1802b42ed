//! Coordinate-image targets: fit pixel intensity as a function of `(x, y)`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::grid::{FunctionSample, GridSpec};
use crate::pgm::GrayImage;
use crate::rng::{self, role};

/// Fraction of pixels revealed for image targets.
pub const IMAGE_TRAIN_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateImageTask {
    pub name: String,
    pub grid: GridSpec,
    /// Intensities in `[0, 1]` in grid order (value `i·m + j` sits at `(x_i, y_j)`).
    pub target: Vec<f64>,
    /// Training pixels, in grid order.
    pub mask: Vec<bool>,
}

impl CoordinateImageTask {
    pub fn train_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// All grid coordinates.
    pub fn inputs(&self) -> Result<Array2<f64>> {
        self.grid.points()
    }

    /// Coordinates and intensities of the masked pixels.
    pub fn train_set(&self) -> Result<(Array2<f64>, Array1<f64>)> {
        let pts = self.grid.points()?;
        let idx: Vec<usize> = (0..self.target.len()).filter(|&i| self.mask[i]).collect();
        let x = Array2::from_shape_fn((idx.len(), 2), |(r, c)| pts[[idx[r], c]]);
        let y = Array1::from_iter(idx.iter().map(|&i| self.target[i]));
        Ok((x, y))
    }

    pub fn target_sample(&self) -> Result<FunctionSample> {
        FunctionSample::new(self.grid, self.target.clone(), self.name.clone())
    }

    /// Grayscale picture of the target, masked pixels kept and the rest black.
    pub fn mask_image(&self) -> Result<GrayImage> {
        let m = self.grid.points_per_axis;
        let px = (0..m * m)
            .map(|k| {
                let i = (k % m) * m + k / m;
                if self.mask[i] {
                    (self.target[i].clamp(0.0, 1.0) * 255.0).round() as u8
                } else {
                    0
                }
            })
            .collect();
        GrayImage::new(m, m, px)
    }
}

pub fn wave_value(f: f64, x: f64, y: f64) -> f64 {
    0.5 + 0.25 * (2.0 * PI * f * x).sin() + 0.25 * (2.0 * PI * 2.0 * f * y).sin()
}

/// Interior maxima and minima of `sin(2π f t)` on `(−1, 1)`.
fn sine_extrema(f: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut max, mut min) = (Vec::new(), Vec::new());
    let kmax = f.ceil() as i64 + 1;
    for k in -kmax..=kmax {
        for (phase, out) in [(0.25, &mut max), (0.75, &mut min)] {
            let t = (phase + k as f64) / f;
            if t > -1.0 && t < 1.0 {
                out.push(t);
            }
        }
    }
    max.sort_by(f64::total_cmp);
    min.sort_by(f64::total_cmp);
    (max, min)
}

/// Strict local extrema of the wave surface: both coordinates at a maximum,
/// or both at a minimum. Mixed pairs are saddles.
pub fn wave_extrema(f: f64) -> Vec<(f64, f64)> {
    let (xmax, xmin) = sine_extrema(f);
    let (ymax, ymin) = sine_extrema(2.0 * f);
    let mut out = Vec::new();
    for (xs, ys) in [(&xmax, &ymax), (&xmin, &ymin)] {
        for &x in xs {
            for &y in ys {
                out.push((x, y));
            }
        }
    }
    out
}

fn nearest_index(t: f64, m: usize) -> usize {
    (((t + 1.0) / 2.0 * (m - 1) as f64).round() as usize).min(m - 1)
}

/// Sum of two orthogonal sines, the second at twice the frequency; trained on its extrema.
pub fn gen_waves(f: f64, m: usize) -> Result<CoordinateImageTask> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::InvalidArgument(format!("wave frequency must be positive (got {f})")));
    }
    let grid = GridSpec::new(2, m)?;
    let target = FunctionSample::from_fn(grid, |p| wave_value(f, p[0], p[1]), "waves")?.values;
    let mut mask = vec![false; m * m];
    for (x, y) in wave_extrema(f) {
        mask[nearest_index(x, m) * m + nearest_index(y, m)] = true;
    }
    Ok(CoordinateImageTask { name: format!("waves-f{f}"), grid, target, mask })
}

/// Synthetic stand-in photograph: smooth shapes plus a patch of fine stripes.
pub fn shapes_target(m: usize) -> Result<Vec<f64>> {
    let grid = GridSpec::new(2, m)?;
    let f = |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        let mut v = 0.15 + 0.1 * (x + 1.0);
        if (x + 0.45).powi(2) + (y - 0.4).powi(2) < 0.35 * 0.35 {
            v = 0.9;
        }
        if (0.15..0.85).contains(&x) && (0.15..0.85).contains(&y) {
            v = if ((x * 8.0).floor() + (y * 8.0).floor()) as i64 % 2 == 0 { 0.65 } else { 0.35 };
        }
        if (-0.9..0.9).contains(&x) && (-0.9..-0.2).contains(&y) {
            v = if (2.0 * PI * 6.0 * x).sin() >= 0.0 { 0.95 } else { 0.05 };
        }
        v
    };
    Ok(FunctionSample::from_fn(grid, f, "shapes")?.values)
}

fn random_mask(n: usize, fraction: f64, seed: u64) -> Vec<bool> {
    let k = (n as f64 * fraction).round() as usize;
    let mut mask = vec![false; n];
    for i in index::sample(&mut rng::stream(seed, &[n as u64, role::SPLIT]), n, k) {
        mask[i] = true;
    }
    mask
}

/// A square grayscale image as a target with a random 40% of pixels revealed.
pub fn image_task(name: &str, image: &GrayImage, seed: u64) -> Result<CoordinateImageTask> {
    if image.width != image.height || image.width < 2 {
        return Err(Error::InvalidArgument(format!("target image must be square (got {}×{})", image.width, image.height)));
    }
    let m = image.width;
    let unit = image.to_unit();
    // Image column = x index, image row = y index.
    let target = (0..m * m).map(|i| unit[(i % m) * m + i / m]).collect();
    Ok(CoordinateImageTask {
        name: name.to_string(),
        grid: GridSpec::square(m),
        target,
        mask: random_mask(m * m, IMAGE_TRAIN_FRACTION, seed),
    })
}

/// The shapes fallback with a random 40% of pixels revealed.
pub fn shapes_task(m: usize, seed: u64) -> Result<CoordinateImageTask> {
    Ok(CoordinateImageTask {
        name: "shapes".into(),
        grid: GridSpec::square(m),
        target: shapes_target(m)?,
        mask: random_mask(m * m, IMAGE_TRAIN_FRACTION, seed),
    })
}
