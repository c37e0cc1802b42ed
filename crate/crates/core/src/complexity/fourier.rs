use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::grid::FunctionSample;
use crate::pgm::GrayImage;

const PARSEVAL_TOL: f64 = 1e-6;
const NEGLIGIBLE: f64 = 1e-12;

/// DFT magnitudes over `K = {0..=m/2}^d`, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub dim: usize,
    pub points_per_axis: usize,
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn bins_per_axis(&self) -> usize {
        self.points_per_axis / 2 + 1
    }

    /// Frequency vector of flat index `j`.
    pub fn frequency(&self, mut j: usize) -> Vec<usize> {
        let b = self.bins_per_axis();
        let mut k = vec![0; self.dim];
        for slot in k.iter_mut().rev() {
            *slot = j % b;
            j /= b;
        }
        k
    }

    pub fn norm_of(&self, j: usize) -> f64 {
        self.frequency(j).iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt()
    }

    /// Magnitude-weighted mean of `‖k‖₂` over nonzero frequencies.
    pub fn weighted_mean_frequency(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, &a) in self.magnitudes.iter().enumerate().skip(1) {
            num += a * self.norm_of(j);
            den += a;
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    pub fn to_csv(&self) -> Table {
        let mut header: Vec<String> = (0..self.dim).map(|a| format!("k{a}")).collect();
        header.push("magnitude".into());
        let mut t = Table::new(&header);
        for (j, &a) in self.magnitudes.iter().enumerate() {
            let mut row: Vec<String> = self.frequency(j).iter().map(|k| k.to_string()).collect();
            row.push(csv::real(a));
            t.row(row);
        }
        t
    }

    /// `log(1 + |f̃|)` image, column = k0, row = k1 (d = 2 only).
    pub fn render_log(&self) -> Result<GrayImage> {
        if self.dim != 2 {
            return Err(Error::UnsupportedDimension { dim: self.dim, measure: "spectrum rendering" });
        }
        let b = self.bins_per_axis();
        let vals: Vec<f64> = (0..b * b).map(|k| self.magnitudes[(k % b) * b + k / b].ln_1p()).collect();
        GrayImage::from_values(b, b, &vals)
    }
}

/// Full complex DFT of a row-major `m^d` array (`d` = 1 or 2).
pub(crate) fn dft(values: &[f64], dim: usize, m: usize) -> Vec<Complex<f64>> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    // Transform along the last axis (contiguous rows).
    fft.process(&mut buf);
    if dim == 2 {
        let mut col = vec![Complex::new(0.0, 0.0); m];
        for j in 0..m {
            for i in 0..m {
                col[i] = buf[i * m + j];
            }
            fft.process(&mut col);
            for i in 0..m {
                buf[i * m + j] = col[i];
            }
        }
    }
    buf
}

/// Magnitude spectrum of a grid sample, with a Parseval check.
pub fn spectrum(sample: &FunctionSample) -> Result<Spectrum> {
    let dim = sample.grid.dim;
    if dim > 2 {
        return Err(Error::UnsupportedDimension { dim, measure: "Fourier" });
    }
    let m = sample.grid.points_per_axis;
    let full = dft(&sample.values, dim, m);
    let energy: f64 = sample.values.iter().map(|v| v * v).sum();
    let spectral: f64 = full.iter().map(|c| c.norm_sqr()).sum::<f64>() / full.len() as f64;
    if (spectral - energy).abs() > PARSEVAL_TOL * energy.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(format!("Parseval check failed: {spectral:e} vs {energy:e}")));
    }
    let b = m / 2 + 1;
    let magnitudes = if dim == 1 {
        full[..b].iter().map(|c| c.norm()).collect()
    } else {
        (0..b * b).map(|j| full[(j / b) * m + j % b].norm()).collect()
    };
    Ok(Spectrum { dim, points_per_axis: m, magnitudes })
}

/// `Σ|f̃(k)|·‖k‖₂ / Σ|f̃(k)|` over `K` without the DC term; 0 for constant samples.
pub fn fourier_complexity(sample: &FunctionSample) -> Result<(f64, Spectrum)> {
    let spec = spectrum(sample)?;
    let first = sample.values[0];
    if sample.values.iter().all(|&v| v == first) {
        return Ok((0.0, spec));
    }
    let mass: f64 = spec.magnitudes.iter().skip(1).sum();
    let scale: f64 = sample.values.iter().map(|v| v.abs()).sum();
    if mass <= NEGLIGIBLE * scale {
        return Ok((0.0, spec));
    }
    Ok((spec.weighted_mean_frequency(), spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::net::{ArchSpec, Body, InitSpec, Network};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Direct O(N²) DFT used as the oracle for the FFT path.
    fn naive_dft(values: &[f64], dim: usize, m: usize) -> Vec<Complex<f64>> {
        let n = values.len();
        (0..n)
            .map(|kf| {
                let k: Vec<usize> = if dim == 1 { vec![kf] } else { vec![kf / m, kf % m] };
                let mut acc = Complex::new(0.0, 0.0);
                for (xf, &v) in values.iter().enumerate() {
                    let x: Vec<usize> = if dim == 1 { vec![xf] } else { vec![xf / m, xf % m] };
                    let dot: usize = k.iter().zip(&x).map(|(a, b)| a * b).sum();
                    let ang = -2.0 * PI * (dot % m) as f64 / m as f64;
                    acc += Complex::new(ang.cos(), ang.sin()) * v;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn fft_matches_naive_dft() {
        let m = 12;
        let vals: Vec<f64> = (0..m * m).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let fast = dft(&vals, 2, m);
        let slow = naive_dft(&vals, 2, m);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-9);
        }
        let fast1 = dft(&vals[..m], 1, m);
        for (a, b) in fast1.iter().zip(&naive_dft(&vals[..m], 1, m)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_scores_zero() {
        let s = FunctionSample::from_fn(GridSpec::default(), |_| 3.7, "c").unwrap();
        assert_eq!(fourier_complexity(&s).unwrap().0, 0.0);
    }

    #[test]
    fn integer_tone_lands_on_its_bin() {
        // Three full periods across the 64 samples of each row.
        let omega = PI * 63.0 / 64.0;
        let s = FunctionSample::from_fn(GridSpec::default(), |p| (3.0 * omega * p[0]).sin(), "tone").unwrap();
        let (c, spec) = fourier_complexity(&s).unwrap();
        assert_relative_eq!(c, 3.0, epsilon = 1e-9);
        let peak = spec.magnitudes.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert_eq!(spec.frequency(peak), vec![3, 0]);
    }

    #[test]
    fn continuous_tone_three_cycles_per_unit() {
        // sin(2π·3x) spans six periods of [-1, 1], so its energy sits near bin 6.
        let s = FunctionSample::from_fn(GridSpec::default(), |p| (2.0 * PI * 3.0 * p[0]).sin(), "tone").unwrap();
        let spec = spectrum(&s).unwrap();
        let peak = spec.magnitudes.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert_eq!(spec.frequency(peak), vec![6, 0]);
    }

    #[test]
    fn equal_magnitude_unbiased_model_matches_closed_form() {
        let k_max = 32;
        let mut net = Network::init(&ArchSpec::unbiased(2, k_max), &InitSpec::seeded(1)).unwrap();
        let Body::Unbiased(f) = net.body_mut() else { unreachable!() };
        f.magnitude.fill(0.01);
        let sample = crate::grid::sample_grid(&net, GridSpec::default()).unwrap();
        let (c, spec) = fourier_complexity(&sample).unwrap();
        // Components with a Nyquist coordinate fold onto their own conjugate;
        // every other component contributes m²/2 · 0.01 to exactly one bin.
        let b = k_max + 1;
        let (mut num, mut den) = (0.0, 0.0);
        for j in 1..b * b {
            let (k0, k1) = (j / b, j % b);
            if k0 == k_max || k1 == k_max {
                continue;
            }
            let norm = ((k0 * k0 + k1 * k1) as f64).sqrt();
            assert_relative_eq!(spec.magnitudes[j], 64.0 * 64.0 / 2.0 * 0.01, max_relative = 1e-9);
            num += norm;
            den += 1.0;
        }
        let interior_mean = num / den;
        // Nyquist bins hold phase-dependent mass, so the full score sits slightly above.
        assert!(c > interior_mean && c < interior_mean * 1.1, "{c} vs {interior_mean}");
    }

    #[test]
    fn one_dimensional_spectrum() {
        let g = GridSpec::new(1, 32).unwrap();
        let omega = PI * 31.0 / 32.0;
        let s = FunctionSample::from_fn(g, |p| (5.0 * omega * p[0] + 0.3).cos() + 2.0, "t").unwrap();
        assert_relative_eq!(fourier_complexity(&s).unwrap().0, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn three_dimensions_rejected() {
        let s = FunctionSample::from_fn(GridSpec::new(3, 4).unwrap(), |p| p[0], "x").unwrap();
        assert!(matches!(fourier_complexity(&s), Err(Error::UnsupportedDimension { .. })));
    }

    proptest! {
        #[test]
        fn invariant_to_positive_affine_maps(seed in 0u64..500, a in 0.01f64..100.0, b in -50.0f64..50.0) {
            let net = Network::init(&ArchSpec::default(), &InitSpec::seeded(seed)).unwrap();
            let s = crate::grid::sample_grid(&net, GridSpec::square(32)).unwrap();
            let t = FunctionSample::new(s.grid, s.values.iter().map(|v| a * v + b).collect(), "t").unwrap();
            let (c0, c1) = (fourier_complexity(&s).unwrap().0, fourier_complexity(&t).unwrap().0);
            prop_assert!((c0 - c1).abs() <= 1e-9 * c0.max(1.0));
        }

        #[test]
        fn parseval_holds(vals in proptest::collection::vec(-10.0f64..10.0, 256)) {
            let s = FunctionSample::new(GridSpec::square(16), vals, "r").unwrap();
            prop_assert!(spectrum(&s).is_ok());
        }
    }
}
