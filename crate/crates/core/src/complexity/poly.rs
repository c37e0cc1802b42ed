//! Orthogonal-polynomial decompositions of grid samples.
//!
//! A border of samples is dropped on every side and the remaining window is
//! mapped linearly onto `[-1, 1]`. Each axis is interpolated locally (degree
//! 11 Lagrange stencils) onto Chebyshev–Lobatto nodes `cos(πq/Q)`, where the
//! projection integrals are evaluated with the trapezoidal rule in the angle
//! variable (Chebyshev) or with Clenshaw–Curtis weights (Legendre, Hermite).
//! Both rules are exact for polynomials of moderate degree, so a polynomial
//! sample of degree ≤ 11 is decomposed exactly up to rounding.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FunctionSample;

pub const DEFAULT_MAX_ORDER: usize = 100;
pub const DEFAULT_BORDER: usize = 3;
pub const HERMITE_MAX_ORDER: usize = 30;
const STENCIL: usize = 12;
const NEGLIGIBLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyBasis {
    Chebyshev,
    Legendre,
    Hermite,
}

impl PolyBasis {
    pub fn name(self) -> &'static str {
        match self {
            PolyBasis::Chebyshev => "chebyshev",
            PolyBasis::Legendre => "legendre",
            PolyBasis::Hermite => "hermite",
        }
    }

    /// `P_0(x) ..= P_n(x)` by three-term recurrence.
    pub fn values(self, n: usize, x: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(n + 1);
        p.push(1.0);
        if n == 0 {
            return p;
        }
        p.push(match self {
            PolyBasis::Hermite => 2.0 * x,
            _ => x,
        });
        for k in 1..n {
            let kf = k as f64;
            let next = match self {
                PolyBasis::Chebyshev => 2.0 * x * p[k] - p[k - 1],
                PolyBasis::Legendre => ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0),
                PolyBasis::Hermite => 2.0 * x * p[k] - 2.0 * kf * p[k - 1],
            };
            p.push(next);
        }
        p
    }
}

impl fmt::Display for PolyBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolyBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chebyshev" => Ok(PolyBasis::Chebyshev),
            "legendre" => Ok(PolyBasis::Legendre),
            "hermite" => Ok(PolyBasis::Hermite),
            _ => Err(Error::InvalidArgument(format!("unknown polynomial basis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyOptions {
    pub basis: PolyBasis,
    pub max_order: usize,
    /// Samples dropped on every side before integrating.
    pub border: usize,
}

impl Default for PolyOptions {
    fn default() -> Self {
        PolyOptions { basis: PolyBasis::Chebyshev, max_order: DEFAULT_MAX_ORDER, border: DEFAULT_BORDER }
    }
}

impl PolyOptions {
    pub fn basis(basis: PolyBasis) -> Self {
        PolyOptions { basis, ..Default::default() }
    }
}

/// Coefficients `c_{n1..nd}`, row-major over `{0..=N}^d`, in window coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySpectrum {
    pub basis: PolyBasis,
    pub max_order: usize,
    pub dim: usize,
    pub coefficients: Vec<f64>,
    /// Original coordinates mapped to -1 and +1.
    pub window: (f64, f64),
}

impl PolySpectrum {
    pub fn orders(&self, mut j: usize) -> Vec<usize> {
        let b = self.max_order + 1;
        let mut n = vec![0; self.dim];
        for slot in n.iter_mut().rev() {
            *slot = j % b;
            j /= b;
        }
        n
    }

    /// `|c|`-weighted mean of `‖n‖₂`, excluding the constant term.
    pub fn weighted_mean_order(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, c) in self.coefficients.iter().enumerate().skip(1) {
            let norm = self.orders(j).iter().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
            num += c.abs() * norm;
            den += c.abs();
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Evaluates the expansion at window coordinates `u`.
    pub fn evaluate(&self, u: &[f64]) -> f64 {
        let per_axis: Vec<Vec<f64>> = u.iter().map(|&x| self.basis.values(self.max_order, x)).collect();
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c * self.orders(j).iter().zip(&per_axis).map(|(&n, p)| p[n]).product::<f64>())
            .sum()
    }
}

/// Lagrange weights mapping `n` equispaced nodes on [-1, 1] to `t`.
fn stencil(n: usize, t: f64) -> (usize, Vec<f64>) {
    let width = STENCIL.min(n);
    let h = 2.0 / (n - 1) as f64;
    let pos = (t + 1.0) / h;
    let centre = pos.round() as isize - (width as isize - 1) / 2;
    let start = centre.clamp(0, (n - width) as isize) as usize;
    let nodes: Vec<f64> = (start..start + width).map(|j| -1.0 + h * j as f64).collect();
    let mut w = vec![1.0; width];
    for (i, wi) in w.iter_mut().enumerate() {
        for (k, &xk) in nodes.iter().enumerate() {
            if k != i {
                *wi *= (t - xk) / (nodes[i] - xk);
            }
        }
    }
    (start, w)
}

/// Clenshaw–Curtis weights for nodes `cos(πq/Q)`, `q = 0..=Q`.
fn clenshaw_curtis(q_max: usize) -> Vec<f64> {
    let q = q_max as f64;
    (0..=q_max)
        .map(|k| {
            let theta = PI * k as f64 / q;
            let mut s = 1.0;
            for j in 1..=q_max / 2 {
                let b = if 2 * j == q_max { 1.0 } else { 2.0 };
                s -= b / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
            }
            let c = if k == 0 || k == q_max { 1.0 } else { 2.0 };
            c / q * s
        })
        .collect()
}

/// One-axis analysis operator: `coefficients = B · window_values`, shape `(N+1) × n`.
pub(crate) fn analysis_matrix(basis: PolyBasis, max_order: usize, n: usize) -> Array2<f64> {
    let q_max = (2 * n + 2).max(256).max(2 * max_order + 2);
    let thetas: Vec<f64> = (0..=q_max).map(|q| PI * q as f64 / q_max as f64).collect();
    let cc = if basis == PolyBasis::Chebyshev { Vec::new() } else { clenshaw_curtis(q_max) };
    let mut b = Array2::zeros((max_order + 1, n));
    for (q, &theta) in thetas.iter().enumerate() {
        let t = theta.cos();
        // Quadrature weight times basis values at this node, per order.
        let row: Vec<f64> = match basis {
            PolyBasis::Chebyshev => {
                let w = if q == 0 || q == q_max { 0.5 } else { 1.0 } / q_max as f64;
                (0..=max_order)
                    .map(|k| if k == 0 { w } else { 2.0 * w } * (k as f64 * theta).cos())
                    .collect()
            }
            PolyBasis::Legendre => basis
                .values(max_order, t)
                .into_iter()
                .enumerate()
                .map(|(k, p)| cc[q] * p * (2.0 * k as f64 + 1.0) / 2.0)
                .collect(),
            PolyBasis::Hermite => {
                let g = (-t * t).exp();
                let mut norm = PI.sqrt();
                basis
                    .values(max_order, t)
                    .into_iter()
                    .enumerate()
                    .map(|(k, h)| {
                        if k > 0 {
                            norm *= 2.0 * k as f64;
                        }
                        cc[q] * h * g / norm
                    })
                    .collect()
            }
        };
        let (start, lw) = stencil(n, t);
        for (k, &r) in row.iter().enumerate() {
            for (i, &l) in lw.iter().enumerate() {
                b[[k, start + i]] += r * l;
            }
        }
    }
    b
}

fn window_values(sample: &FunctionSample, border: usize) -> Result<(Array2<f64>, usize)> {
    let m = sample.grid.points_per_axis;
    if 2 * border + 2 > m {
        return Err(Error::InvalidArgument(format!("border {border} leaves fewer than 2 points of {m}")));
    }
    let n = m - 2 * border;
    match sample.grid.dim {
        1 => Ok((Array2::from_shape_fn((1, n), |(_, j)| sample.values[border + j]), n)),
        2 => {
            let full = sample.as_matrix()?;
            Ok((full.slice(ndarray::s![border..m - border, border..m - border]).to_owned(), n))
        }
        dim => Err(Error::UnsupportedDimension { dim, measure: "polynomial" }),
    }
}

/// Projects a 1D or 2D grid sample onto the chosen basis.
pub fn poly_spectrum(sample: &FunctionSample, opts: PolyOptions) -> Result<PolySpectrum> {
    if opts.basis == PolyBasis::Hermite && opts.max_order > HERMITE_MAX_ORDER {
        return Err(Error::UnstableBasis {
            basis: "Hermite",
            limit: HERMITE_MAX_ORDER,
            requested: opts.max_order,
        });
    }
    let (w, n) = window_values(sample, opts.border)?;
    let b = analysis_matrix(opts.basis, opts.max_order, n);
    let coefficients = if sample.grid.dim == 1 {
        b.dot(&w.row(0)).to_vec()
    } else {
        project_2d(b.view(), w.view()).into_raw_vec_and_offset().0
    };
    let edge = sample.grid.coordinate(sample.grid.points_per_axis - 1 - opts.border);
    Ok(PolySpectrum {
        basis: opts.basis,
        max_order: opts.max_order,
        dim: sample.grid.dim,
        coefficients,
        window: (-edge, edge),
    })
}

fn project_2d(b: ArrayView2<f64>, w: ArrayView2<f64>) -> Array2<f64> {
    b.dot(&w).dot(&b.t())
}

/// Order-weighted mean complexity; 0 for constant samples.
pub fn poly_complexity(sample: &FunctionSample, opts: PolyOptions) -> Result<(f64, PolySpectrum)> {
    let spec = poly_spectrum(sample, opts)?;
    let first = sample.values[0];
    if sample.values.iter().all(|&v| v == first) {
        return Ok((0.0, spec));
    }
    let total: f64 = spec.coefficients.iter().map(|c| c.abs()).sum();
    let varying: f64 = total - spec.coefficients[0].abs();
    if varying <= NEGLIGIBLE * total {
        return Ok((0.0, spec));
    }
    Ok((spec.weighted_mean_order(), spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn window_coord(x: f64, m: usize, border: usize) -> f64 {
        let edge = GridSpec::square(m).coordinate(m - 1 - border);
        x / edge
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        let w = clenshaw_curtis(16);
        let nodes: Vec<f64> = (0..=16).map(|q| (PI * q as f64 / 16.0).cos()).collect();
        for deg in 0..=15 {
            let approx: f64 = w.iter().zip(&nodes).map(|(w, x)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert_relative_eq!(approx, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_ramp_is_order_one() {
        let s = FunctionSample::from_fn(GridSpec::default(), |p| p[0], "x").unwrap();
        for basis in [PolyBasis::Chebyshev, PolyBasis::Legendre] {
            let (c, spec) = poly_complexity(&s, PolyOptions::basis(basis)).unwrap();
            assert!((c - 1.0).abs() < 0.02, "{basis}: {c}");
            let edge = spec.window.1;
            assert_relative_eq!(spec.coefficients[101], edge, epsilon = 1e-9);
        }
    }

    #[test]
    fn chebyshev_t5_is_order_five() {
        let t5 = |u: f64| 16.0 * u.powi(5) - 20.0 * u.powi(3) + 5.0 * u;
        let s = FunctionSample::from_fn(GridSpec::default(), |p| t5(window_coord(p[0], 64, 3)), "t5").unwrap();
        let (c, _) = poly_complexity(&s, PolyOptions::default()).unwrap();
        assert!((c - 5.0).abs() < 0.1, "{c}");
        let s1 = FunctionSample::from_fn(GridSpec::new(1, 64).unwrap(), |p| t5(p[0]), "t5").unwrap();
        let opts = PolyOptions { border: 0, ..Default::default() };
        assert_relative_eq!(poly_complexity(&s1, opts).unwrap().0, 5.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_scores_zero() {
        let s = FunctionSample::from_fn(GridSpec::default(), |_| -2.5, "c").unwrap();
        for basis in [PolyBasis::Chebyshev, PolyBasis::Legendre, PolyBasis::Hermite] {
            let opts = PolyOptions { basis, max_order: 20, border: 3 };
            assert_eq!(poly_complexity(&s, opts).unwrap().0, 0.0);
        }
    }

    #[test]
    fn hermite_beyond_thirty_is_rejected() {
        let s = FunctionSample::from_fn(GridSpec::default(), |p| p[0], "x").unwrap();
        let err = poly_complexity(&s, PolyOptions::basis(PolyBasis::Hermite)).unwrap_err();
        assert!(matches!(err, Error::UnstableBasis { limit: 30, requested: 100, .. }));
        let ok = PolyOptions { basis: PolyBasis::Hermite, max_order: 30, border: 3 };
        assert!(poly_complexity(&s, ok).is_ok());
    }

    #[test]
    fn hermite_projection_respects_parity() {
        let s = FunctionSample::from_fn(GridSpec::new(1, 64).unwrap(), |p| p[0], "x").unwrap();
        let opts = PolyOptions { basis: PolyBasis::Hermite, max_order: 6, border: 0 };
        let spec = poly_spectrum(&s, opts).unwrap();
        for n in [0, 2, 4, 6] {
            assert!(spec.coefficients[n].abs() < 1e-12);
        }
        assert!(spec.coefficients[1] > 0.0);
    }

    #[test]
    fn reconstructs_random_polynomials() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let deg = trial % 11;
            let cx: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cy: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
            let poly = |c: &[f64], u: f64| c.iter().rev().fold(0.0, |acc, &a| acc * u + a);
            let f = |p: &[f64]| {
                let (u, v) = (window_coord(p[0], 64, 3), window_coord(p[1], 64, 3));
                poly(&cx, u) * poly(&cy, v) + poly(&cy, u)
            };
            let s = FunctionSample::from_fn(GridSpec::default(), f, "poly").unwrap();
            for basis in [PolyBasis::Chebyshev, PolyBasis::Legendre] {
                let opts = PolyOptions { basis, max_order: 12, border: 3 };
                let spec = poly_spectrum(&s, opts).unwrap();
                for &(i, j) in &[(3usize, 3usize), (10, 40), (31, 31), (60, 5)] {
                    let g = GridSpec::default();
                    let (x, y) = (g.coordinate(i), g.coordinate(j));
                    let u = [window_coord(x, 64, 3), window_coord(y, 64, 3)];
                    let err = (spec.evaluate(&u) - f(&[x, y])).abs();
                    assert!(err < 1e-6, "{basis} degree {deg}: error {err}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn invariant_to_positive_affine_maps(
            vals in proptest::collection::vec(-1.0f64..1.0, 256),
            a in 0.1f64..10.0,
            b in -5.0f64..5.0,
        ) {
            let s = FunctionSample::new(GridSpec::square(16), vals, "r").unwrap();
            let t = FunctionSample::new(s.grid, s.values.iter().map(|v| a * v + b).collect(), "t").unwrap();
            let opts = PolyOptions { basis: PolyBasis::Chebyshev, max_order: 20, border: 1 };
            let (c0, c1) = (poly_complexity(&s, opts).unwrap().0, poly_complexity(&t, opts).unwrap().0);
            prop_assert!((c0 - c1).abs() < 1e-9 * c0.max(1.0));
        }
    }
}
