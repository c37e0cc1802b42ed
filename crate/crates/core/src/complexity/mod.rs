//! Fourier, polynomial and LZ complexity measures.

mod fourier;
mod lz;
mod poly;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fourier::{fourier_complexity, spectrum, Spectrum};
pub use lz::{differences, discretize, lz78_phrases, lz_complexity, DEFAULT_LEVELS};
pub use poly::{
    poly_complexity, poly_spectrum, PolyBasis, PolyOptions, PolySpectrum, DEFAULT_BORDER, DEFAULT_MAX_ORDER,
    HERMITE_MAX_ORDER,
};

use crate::error::{Error, Result};
use crate::grid::{FunctionSample, TraversalSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Fourier,
    Chebyshev,
    Legendre,
    Lz,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Fourier, Measure::Chebyshev, Measure::Legendre, Measure::Lz];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Fourier => "fourier",
            Measure::Chebyshev => "chebyshev",
            Measure::Legendre => "legendre",
            Measure::Lz => "lz",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown measure {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityScore {
    pub measure: Measure,
    pub raw: f64,
    /// Min-max rescaled within a batch; 0 until [`normalize_scores`] runs.
    pub normalized: f64,
    pub points: usize,
    /// Discretization levels (LZ only).
    pub levels: Option<usize>,
}

impl ComplexityScore {
    pub fn new(measure: Measure, raw: f64, points: usize, levels: Option<usize>) -> Self {
        ComplexityScore { measure, raw, normalized: 0.0, points, levels }
    }
}

/// Scores a grid sample. LZ reads the values in grid order (last axis
/// fastest, i.e. column by column in the rendered image).
pub fn measure_sample(sample: &FunctionSample, measure: Measure) -> Result<ComplexityScore> {
    let points = sample.values.len();
    let raw = match measure {
        Measure::Fourier => fourier_complexity(sample)?.0,
        Measure::Chebyshev => poly_complexity(sample, PolyOptions::basis(PolyBasis::Chebyshev))?.0,
        Measure::Legendre => poly_complexity(sample, PolyOptions::basis(PolyBasis::Legendre))?.0,
        Measure::Lz => {
            return Ok(ComplexityScore::new(
                measure,
                lz_complexity(&sample.values, DEFAULT_LEVELS, false)? as f64,
                points,
                Some(DEFAULT_LEVELS),
            ))
        }
    };
    Ok(ComplexityScore::new(measure, raw, points, None))
}

/// LZ score of a traversal sample on successive differences.
pub fn measure_traversal(sample: &TraversalSample) -> Result<ComplexityScore> {
    let raw = lz_complexity(&sample.values, DEFAULT_LEVELS, true)? as f64;
    Ok(ComplexityScore::new(Measure::Lz, raw, sample.values.len(), Some(DEFAULT_LEVELS)))
}

/// Min-max rescaling of raw values; an all-equal batch maps to 0.
pub fn normalize(raw: &[f64]) -> Vec<f64> {
    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    raw.iter().map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 }).collect()
}

/// Normalizes each measure separately within the batch.
pub fn normalize_scores(scores: &mut [ComplexityScore]) {
    for m in Measure::ALL {
        let idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].measure == m).collect();
        let raw: Vec<f64> = idx.iter().map(|&i| scores[i].raw).collect();
        for (&i, v) in idx.iter().zip(normalize(&raw)) {
            scores[i].normalized = v;
        }
    }
}
