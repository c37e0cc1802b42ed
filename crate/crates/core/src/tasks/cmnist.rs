//! Colored-MNIST regression: the label `digit/9` is also painted as a
//! uniform-intensity pixel column appended to every image row.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::idx::MnistRaw;
use crate::error::{Error, Result};
use crate::rng::{self, role};

pub const CORRUPTION_RATE: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmnistVariant {
    /// Color equals the label except for a random 3% of examples.
    Train,
    /// Digit determines the label; color is uniform noise.
    TestDigitCorrelated,
    /// Color determines the label; the image comes from a random class.
    TestColorCorrelated,
}

impl CmnistVariant {
    pub const ALL: [CmnistVariant; 3] =
        [CmnistVariant::Train, CmnistVariant::TestDigitCorrelated, CmnistVariant::TestColorCorrelated];

    pub fn name(self) -> &'static str {
        match self {
            CmnistVariant::Train => "train",
            CmnistVariant::TestDigitCorrelated => "digit",
            CmnistVariant::TestColorCorrelated => "color",
        }
    }

    fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for CmnistVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CmnistVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CmnistVariant::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown Colored-MNIST variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColoredMnist {
    pub variant: CmnistVariant,
    pub rows: usize,
    /// Image columns plus the color column.
    pub cols: usize,
    /// One flattened `rows × cols` image per row; the color is the last column of each image row.
    pub inputs: Array2<f64>,
    pub labels: Array1<f64>,
    pub digits: Vec<u8>,
    pub colors: Vec<f64>,
    pub corrupted: Vec<bool>,
}

impl ColoredMnist {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn corruption_rate(&self) -> f64 {
        self.corrupted.iter().filter(|&&c| c).count() as f64 / self.len().max(1) as f64
    }
}

pub fn digit_label(digit: u8) -> f64 {
    digit as f64 / 9.0
}

pub fn build_colored_mnist(raw: &MnistRaw, variant: CmnistVariant, seed: u64) -> Result<ColoredMnist> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty MNIST set".into()));
    }
    let mut rng = rng::stream(seed, &[variant.tag(), role::CORRUPTION]);
    let (rows, cols) = (raw.rows, raw.cols + 1);
    let mut source = Vec::with_capacity(n);
    let mut digits = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    let mut corrupted = vec![false; n];
    match variant {
        CmnistVariant::Train => {
            let k = (n as f64 * CORRUPTION_RATE).round() as usize;
            for i in index::sample(&mut rng, n, k) {
                corrupted[i] = true;
            }
            for (i, &d) in raw.labels.iter().enumerate() {
                source.push(i);
                digits.push(d);
                colors.push(if corrupted[i] { rng.random::<f64>() } else { digit_label(d) });
            }
        }
        CmnistVariant::TestDigitCorrelated => {
            for (i, &d) in raw.labels.iter().enumerate() {
                source.push(i);
                digits.push(d);
                colors.push(rng.random::<f64>());
            }
        }
        CmnistVariant::TestColorCorrelated => {
            for _ in 0..n {
                let class: u8 = rng.random_range(0..10);
                let i = rng.random_range(0..n);
                source.push(i);
                digits.push(class);
                colors.push(digit_label(class));
            }
        }
    }
    let mut inputs = Array2::zeros((n, rows * cols));
    for (r, &src) in source.iter().enumerate() {
        let img = raw.images.row(src);
        let mut out = inputs.row_mut(r);
        for y in 0..rows {
            for x in 0..raw.cols {
                out[y * cols + x] = img[y * raw.cols + x];
            }
            out[y * cols + raw.cols] = colors[r];
        }
    }
    let labels = Array1::from_iter(digits.iter().map(|&d| digit_label(d)));
    Ok(ColoredMnist { variant, rows, cols, inputs, labels, digits, colors, corrupted })
}

/// Accuracy of the predictor that outputs the color column.
pub fn color_oracle_accuracy(set: &ColoredMnist) -> Result<f64> {
    super::metric::regression_accuracy(&set.colors, set.labels.as_slice().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(n: usize) -> MnistRaw {
        let images = Array2::from_shape_fn((n, 4), |(i, j)| ((i + j) % 5) as f64 / 4.0);
        MnistRaw { rows: 2, cols: 2, images, labels: (0..n).map(|i| (i % 10) as u8).collect() }
    }

    #[test]
    fn clean_examples_carry_their_label_as_color() {
        let raw = tiny(100);
        let s = build_colored_mnist(&raw, CmnistVariant::Train, 0).unwrap();
        assert_eq!(s.inputs.ncols(), 6);
        for i in 0..s.len() {
            if !s.corrupted[i] {
                assert_eq!(s.colors[i], s.labels[i]);
            }
            assert_eq!(s.inputs[[i, 2]], s.colors[i]);
            assert_eq!(s.inputs[[i, 5]], s.colors[i]);
            assert_eq!(s.inputs[[i, 0]], raw.images[[i, 0]]);
            assert_eq!(s.inputs[[i, 4]], raw.images[[i, 3]]);
        }
        let nine = (0..100).find(|&i| raw.labels[i] == 9 && !s.corrupted[i]).unwrap();
        assert_eq!((s.labels[nine], s.colors[nine]), (1.0, 1.0));
        let zero = (0..100).find(|&i| raw.labels[i] == 0 && !s.corrupted[i]).unwrap();
        assert_eq!((s.labels[zero], s.colors[zero]), (0.0, 0.0));
    }

    #[test]
    fn corruption_rate_is_three_percent() {
        let s = build_colored_mnist(&tiny(6000), CmnistVariant::Train, 4).unwrap();
        assert!((s.corruption_rate() - 0.03).abs() <= 0.005);
        assert_eq!(s.corrupted.iter().filter(|&&c| c).count(), 180);
    }

    #[test]
    fn color_oracle_on_each_test_set() {
        let raw = tiny(20_000);
        let color = build_colored_mnist(&raw, CmnistVariant::TestColorCorrelated, 1).unwrap();
        assert_eq!(color_oracle_accuracy(&color).unwrap(), 1.0);
        // Uniform color against labels k/9: 1 − mean_k ((k/9)² + (1 − k/9)²)/2.
        let expected = 1.0
            - (0..10).map(|k| (k as f64 / 9.0).powi(2) + (1.0 - k as f64 / 9.0).powi(2)).sum::<f64>() / 20.0;
        let digit = build_colored_mnist(&raw, CmnistVariant::TestDigitCorrelated, 1).unwrap();
        let acc = color_oracle_accuracy(&digit).unwrap();
        assert!((acc - expected).abs() < 0.01, "{acc} vs {expected}");
        assert!(digit.corrupted.iter().all(|&c| !c));
    }

    #[test]
    fn color_test_images_are_decoupled_from_labels() {
        let raw = tiny(5000);
        let s = build_colored_mnist(&raw, CmnistVariant::TestColorCorrelated, 9).unwrap();
        // Pixel 0 of a tiny image encodes its source index mod 5; its mean does not track the label.
        let mean_px = |pred: &dyn Fn(f64) -> bool| {
            let v: Vec<f64> = (0..s.len()).filter(|&i| pred(s.labels[i])).map(|i| s.inputs[[i, 0]]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!((mean_px(&|l| l < 0.5) - mean_px(&|l| l >= 0.5)).abs() < 0.05);
    }

    #[test]
    fn seeded_and_variant_specific() {
        let raw = tiny(300);
        let a = build_colored_mnist(&raw, CmnistVariant::TestDigitCorrelated, 2).unwrap();
        let b = build_colored_mnist(&raw, CmnistVariant::TestDigitCorrelated, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!("color".parse::<CmnistVariant>().unwrap(), CmnistVariant::TestColorCorrelated);
    }
}
