//! Accuracy metrics.

use crate::error::{Error, Result};

fn check(pred: &[f64], labels: &[f64]) -> Result<()> {
    if pred.len() != labels.len() || pred.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} labels",
            pred.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// `1 − mean |pred − label|`.
pub fn regression_accuracy(pred: &[f64], labels: &[f64]) -> Result<f64> {
    check(pred, labels)?;
    let mae = pred.iter().zip(labels).map(|(p, y)| (p - y).abs()).sum::<f64>() / pred.len() as f64;
    Ok(1.0 - mae)
}

/// Fraction of probabilities on the correct side of 1/2.
pub fn binary_accuracy(prob: &[f64], labels: &[f64]) -> Result<f64> {
    check(prob, labels)?;
    let hits = prob.iter().zip(labels).filter(|(p, y)| (**p >= 0.5) == (**y >= 0.5)).count();
    Ok(hits as f64 / prob.len() as f64)
}
