//! Depth error statistics against ground truth.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::plane::Plane;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthMetrics {
    /// Root-mean-square error in centimeters.
    pub rmse_cm: f64,
    /// Mean of `|d − d_gt| / d_gt`.
    pub rel_error: f64,
    /// Population standard deviation of the signed error, centimeters.
    pub std_dev_cm: f64,
    pub valid_fraction: f64,
}

/// Statistics over the pixels flagged in `valid`; masked pixels only count
/// toward `valid_fraction`.
pub fn evaluate_depth(depth: &Plane<f64>, valid: &Plane<bool>, truth: &Plane<f64>) -> Result<DepthMetrics> {
    if !depth.same_dims(truth) || !depth.same_dims(valid) {
        return Err(Error::Config(format!(
            "depth {:?}, mask {:?} and ground truth {:?} differ in size",
            depth.dims(),
            valid.dims(),
            truth.dims()
        )));
    }
    let errors: Vec<(f64, f64)> = depth
        .iter()
        .zip(truth.iter())
        .zip(valid.iter())
        .filter(|&((d, _), &v)| v && d.is_finite())
        .map(|((&d, &t), _)| (d - t, t))
        .collect();
    if errors.is_empty() {
        return Err(Error::InsufficientValid {
            valid: 0,
            total: depth.len(),
        });
    }
    let n = errors.len() as f64;
    let mse = errors.iter().map(|(e, _)| e * e).sum::<f64>() / n;
    let mean = errors.iter().map(|(e, _)| e).sum::<f64>() / n;
    let var = errors.iter().map(|(e, _)| (e - mean).powi(2)).sum::<f64>() / n;
    let rel = errors.iter().map(|(e, t)| (e / t).abs()).sum::<f64>() / n;
    Ok(DepthMetrics {
        rmse_cm: 100.0 * mse.sqrt(),
        rel_error: rel,
        std_dev_cm: 100.0 * var.sqrt(),
        valid_fraction: n / depth.len() as f64,
    })
}
