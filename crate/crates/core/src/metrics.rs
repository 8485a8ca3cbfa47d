//! Prediction-quality statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient of determination and root-mean-square error of a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionScore {
    /// `None` when the observations have zero variance.
    pub r_squared: Option<f64>,
    pub rmse_abs: f64,
    /// RMSE as a percentage of the largest observation; `None` if that is zero.
    pub rmse_pct: Option<f64>,
}

pub fn score(observed: &[f64], predicted: &[f64]) -> Result<PredictionScore> {
    if observed.len() != predicted.len() {
        return Err(Error::Validation(format!(
            "observed and predicted lengths differ ({} vs {})",
            observed.len(),
            predicted.len()
        )));
    }
    if observed.is_empty() {
        return Err(Error::Validation("cannot score an empty series".into()));
    }
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let sse: f64 = observed.iter().zip(predicted).map(|(y, yh)| (y - yh).powi(2)).sum();
    let sst: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();

    let r_squared = (sst > 0.0).then(|| 1.0 - sse / sst);
    let rmse_abs = (sse / n).sqrt();
    let max_obs = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rmse_pct = (max_obs > 0.0).then(|| 100.0 * rmse_abs / max_obs);
    Ok(PredictionScore {
        r_squared,
        rmse_abs,
        rmse_pct,
    })
}
