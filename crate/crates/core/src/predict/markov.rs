//! Time-inhomogeneous Markov chain over sunlight bins.
//!
//! The state is the PPFD bin of the current step. Each step of the
//! photoperiod has its own transition matrix, estimated from training days
//! with additive (Laplace) smoothing. Forecasts propagate the whole state
//! distribution and report its expectation.

use serde::{Deserialize, Serialize};

use super::{Observation, Predictor};
use crate::data::StepSeries;
use crate::error::{Error, Result};
use crate::light::Ppfd;

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub n_bins: usize,
    /// `n_bins + 1` increasing PPFD boundaries, starting at zero.
    pub bin_edges: Vec<f64>,
    /// Representative PPFD of each bin: the mean training value that fell in it,
    /// or the bin midpoint when none did.
    pub bin_centers: Vec<f64>,
    /// `transitions[t][i][j]`: probability of moving from bin `i` at step `t` to bin `j` at `t + 1`.
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub alpha: f64,
}

impl MarkovModel {
    /// Steps per day the chain was fitted on.
    pub fn steps_per_day(&self) -> usize {
        self.transitions.len() + 1
    }

    /// Bin holding `ppfd`, and whether the value lay above the top edge.
    pub fn bin_of(&self, ppfd: f64) -> (usize, bool) {
        let top = *self.bin_edges.last().expect("edges");
        if ppfd > top {
            return (self.n_bins - 1, true);
        }
        let idx = self.bin_edges[1..self.n_bins].partition_point(|e| *e <= ppfd);
        (idx, false)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 || self.bin_edges.len() != self.n_bins + 1 || self.bin_centers.len() != self.n_bins {
            return Err(Error::Validation("markov model bin arrays are inconsistent".into()));
        }
        if self.bin_edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::Validation("markov bin edges must be strictly increasing".into()));
        }
        for (t, m) in self.transitions.iter().enumerate() {
            if m.len() != self.n_bins {
                return Err(Error::Validation(format!("transition matrix {t} has {} rows", m.len())));
            }
            for (i, row) in m.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != self.n_bins || (sum - 1.0).abs() > 1e-9 || row.iter().any(|p| *p < 0.0) {
                    return Err(Error::Validation(format!("row {i} of transition matrix {t} is not a distribution")));
                }
            }
        }
        Ok(())
    }
}

/// Estimates a per-step transition chain with `n_bins` uniform bins over
/// `[0, max observed PPFD]` and smoothing constant `alpha`.
pub fn fit_markov(train: &[StepSeries], n_bins: usize, alpha: f64) -> Result<MarkovModel> {
    if n_bins < 2 {
        return Err(Error::Validation(format!("markov chain needs at least 2 bins, got {n_bins}")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Validation(format!("smoothing constant must be >= 0, got {alpha}")));
    }
    let first = train
        .first()
        .ok_or_else(|| Error::Validation("markov chain needs at least one training day".into()))?;
    let steps = first.len();
    if let Some(bad) = train.iter().find(|d| d.len() != steps) {
        return Err(Error::Validation(format!("training day {} has {} steps, expected {steps}", bad.date, bad.len())));
    }

    let observed_max = train
        .iter()
        .flat_map(|d| d.steps.iter().map(|s| s.sun_ppfd.value()))
        .fold(0.0, f64::max);
    // all-dark training data still needs a nondegenerate bin range
    let top = if observed_max > 0.0 { observed_max } else { 1.0 };
    let width = top / n_bins as f64;
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| if i == n_bins { top } else { i as f64 * width }).collect();

    let mut model = MarkovModel {
        n_bins,
        bin_edges,
        bin_centers: vec![0.0; n_bins],
        transitions: Vec::new(),
        alpha,
    };

    let mut value_sums = vec![0.0; n_bins];
    let mut value_counts = vec![0usize; n_bins];
    let mut counts = vec![vec![vec![0.0; n_bins]; n_bins]; steps.saturating_sub(1)];
    for day in train {
        let bins: Vec<usize> = day.steps.iter().map(|s| model.bin_of(s.sun_ppfd.value()).0).collect();
        for (s, &b) in day.steps.iter().zip(&bins) {
            value_sums[b] += s.sun_ppfd.value();
            value_counts[b] += 1;
        }
        for (t, pair) in bins.windows(2).enumerate() {
            counts[t][pair[0]][pair[1]] += 1.0;
        }
    }

    model.bin_centers = (0..n_bins)
        .map(|b| {
            if value_counts[b] > 0 {
                value_sums[b] / value_counts[b] as f64
            } else {
                0.5 * (model.bin_edges[b] + model.bin_edges[b + 1])
            }
        })
        .collect();

    model.transitions = counts
        .into_iter()
        .map(|matrix| {
            matrix
                .into_iter()
                .enumerate()
                .map(|(i, row)| {
                    let total: f64 = row.iter().sum();
                    if total == 0.0 {
                        let mut stay = vec![0.0; n_bins];
                        stay[i] = 1.0;
                        stay
                    } else {
                        let denom = total + alpha * n_bins as f64;
                        row.iter().map(|c| (c + alpha) / denom).collect()
                    }
                })
                .collect()
        })
        .collect();
    Ok(model)
}

/// Expected sunlight over the next `horizon` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovForecast {
    pub ppfd: Vec<Ppfd>,
    /// The starting value lay above the top bin edge and was clamped into the top bin.
    pub clamped: bool,
}

/// Propagates a point mass on the bin of `current` through `P_step, P_step+1, ...`.
pub fn markov_predict(model: &MarkovModel, step: usize, current: Ppfd, horizon: usize) -> Result<MarkovForecast> {
    if step + horizon > model.transitions.len() {
        return Err(Error::Validation(format!(
            "horizon {horizon} from step {step} runs past the {} fitted steps",
            model.steps_per_day()
        )));
    }
    let (start, clamped) = model.bin_of(current.value());
    let mut dist = vec![0.0; model.n_bins];
    dist[start] = 1.0;
    let mut next = vec![0.0; model.n_bins];
    let mut ppfd = Vec::with_capacity(horizon);
    for matrix in &model.transitions[step..step + horizon] {
        next.iter_mut().for_each(|p| *p = 0.0);
        for (p_i, row) in dist.iter().zip(matrix) {
            if *p_i == 0.0 {
                continue;
            }
            for (acc, p_ij) in next.iter_mut().zip(row) {
                *acc += p_i * p_ij;
            }
        }
        std::mem::swap(&mut dist, &mut next);
        let expected: f64 = dist.iter().zip(&model.bin_centers).map(|(p, c)| p * c).sum();
        ppfd.push(Ppfd::new(expected.max(0.0))?);
    }
    Ok(MarkovForecast { ppfd, clamped })
}

#[derive(Debug, Clone)]
pub struct MarkovPredictor {
    pub model: MarkovModel,
}

impl Predictor for MarkovPredictor {
    fn name(&self) -> &str {
        "markov"
    }

    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>> {
        if obs.steps_per_day != self.model.steps_per_day() {
            return Err(Error::Validation(format!(
                "markov model fitted on {} steps, day has {}",
                self.model.steps_per_day(),
                obs.steps_per_day
            )));
        }
        let forecast = markov_predict(&self.model, obs.step, obs.sun_ppfd, obs.horizon())?;
        if forecast.clamped {
            log::debug!("markov: PPFD {} above top bin at step {}", obs.sun_ppfd.value(), obs.step);
        }
        Ok(forecast.ppfd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::light::PhotosynthesisParams;
    use chrono::{Days, NaiveDate};
    use proptest::prelude::*;

    fn days(values: &[Vec<f64>]) -> Vec<StepSeries> {
        let start = NaiveDate::from_ymd_opt(1999, 1, 1).unwrap();
        values
            .iter()
            .enumerate()
            .map(|(d, v)| StepSeries::from_ppfd(start + Days::new(d as u64), 900, v, &PhotosynthesisParams::default()).unwrap())
            .collect()
    }

    fn hand_model(centers: Vec<f64>, transitions: Vec<Vec<Vec<f64>>>) -> MarkovModel {
        let n = centers.len();
        MarkovModel {
            n_bins: n,
            bin_edges: (0..=n).map(|i| i as f64 * 100.0).collect(),
            bin_centers: centers,
            transitions,
            alpha: 0.0,
        }
    }

    #[test]
    fn dark_training_concentrates_on_bin_zero() {
        // Laplace smoothing: P = (N + α) / (N + n α)
        let thirty = fit_markov(&days(&vec![vec![0.0; 6]; 30]), 10, 1.0).unwrap();
        for m in &thirty.transitions {
            assert!((m[0][0] - 31.0 / 40.0).abs() < 1e-12);
        }
        let hundred = fit_markov(&days(&vec![vec![0.0; 6]; 100]), 10, 1.0).unwrap();
        for m in &hundred.transitions {
            assert!(m[0][0] > 0.9);
            assert!((m[0][0] - 101.0 / 110.0).abs() < 1e-12);
            // rows never visited stay put
            assert_eq!(m[5][5], 1.0);
        }
        assert_eq!(hundred.bin_centers[0], 0.0);
    }

    #[test]
    fn single_observed_transition_without_smoothing() {
        // 4 bins over [0, 400]: 250 -> bin 2, 350 -> bin 3
        let model = fit_markov(&days(&[vec![0.0, 250.0, 350.0, 400.0]]), 4, 0.0).unwrap();
        assert_eq!(model.bin_of(250.0).0, 2);
        assert_eq!(model.transitions[1][2][3], 1.0);
        assert_eq!(model.transitions[1][0][0], 1.0);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(fit_markov(&days(&[vec![1.0, 2.0]]), 1, 1.0).is_err());
        assert!(fit_markov(&[], 4, 1.0).is_err());
        assert!(fit_markov(&days(&[vec![1.0, 2.0]]), 4, -1.0).is_err());
    }

    #[test]
    fn identity_chain_holds_current_bin() {
        let eye = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let m = hand_model(vec![50.0, 150.0, 250.0], vec![eye; 4]);
        let f = markov_predict(&m, 0, Ppfd::new(160.0).unwrap(), 4).unwrap();
        assert!(f.ppfd.iter().all(|p| p.value() == 150.0));
    }

    #[test]
    fn shift_chain_walks_up() {
        // bin k -> bin k+1, top bin absorbing
        let shift = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]];
        let m = hand_model(vec![50.0, 150.0, 250.0], vec![shift; 3]);
        let f = markov_predict(&m, 0, Ppfd::new(10.0).unwrap(), 3).unwrap();
        let v: Vec<f64> = f.ppfd.iter().map(|p| p.value()).collect();
        assert_eq!(v, vec![150.0, 250.0, 250.0]);
    }

    #[test]
    fn uniform_rows_predict_mean_center() {
        let third = 1.0 / 3.0;
        let m = hand_model(vec![50.0, 150.0, 250.0], vec![vec![vec![third; 3]; 3]; 3]);
        let f = markov_predict(&m, 1, Ppfd::new(260.0).unwrap(), 2).unwrap();
        assert!(f.ppfd.iter().all(|p| (p.value() - 150.0).abs() < 1e-12));
    }

    #[test]
    fn clamps_above_top_edge() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = hand_model(vec![50.0, 150.0], vec![eye; 2]);
        let f = markov_predict(&m, 0, Ppfd::new(10_000.0).unwrap(), 1).unwrap();
        assert!(f.clamped);
        assert_eq!(f.ppfd[0].value(), 150.0);
        assert!(markov_predict(&m, 1, Ppfd::ZERO, 2).is_err());
    }

    proptest! {
        #[test]
        fn fitted_rows_are_stochastic(
            data in prop::collection::vec(prop::collection::vec(0.0f64..2000.0, 8), 1..12),
            bins in 2usize..12,
            alpha in 0.0f64..3.0,
        ) {
            let model = fit_markov(&days(&data), bins, alpha).unwrap();
            prop_assert!(model.validate().is_ok());
        }

        #[test]
        fn forecasts_are_prefix_consistent(
            data in prop::collection::vec(prop::collection::vec(0.0f64..2000.0, 10), 2..8),
            start in 0usize..5,
            h in 1usize..4,
            now in 0.0f64..2500.0,
        ) {
            let model = fit_markov(&days(&data), 6, 1.0).unwrap();
            let short = markov_predict(&model, start, Ppfd::new(now).unwrap(), h).unwrap();
            let long = markov_predict(&model, start, Ppfd::new(now).unwrap(), h + 1).unwrap();
            prop_assert_eq!(&short.ppfd[..], &long.ppfd[..h]);
            prop_assert!(long.ppfd.iter().all(|p| p.value().is_finite() && p.value() >= 0.0));
        }
    }
}
