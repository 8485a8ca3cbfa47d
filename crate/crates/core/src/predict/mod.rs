//! Sunlight forecasters used by the controller.
//!
//! Every forecaster answers the same question: having just measured the
//! sunlight at step `i`, what PPFD should the optimizer assume for steps
//! `i + 1 .. T`? Predictions stay in PPFD space; callers convert to ETR.

mod markov;

use serde::{Deserialize, Serialize};

use crate::data::StepSeries;
use crate::error::{Error, Result};
use crate::light::Ppfd;

pub use markov::{fit_markov, markov_predict, MarkovForecast, MarkovModel, MarkovPredictor, DEFAULT_ALPHA, DEFAULT_BINS};

/// What a forecaster knows at decision time.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    /// Current step, 0-based.
    pub step: usize,
    /// Measured sunlight at the current step.
    pub sun_ppfd: Ppfd,
    /// Measured sunlight for steps `0..=step`.
    pub history: &'a [f64],
    /// Steps in the photoperiod, `T`.
    pub steps_per_day: usize,
    /// Stable per-day key for forecasters that draw random numbers.
    pub day_key: u64,
}

impl Observation<'_> {
    /// Number of future steps to forecast.
    pub fn horizon(&self) -> usize {
        self.steps_per_day.saturating_sub(self.step + 1)
    }
}

pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;

    /// Forecast PPFD for steps `step + 1 .. steps_per_day`.
    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>>;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>> {
        (**self).predict_horizon(obs)
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>> {
        (**self).predict_horizon(obs)
    }
}

/// Per-step mean sunlight of a month's training days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimatologyProfile {
    pub month: u32,
    pub mean_ppfd: Vec<f64>,
}

pub fn fit_climatology(train: &[StepSeries]) -> Result<ClimatologyProfile> {
    let first = train
        .first()
        .ok_or_else(|| Error::Validation("climatology needs at least one training day".into()))?;
    let n = first.len();
    let mut sums = vec![0.0; n];
    for day in train {
        if day.len() != n {
            return Err(Error::Validation(format!("training day {} has {} steps, expected {n}", day.date, day.len())));
        }
        for (acc, s) in sums.iter_mut().zip(&day.steps) {
            *acc += s.sun_ppfd.value();
        }
    }
    let count = train.len() as f64;
    Ok(ClimatologyProfile {
        month: first.month,
        mean_ppfd: sums.into_iter().map(|s| s / count).collect(),
    })
}

impl Predictor for ClimatologyProfile {
    fn name(&self) -> &str {
        "climatology"
    }

    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>> {
        if obs.steps_per_day != self.mean_ppfd.len() {
            return Err(Error::Validation(format!(
                "climatology covers {} steps, day has {}",
                self.mean_ppfd.len(),
                obs.steps_per_day
            )));
        }
        self.mean_ppfd[(obs.step + 1).min(obs.steps_per_day)..].iter().map(|p| Ppfd::new(*p)).collect()
    }
}

/// Forecaster that knows the day's actual sunlight.
#[derive(Debug, Clone)]
pub struct PerfectPredictor {
    actual: Vec<f64>,
}

pub fn perfect_predictor(day: &StepSeries) -> PerfectPredictor {
    PerfectPredictor { actual: day.ppfd() }
}

impl Predictor for PerfectPredictor {
    fn name(&self) -> &str {
        "perfect"
    }

    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>> {
        if obs.steps_per_day != self.actual.len() {
            return Err(Error::Validation(format!(
                "perfect predictor holds {} steps, day has {}",
                self.actual.len(),
                obs.steps_per_day
            )));
        }
        self.actual[(obs.step + 1).min(self.actual.len())..].iter().map(|p| Ppfd::new(*p)).collect()
    }
}

/// Switches between forecasters over the course of a day.
///
/// Sunlight at or below this PPFD counts as dark for [`DaylightGate`];
/// roughly 2.5 W m⁻² of twilight.
pub const DEFAULT_DARK_PPFD: f64 = 5.0;

/// Until the first sunlight of the day is measured the month's climatology is
/// the forecast. Once the sun has been seen, `model` forecasts. After sunset
/// (sun seen earlier, dark now) the rest of the photoperiod is assumed dark,
/// so any remaining requirement is topped up by the LEDs alone.
#[derive(Debug, Clone)]
pub struct DaylightGate<P> {
    pub prior: ClimatologyProfile,
    pub model: P,
    pub dark_ppfd: f64,
}

impl<P> DaylightGate<P> {
    pub fn new(prior: ClimatologyProfile, model: P) -> Self {
        Self {
            prior,
            model,
            dark_ppfd: DEFAULT_DARK_PPFD,
        }
    }
}

impl<P: Predictor> Predictor for DaylightGate<P> {
    fn name(&self) -> &str {
        self.model.name()
    }

    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>> {
        let sun_seen = obs.history.iter().any(|s| *s > self.dark_ppfd);
        if !sun_seen {
            self.prior.predict_horizon(obs)
        } else if obs.sun_ppfd.value() <= self.dark_ppfd {
            Ok(vec![Ppfd::ZERO; obs.horizon()])
        } else {
            self.model.predict_horizon(obs)
        }
    }
}
