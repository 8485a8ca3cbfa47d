//! Day-by-day simulation of the lighting strategies.
//!
//! * `baseline`: one solve of the whole-day program with the day's actual
//!   sunlight (full information; a lower bound on cost).
//! * `bnn` / `markov`: receding horizon. At every step the controller
//!   measures the sun, forecasts the rest of the day, re-solves the
//!   remaining-day program and commits only the current step.
//! * `heuristic`: tops the sunlight up to a constant PPFD, ignoring price.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bnn::{mix_seed, BnnModel, BnnPredictor};
use crate::data::{DatasetSplit, PriceSchedule, StepSeries};
use crate::error::{Error, Result};
use crate::light::{PhotosynthesisParams, Ppfd};
use crate::metrics::{score, PredictionScore};
use crate::optimizer::{cost_conversion_factor, led_ppfd, remaining_budget, solve_horizon, HorizonProblem, DEFAULT_LED_EFFICACY};
use crate::predict::{fit_climatology, ClimatologyProfile, DaylightGate, MarkovModel, MarkovPredictor, Observation, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    BaselineOracle,
    Bnn,
    Markov,
    Heuristic,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::BaselineOracle,
        StrategyKind::Bnn,
        StrategyKind::Markov,
        StrategyKind::Heuristic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::BaselineOracle => "baseline",
            StrategyKind::Bnn => "bnn",
            StrategyKind::Markov => "markov",
            StrategyKind::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" | "baseline-oracle" | "oracle" => Ok(StrategyKind::BaselineOracle),
            "bnn" => Ok(StrategyKind::Bnn),
            "markov" => Ok(StrategyKind::Markov),
            "heuristic" => Ok(StrategyKind::Heuristic),
            other => Err(Error::Validation(format!(
                "unknown strategy `{other}` (expected baseline, bnn, markov or heuristic)"
            ))),
        }
    }
}

/// Plant, lamp and tariff constants shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub params: PhotosynthesisParams,
    /// Daily photochemical integral target, mol m⁻² d⁻¹.
    pub dpi_target: f64,
    /// Step length `m` in seconds.
    pub step_seconds: f64,
    /// Largest LED electron transport per step.
    pub led_max_etr: f64,
    /// Largest LED photon flux, used by the heuristic.
    pub led_max_ppfd: f64,
    /// LED photon efficacy, µmol J⁻¹.
    pub led_efficacy: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            params: PhotosynthesisParams::default(),
            dpi_target: 3.0,
            step_seconds: 900.0,
            led_max_etr: 51.47,
            led_max_ppfd: 200.0,
            led_efficacy: DEFAULT_LED_EFFICACY,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let positive = [
            ("step length", self.step_seconds),
            ("LED max ETR", self.led_max_etr),
            ("LED max PPFD", self.led_max_ppfd),
            ("LED efficacy", self.led_efficacy),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.dpi_target.is_finite() && self.dpi_target >= 0.0) {
            return Err(Error::Validation(format!("DPI target must be >= 0, got {}", self.dpi_target)));
        }
        Ok(())
    }

    /// cent m⁻² per (cent kWh⁻¹ × µmol m⁻² s⁻¹) for one step.
    pub fn cost_factor(&self) -> f64 {
        cost_conversion_factor(self.step_seconds, self.led_efficacy)
    }

    /// Whole-day requirement on `Σ (x_t + s̄_t)`.
    pub fn daily_budget(&self) -> f64 {
        remaining_budget(self.dpi_target, self.step_seconds, &[])
    }

    fn dpi_of(&self, etr_sum: f64) -> f64 {
        etr_sum * self.step_seconds * 1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    pub price: f64,
    pub actual_ppfd: f64,
    /// Forecast of this step's sunlight made one step earlier; the measured
    /// value for the first step.
    pub predicted_ppfd: f64,
    pub led_etr: f64,
    pub led_ppfd: f64,
    pub step_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    pub date: NaiveDate,
    pub strategy: StrategyKind,
    pub steps: Vec<StepRecord>,
    /// cent m⁻².
    pub total_cost: f64,
    /// mol m⁻² d⁻¹.
    pub realized_dpi: f64,
    pub dpi_met: bool,
    /// The strategy never had to give up on the target: every schedule it
    /// solved was feasible for the sunlight it believed in, or, for the
    /// heuristic, every step reached the threshold.
    pub feasible: bool,
    /// The target is reachable with the day's actual sunlight and the LED
    /// limit, whatever the strategy did.
    pub attainable: bool,
}

impl DayResult {
    pub fn led_etr(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.led_etr).collect()
    }

    /// One-step-ahead forecast quality over steps `2..T`.
    pub fn prediction_score(&self) -> Option<PredictionScore> {
        if self.steps.len() < 2 {
            return None;
        }
        let observed: Vec<f64> = self.steps[1..].iter().map(|s| s.actual_ppfd).collect();
        let predicted: Vec<f64> = self.steps[1..].iter().map(|s| s.predicted_ppfd).collect();
        score(&observed, &predicted).ok()
    }
}

fn day_key(date: NaiveDate) -> u64 {
    date.num_days_from_ce() as u64
}

fn check_lengths(day: &StepSeries, prices: &PriceSchedule) -> Result<()> {
    if day.is_empty() {
        return Err(Error::Validation(format!("{}: empty day", day.date)));
    }
    if prices.len() != day.len() {
        return Err(Error::Validation(format!(
            "{}: {} price steps for {} sunlight steps",
            day.date,
            prices.len(),
            day.len()
        )));
    }
    Ok(())
}

/// Whether full LED power plus the actual sunlight meets the target.
pub fn day_is_feasible(day: &StepSeries, cfg: &ControllerConfig) -> bool {
    let n = day.len();
    let probe = HorizonProblem::new(0, vec![1.0; n], day.etr(), day.ppfd(), cfg.params, cfg.led_max_etr, cfg.daily_budget());
    let capacity: f64 = (0..n).map(|t| probe.step_upper(t) + probe.sun_etr[t]).sum();
    capacity >= probe.budget
}

/// Simulates one strategy over one day. `predictor` is consulted only by the
/// receding-horizon strategies.
pub fn run_day(
    strategy: StrategyKind,
    day: &StepSeries,
    predictor: &dyn Predictor,
    prices: &PriceSchedule,
    cfg: &ControllerConfig,
) -> Result<DayResult> {
    cfg.validate()?;
    check_lengths(day, prices)?;
    match strategy {
        StrategyKind::BaselineOracle => run_full_information(day, prices, cfg),
        StrategyKind::Heuristic => {
            let threshold = derive_heuristic_threshold(cfg, day.len())?;
            run_heuristic(day, prices, cfg, threshold, strategy)
        }
        StrategyKind::Bnn | StrategyKind::Markov => run_receding_horizon(strategy, day, predictor, prices, cfg),
    }
}

fn finish(
    day: &StepSeries,
    strategy: StrategyKind,
    prices: &PriceSchedule,
    cfg: &ControllerConfig,
    led_etr: &[f64],
    predicted: &[f64],
    feasible: bool,
) -> Result<DayResult> {
    let l = cfg.cost_factor();
    let mut steps = Vec::with_capacity(day.len());
    let (mut total_cost, mut etr_sum) = (0.0, 0.0);
    for (t, s) in day.steps.iter().enumerate() {
        let price = prices.cents_per_kwh[t];
        let flux = led_ppfd(led_etr[t], s.sun_etr.value(), s.sun_ppfd.value(), &cfg.params)?;
        let step_cost = price * flux * l;
        total_cost += step_cost;
        etr_sum += led_etr[t] + s.sun_etr.value();
        steps.push(StepRecord {
            step: t + 1,
            price,
            actual_ppfd: s.sun_ppfd.value(),
            predicted_ppfd: predicted[t],
            led_etr: led_etr[t],
            led_ppfd: flux,
            step_cost,
        });
    }
    let realized_dpi = cfg.dpi_of(etr_sum);
    Ok(DayResult {
        date: day.date,
        strategy,
        steps,
        total_cost,
        realized_dpi,
        dpi_met: realized_dpi >= cfg.dpi_target * (1.0 - 1e-6),
        feasible,
        attainable: day_is_feasible(day, cfg),
    })
}

fn run_full_information(day: &StepSeries, prices: &PriceSchedule, cfg: &ControllerConfig) -> Result<DayResult> {
    let problem = HorizonProblem::new(
        0,
        prices.cents_per_kwh.clone(),
        day.etr(),
        day.ppfd(),
        cfg.params,
        cfg.led_max_etr,
        cfg.daily_budget(),
    );
    let schedule = solve_horizon(&problem)?;
    finish(day, StrategyKind::BaselineOracle, prices, cfg, &schedule.led_etr, &day.ppfd(), schedule.feasible)
}

fn run_receding_horizon(
    strategy: StrategyKind,
    day: &StepSeries,
    predictor: &dyn Predictor,
    prices: &PriceSchedule,
    cfg: &ControllerConfig,
) -> Result<DayResult> {
    let n = day.len();
    let params = cfg.params;
    let actual = day.ppfd();
    // keep forecast ETR strictly inside the curve's range
    let etr_cap = params.a * (1.0 - 1e-9);

    let mut realized: Vec<f64> = Vec::with_capacity(n);
    let mut led = Vec::with_capacity(n);
    let mut predicted = vec![actual[0]; n];
    let mut feasible = true;
    for i in 0..n {
        let obs = Observation {
            step: i,
            sun_ppfd: day.steps[i].sun_ppfd,
            history: &actual[..=i],
            steps_per_day: n,
            day_key: day_key(day.date),
        };
        let forecast = if i + 1 < n { predictor.predict_horizon(&obs)? } else { Vec::new() };
        if forecast.len() != n - i - 1 {
            return Err(Error::Validation(format!(
                "{} forecast {} steps at step {}, expected {}",
                predictor.name(),
                forecast.len(),
                i + 1,
                n - i - 1
            )));
        }
        if let Some(next) = forecast.first() {
            predicted[i + 1] = next.value();
        }

        let mut sun_ppfd = Vec::with_capacity(n - i);
        sun_ppfd.push(actual[i]);
        sun_ppfd.extend(forecast.iter().map(|p| p.value()));
        let mut sun_etr: Vec<f64> = sun_ppfd.iter().map(|p| params.etr(*p).min(etr_cap)).collect();
        sun_etr[0] = day.steps[i].sun_etr.value();

        let problem = HorizonProblem::new(
            i,
            prices.cents_per_kwh[i..].to_vec(),
            sun_etr,
            sun_ppfd,
            params,
            cfg.led_max_etr,
            remaining_budget(cfg.dpi_target, cfg.step_seconds, &realized),
        );
        let schedule = solve_horizon(&problem)?;
        feasible &= schedule.feasible;
        let x = schedule.led_etr[0];
        led.push(x);
        realized.push(x + day.steps[i].sun_etr.value());
    }
    finish(day, strategy, prices, cfg, &led, &predicted, feasible)
}

/// Constant PPFD the heuristic tops sunlight up to: the smallest level whose
/// ETR, held for all `steps`, meets the daily target.
pub fn derive_heuristic_threshold(cfg: &ControllerConfig, steps: usize) -> Result<Ppfd> {
    if steps == 0 {
        return Err(Error::Validation("photoperiod has no steps".into()));
    }
    let per_step = cfg.daily_budget() / steps as f64;
    if per_step >= cfg.params.a {
        return Err(Error::Domain(format!(
            "required ETR of {per_step:.3} per step is at or above the asymptote a = {}",
            cfg.params.a
        )));
    }
    Ppfd::new(cfg.params.ppfd(per_step.max(0.0)))
}

/// LED photon flux the heuristic adds at one step.
pub fn heuristic_step(sun_ppfd: Ppfd, threshold: Ppfd, led_max_ppfd: f64) -> Ppfd {
    Ppfd::new((threshold.value() - sun_ppfd.value()).clamp(0.0, led_max_ppfd)).unwrap_or(Ppfd::ZERO)
}

fn run_heuristic(
    day: &StepSeries,
    prices: &PriceSchedule,
    cfg: &ControllerConfig,
    threshold: Ppfd,
    strategy: StrategyKind,
) -> Result<DayResult> {
    let mut reached = true;
    let led: Vec<f64> = day
        .steps
        .iter()
        .map(|s| {
            let flux = heuristic_step(s.sun_ppfd, threshold, cfg.led_max_ppfd).value();
            let total = s.sun_ppfd.value() + flux;
            reached &= total >= threshold.value() * (1.0 - 1e-12);
            (cfg.params.etr(total) - s.sun_etr.value()).max(0.0)
        })
        .collect();
    finish(day, strategy, prices, cfg, &led, &day.ppfd(), reached)
}

/// Forecasting models for one month.
#[derive(Debug, Clone)]
pub struct MonthModels {
    pub month: u32,
    pub climatology: ClimatologyProfile,
    pub bnn: Option<BnnModel>,
    pub markov: Option<MarkovModel>,
}

impl MonthModels {
    pub fn new(split: &DatasetSplit) -> Result<Self> {
        Ok(Self {
            month: split.month,
            climatology: fit_climatology(&split.train)?,
            bnn: None,
            markov: None,
        })
    }

    /// The gated forecaster for a receding-horizon strategy.
    pub fn predictor(&self, strategy: StrategyKind, seed: u64) -> Result<Box<dyn Predictor>> {
        let missing = |kind: &str| Error::MissingModel {
            kind: kind.into(),
            month: self.month,
        };
        match strategy {
            StrategyKind::Bnn => {
                let model = self.bnn.clone().ok_or_else(|| missing("bnn"))?;
                Ok(Box::new(DaylightGate::new(self.climatology.clone(), BnnPredictor::new(model, seed))))
            }
            StrategyKind::Markov => {
                let model = self.markov.clone().ok_or_else(|| missing("markov"))?;
                Ok(Box::new(DaylightGate::new(self.climatology.clone(), MarkovPredictor { model })))
            }
            StrategyKind::BaselineOracle | StrategyKind::Heuristic => Ok(Box::new(self.climatology.clone())),
        }
    }
}

/// Deterministic choice of `n` test days (all of them if fewer), in date order.
pub fn select_test_days(test: &[StepSeries], n: usize, seed: u64) -> Vec<StepSeries> {
    if test.len() <= n {
        return test.to_vec();
    }
    let month = test.first().map(|d| d.month as u64).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed ^ (month << 40)));
    let mut idx = sample(&mut rng, test.len(), n).into_vec();
    idx.sort_unstable();
    let mut days: Vec<StepSeries> = idx.into_iter().map(|i| test[i].clone()).collect();
    days.sort_by_key(|d| d.date);
    days
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRow {
    pub month: u32,
    pub strategy: StrategyKind,
    pub days: usize,
    pub mean_cost: f64,
    pub baseline_cost: Option<f64>,
    pub mean_realized_dpi: f64,
}

impl MonthlyRow {
    pub fn increase(&self) -> Option<f64> {
        self.baseline_cost.map(|b| self.mean_cost - b)
    }

    pub fn increase_pct(&self) -> Option<f64> {
        self.baseline_cost.filter(|b| *b > 0.0).map(|b| 100.0 * (self.mean_cost - b) / b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    /// Ordered by month, then date, then strategy.
    pub days: Vec<DayResult>,
    pub monthly: Vec<MonthlyRow>,
}

impl CampaignReport {
    pub fn monthly_row(&self, month: u32, strategy: StrategyKind) -> Option<&MonthlyRow> {
        self.monthly.iter().find(|r| r.month == month && r.strategy == strategy)
    }
}

/// One month's inputs to a campaign.
#[derive(Debug, Clone)]
pub struct CampaignMonth {
    pub split: DatasetSplit,
    pub models: MonthModels,
}

pub fn run_campaign(
    months: &[CampaignMonth],
    strategies: &[StrategyKind],
    prices: &PriceSchedule,
    cfg: &ControllerConfig,
    test_days_per_month: usize,
    seed: u64,
) -> Result<CampaignReport> {
    let mut strategies = strategies.to_vec();
    strategies.sort();
    strategies.dedup();
    let mut days = Vec::new();
    let mut monthly = Vec::new();
    for month in months {
        let selected = select_test_days(&month.split.test, test_days_per_month, seed);
        let predictors = strategies
            .iter()
            .map(|s| month.models.predictor(*s, seed).map(|p| (*s, p)))
            .collect::<Result<Vec<_>>>()?;
        let mut month_days = Vec::new();
        for day in &selected {
            for (strategy, predictor) in &predictors {
                month_days.push(run_day(*strategy, day, predictor.as_ref(), prices, cfg)?);
            }
        }
        let mean = |s: StrategyKind, f: fn(&DayResult) -> f64| {
            let vals: Vec<f64> = month_days.iter().filter(|d| d.strategy == s).map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let baseline = mean(StrategyKind::BaselineOracle, |d| d.total_cost);
        for &strategy in &strategies {
            if let Some(mean_cost) = mean(strategy, |d| d.total_cost) {
                monthly.push(MonthlyRow {
                    month: month.split.month,
                    strategy,
                    days: selected.len(),
                    mean_cost,
                    baseline_cost: baseline,
                    mean_realized_dpi: mean(strategy, |d| d.realized_dpi).unwrap_or(0.0),
                });
            }
        }
        days.extend(month_days);
    }
    Ok(CampaignReport { days, monthly })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ControlGrid;
    use crate::predict::perfect_predictor;

    fn day_from(ppfd: &[f64]) -> StepSeries {
        StepSeries::from_ppfd(NaiveDate::from_ymd_opt(2010, 3, 14).unwrap(), 900, ppfd, &PhotosynthesisParams::default()).unwrap()
    }

    fn half_sine(peak: f64) -> Vec<f64> {
        (0..64)
            .map(|t| {
                let x = (t as f64 - 10.0) / 44.0;
                if (0.0..=1.0).contains(&x) {
                    peak * (std::f64::consts::PI * x).sin()
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn tariff() -> PriceSchedule {
        PriceSchedule::default_time_of_use(&ControlGrid::default())
    }

    #[test]
    fn heuristic_threshold_from_table_values() {
        let cfg = ControllerConfig::default();
        let p = derive_heuristic_threshold(&cfg, 64).unwrap().value();
        let per_step: f64 = 3e6 / 900.0 / 64.0;
        assert!((per_step - 52.083).abs() < 1e-3);
        let expected = -(1.0 - per_step / 121.0f64).ln() / 0.00277;
        assert!((p - expected).abs() < 1e-9);
        assert!((p - 203.2).abs() < 0.1, "{p}");

        let none = ControllerConfig { dpi_target: 0.0, ..cfg };
        assert_eq!(derive_heuristic_threshold(&none, 64).unwrap().value(), 0.0);
        let too_much = ControllerConfig { dpi_target: 7.0, ..cfg };
        assert!(derive_heuristic_threshold(&too_much, 64).is_err());
    }

    #[test]
    fn heuristic_step_rules() {
        let th = Ppfd::new(203.2).unwrap();
        assert_eq!(heuristic_step(Ppfd::ZERO, th, 200.0).value(), 200.0);
        assert_eq!(heuristic_step(Ppfd::new(250.0).unwrap(), th, 200.0).value(), 0.0);
        assert!((heuristic_step(Ppfd::new(100.0).unwrap(), th, 200.0).value() - 103.2).abs() < 1e-9);
    }

    #[test]
    fn sunny_day_needs_no_light() {
        let day = day_from(&half_sine(1500.0));
        let cfg = ControllerConfig::default();
        for s in [StrategyKind::BaselineOracle, StrategyKind::Bnn] {
            let r = run_day(s, &day, &perfect_predictor(&day), &tariff(), &cfg).unwrap();
            assert!(r.led_etr().iter().all(|x| *x == 0.0));
            assert_eq!(r.total_cost, 0.0);
            assert!(r.dpi_met);
        }
    }

    #[test]
    fn dark_day_runs_flat_out() {
        let day = day_from(&[0.0; 64]);
        let cfg = ControllerConfig::default();
        assert!(cfg.daily_budget() / 64.0 > cfg.led_max_etr);
        for s in [StrategyKind::BaselineOracle, StrategyKind::Markov] {
            let r = run_day(s, &day, &perfect_predictor(&day), &tariff(), &cfg).unwrap();
            assert!(!r.feasible && !r.attainable);
            assert!(!r.dpi_met);
            assert!(r.led_etr().iter().all(|x| *x == cfg.led_max_etr));
        }
    }

    #[test]
    fn perfect_forecasts_reproduce_baseline() {
        let day = day_from(&half_sine(400.0));
        let cfg = ControllerConfig::default();
        let base = run_day(StrategyKind::BaselineOracle, &day, &perfect_predictor(&day), &tariff(), &cfg).unwrap();
        let rh = run_day(StrategyKind::Bnn, &day, &perfect_predictor(&day), &tariff(), &cfg).unwrap();
        assert!(base.total_cost > 0.0);
        assert!((rh.total_cost - base.total_cost).abs() <= 1e-6 * base.total_cost);
        for (a, b) in rh.led_etr().iter().zip(base.led_etr()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(rh.dpi_met && base.dpi_met);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let day = day_from(&[0.0; 10]);
        let r = run_day(StrategyKind::BaselineOracle, &day, &perfect_predictor(&day), &tariff(), &ControllerConfig::default());
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in StrategyKind::ALL {
            assert_eq!(s.as_str().parse::<StrategyKind>().unwrap(), s);
        }
        assert!("sunshine".parse::<StrategyKind>().is_err());
    }
}
