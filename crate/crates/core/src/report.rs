//! CSV outputs of a campaign and the cost-increase tables derived from them.
//!
//! * `day_results.csv`: date, month, strategy, total_cost, realized_dpi,
//!   dpi_met, feasible, attainable, r_squared, rmse_abs, rmse_pct
//! * `campaign_report.csv`: month, strategy, days, mean_cost, baseline_cost,
//!   increase, increase_pct, mean_realized_dpi
//! * `traces/trace_<date>.csv`: step, actual_ppfd, bnn_pred, markov_pred,
//!   baseline_led, bnn_led, markov_led, heuristic_led
//! * `cost_increase.csv`: date, month, strategy, cost, baseline_cost,
//!   increase, increase_pct
//! * `monthly_increase.csv`: month, strategy, days, mean_cost, baseline_cost,
//!   increase, increase_pct
//!
//! Costs are cent m⁻² d⁻¹, DPI mol m⁻² d⁻¹, PPFD µmol m⁻² s⁻¹. Prediction
//! columns are one-step-ahead forecasts; LED columns are photon flux. Empty
//! cells mean "not applicable".

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{CampaignReport, DayResult, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRow {
    pub date: NaiveDate,
    pub month: u32,
    pub strategy: StrategyKind,
    pub total_cost: f64,
    pub realized_dpi: f64,
    pub dpi_met: bool,
    pub feasible: bool,
    pub attainable: bool,
    pub r_squared: Option<f64>,
    pub rmse_abs: Option<f64>,
    pub rmse_pct: Option<f64>,
}

impl DayRow {
    pub fn from_result(day: &DayResult) -> Self {
        // prediction quality only means something for forecasting strategies
        let score = matches!(day.strategy, StrategyKind::Bnn | StrategyKind::Markov)
            .then(|| day.prediction_score())
            .flatten();
        Self {
            date: day.date,
            month: day.date.month(),
            strategy: day.strategy,
            total_cost: day.total_cost,
            realized_dpi: day.realized_dpi,
            dpi_met: day.dpi_met,
            feasible: day.feasible,
            attainable: day.attainable,
            r_squared: score.and_then(|s| s.r_squared),
            rmse_abs: score.map(|s| s.rmse_abs),
            rmse_pct: score.and_then(|s| s.rmse_pct),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyReportRow {
    pub month: u32,
    pub strategy: StrategyKind,
    pub days: usize,
    pub mean_cost: f64,
    pub baseline_cost: Option<f64>,
    pub increase: Option<f64>,
    pub increase_pct: Option<f64>,
    pub mean_realized_dpi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostIncreaseRow {
    pub date: NaiveDate,
    pub month: u32,
    pub strategy: StrategyKind,
    pub cost: f64,
    pub baseline_cost: f64,
    pub increase: f64,
    pub increase_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyIncreaseRow {
    pub month: u32,
    pub strategy: StrategyKind,
    pub days: usize,
    pub mean_cost: f64,
    pub baseline_cost: f64,
    pub increase: f64,
    pub increase_pct: Option<f64>,
}

fn percent(cost: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| 100.0 * (cost - baseline) / baseline)
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

pub fn write_rows<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn monthly_rows(report: &CampaignReport) -> Vec<MonthlyReportRow> {
    report
        .monthly
        .iter()
        .map(|r| MonthlyReportRow {
            month: r.month,
            strategy: r.strategy,
            days: r.days,
            mean_cost: r.mean_cost,
            baseline_cost: r.baseline_cost,
            increase: r.increase(),
            increase_pct: r.increase_pct(),
            mean_realized_dpi: r.mean_realized_dpi,
        })
        .collect()
}

/// Per-step trace of every strategy run on one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub actual_ppfd: f64,
    pub bnn_pred: Option<f64>,
    pub markov_pred: Option<f64>,
    pub baseline_led: Option<f64>,
    pub bnn_led: Option<f64>,
    pub markov_led: Option<f64>,
    pub heuristic_led: Option<f64>,
}

/// Groups results by date into trace tables.
pub fn traces(days: &[DayResult]) -> BTreeMap<NaiveDate, Vec<TraceRow>> {
    let mut out: BTreeMap<NaiveDate, Vec<TraceRow>> = BTreeMap::new();
    for day in days {
        let rows = out.entry(day.date).or_insert_with(|| {
            day.steps
                .iter()
                .map(|s| TraceRow {
                    step: s.step,
                    actual_ppfd: s.actual_ppfd,
                    bnn_pred: None,
                    markov_pred: None,
                    baseline_led: None,
                    bnn_led: None,
                    markov_led: None,
                    heuristic_led: None,
                })
                .collect()
        });
        for (row, s) in rows.iter_mut().zip(&day.steps) {
            match day.strategy {
                StrategyKind::BaselineOracle => row.baseline_led = Some(s.led_ppfd),
                StrategyKind::Heuristic => row.heuristic_led = Some(s.led_ppfd),
                StrategyKind::Bnn => {
                    row.bnn_led = Some(s.led_ppfd);
                    row.bnn_pred = Some(s.predicted_ppfd);
                }
                StrategyKind::Markov => {
                    row.markov_led = Some(s.led_ppfd);
                    row.markov_pred = Some(s.predicted_ppfd);
                }
            }
        }
    }
    out
}

/// Writes `day_results.csv`, `campaign_report.csv` and one trace per date
/// under `dir/traces`. Returns the files written, in order.
pub fn write_campaign(report: &CampaignReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut written = Vec::new();
    let days: Vec<DayRow> = report.days.iter().map(DayRow::from_result).collect();
    let path = dir.join("day_results.csv");
    write_rows(&days, &path)?;
    written.push(path);
    let path = dir.join("campaign_report.csv");
    write_rows(&monthly_rows(report), &path)?;
    written.push(path);
    for (date, rows) in traces(&report.days) {
        let path = dir.join("traces").join(format!("trace_{date}.csv"));
        write_rows(&rows, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Each strategy-day's cost against the baseline on the same date. Days
/// without a baseline run are skipped.
pub fn cost_increases(days: &[DayRow]) -> Vec<CostIncreaseRow> {
    let baseline: BTreeMap<NaiveDate, f64> = days
        .iter()
        .filter(|d| d.strategy == StrategyKind::BaselineOracle)
        .map(|d| (d.date, d.total_cost))
        .collect();
    let mut rows: Vec<CostIncreaseRow> = days
        .iter()
        .filter_map(|d| {
            let b = *baseline.get(&d.date)?;
            Some(CostIncreaseRow {
                date: d.date,
                month: d.month,
                strategy: d.strategy,
                cost: d.total_cost,
                baseline_cost: b,
                increase: d.total_cost - b,
                increase_pct: percent(d.total_cost, b),
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.month, r.date, r.strategy));
    rows
}

/// Per-month means of [`cost_increases`].
pub fn monthly_increases(rows: &[CostIncreaseRow]) -> Vec<MonthlyIncreaseRow> {
    let mut groups: BTreeMap<(u32, StrategyKind), (usize, f64, f64)> = BTreeMap::new();
    for r in rows {
        let g = groups.entry((r.month, r.strategy)).or_default();
        g.0 += 1;
        g.1 += r.cost;
        g.2 += r.baseline_cost;
    }
    groups
        .into_iter()
        .map(|((month, strategy), (n, cost, base))| {
            let (mean_cost, baseline_cost) = (cost / n as f64, base / n as f64);
            MonthlyIncreaseRow {
                month,
                strategy,
                days: n,
                mean_cost,
                baseline_cost,
                increase: mean_cost - baseline_cost,
                increase_pct: percent(mean_cost, baseline_cost),
            }
        })
        .collect()
}
