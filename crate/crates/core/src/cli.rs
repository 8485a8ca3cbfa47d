//! `helios` command-line front end.
//!
//! Every command reads a [`RunConfig`] file, applies flag overrides and
//! writes its results under the configured model or output directory.
//! Failures print one JSON object on stderr and exit with 1 (bad input) or
//! 2 (internal fault).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bnn::{fit_bnn, BnnPredictor};
use crate::config::RunConfig;
use crate::data::{
    build_all_days, load_bnn, load_irradiance_csv, load_markov, load_price_csv, save_model, split_by_years,
    DatasetSplit, IrradianceRecord, PriceSchedule, StepSeries, StoredModel,
};
use crate::error::{Error, Result};
use crate::predict::{fit_markov, DaylightGate, MarkovPredictor, Observation, Predictor};
use crate::report::{cost_increases, monthly_increases, read_rows, write_campaign, write_rows, DayRow};
use crate::sim::{run_campaign, CampaignMonth, MonthModels, StrategyKind};

#[derive(Debug, Parser)]
#[command(name = "helios", version, about = "Cost-optimal supplemental LED lighting for greenhouses")]
pub struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, default_value = "helios.toml")]
    pub config: PathBuf,
    /// Months to process, e.g. `1,2,3` or `1-6`. Overrides the config.
    #[arg(long, global = true)]
    pub months: Option<String>,
    /// Comma-separated strategies: baseline, bnn, markov, heuristic.
    #[arg(long, global = true)]
    pub strategies: Option<String>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit per-month forecasting models.
    Train {
        #[arg(long, value_enum, default_value = "all")]
        model: ModelChoice,
    },
    /// Run the strategy campaign on the test years.
    Simulate,
    /// Cost increase of every strategy over the baseline.
    Report,
    /// Dump the forecasts for the rest of one day from a given step.
    Predict {
        #[arg(long)]
        date: NaiveDate,
        /// 1-based control step at which the forecast is made.
        #[arg(long)]
        step: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Bnn,
    Markov,
    All,
}

impl ModelChoice {
    fn bnn(self) -> bool {
        matches!(self, ModelChoice::Bnn | ModelChoice::All)
    }

    fn markov(self) -> bool {
        matches!(self, ModelChoice::Markov | ModelChoice::All)
    }
}

/// Parses `1,3,5-7` into a sorted, deduplicated month list.
pub fn parse_months(text: &str) -> Result<Vec<u32>> {
    let bad = |part: &str| Error::Validation(format!("bad month list entry `{part}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad(part))?, b.trim().parse().map_err(|_| bad(part))?),
            None => {
                let m: u32 = part.parse().map_err(|_| bad(part))?;
                (m, m)
            }
        };
        if lo > hi || !(1..=12).contains(&lo) || !(1..=12).contains(&hi) {
            return Err(bad(part));
        }
        out.extend(lo..=hi);
    }
    if out.is_empty() {
        return Err(Error::Validation("empty month list".into()));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_strategies(text: &str) -> Result<Vec<StrategyKind>> {
    let mut out = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<StrategyKind>>>()?;
    if out.is_empty() {
        return Err(Error::Validation("empty strategy list".into()));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// A loaded configuration with flag overrides applied.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: RunConfig,
    pub strategies: Vec<StrategyKind>,
}

impl Session {
    pub fn new(cli: &Cli) -> Result<Self> {
        let mut config = RunConfig::load(&cli.config)?;
        if let Some(m) = &cli.months {
            config.months = parse_months(m)?;
        }
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        let strategies = match &cli.strategies {
            Some(s) => parse_strategies(s)?,
            None => StrategyKind::ALL.to_vec(),
        };
        Ok(Self { config, strategies })
    }

    pub fn prices(&self) -> Result<PriceSchedule> {
        let grid = self.config.grid()?;
        match &self.config.paths.prices {
            Some(path) => load_price_csv(path, &grid),
            None => Ok(PriceSchedule::default_time_of_use(&grid)),
        }
    }

    /// All days in the data path that resample cleanly onto the grid.
    pub fn load_days(&self) -> Result<Vec<StepSeries>> {
        let records = load_records(&self.config.paths.data)?;
        let (days, skipped) = build_all_days(&records, &self.config.grid()?, &self.config.params()?);
        for (date, err) in &skipped {
            log::warn!("skipping {date}: {err}");
        }
        Ok(days)
    }

    pub fn splits(&self, days: &[StepSeries]) -> Result<Vec<DatasetSplit>> {
        let s = &self.config.split;
        self.config
            .months
            .iter()
            .map(|m| split_by_years(days, &s.train_years, &s.test_years, *m))
            .collect()
    }
}

/// Reads one CSV file, or every `*.csv` in a directory, into one sorted record list.
pub fn load_records(path: &Path) -> Result<Vec<IrradianceRecord>> {
    if !path.is_dir() {
        return load_irradiance_csv(path);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!("no .csv files in {}", path.display())));
    }
    let mut records = Vec::new();
    for f in &files {
        records.extend(load_irradiance_csv(f)?);
    }
    records.sort_by_key(|r| r.timestamp);
    if let Some(w) = records.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
        return Err(Error::Validation(format!("timestamp {} appears in more than one file", w[0].timestamp)));
    }
    Ok(records)
}

pub fn bnn_model_path(models: &Path, month: u32) -> PathBuf {
    models.join(format!("bnn-m{month:02}.helios"))
}

pub fn markov_model_path(models: &Path, month: u32) -> PathBuf {
    models.join(format!("markov-m{month:02}.helios"))
}

pub fn loss_history_path(models: &Path, month: u32) -> PathBuf {
    models.join(format!("bnn-m{month:02}-loss.csv"))
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

/// Trains the requested models for every configured month. Returns the files written.
pub fn cmd_train(session: &Session, model: ModelChoice) -> Result<Vec<PathBuf>> {
    let cfg = &session.config;
    let days = session.load_days()?;
    let models_dir = &cfg.paths.models;
    let mut written = Vec::new();
    for split in session.splits(&days)? {
        let month = split.month;
        if split.train.is_empty() {
            return Err(Error::Validation(format!("month {month}: no training days in the configured years")));
        }
        if model.markov() {
            let m = fit_markov(&split.train, cfg.markov.bins, cfg.markov.alpha)?;
            let path = markov_model_path(models_dir, month);
            save_model(&StoredModel::Markov(m), &path)?;
            log::info!("month {month}: markov model -> {}", path.display());
            written.push(path);
        }
        if model.bnn() {
            let trained = fit_bnn(&cfg.bnn_config_for(month), &split.train)?;
            let path = bnn_model_path(models_dir, month);
            save_model(&StoredModel::Bnn(trained.model), &path)?;
            written.push(path.clone());
            let loss_path = loss_history_path(models_dir, month);
            let rows: Vec<LossRow> = trained
                .loss_history
                .iter()
                .enumerate()
                .map(|(i, l)| LossRow { epoch: i + 1, loss: *l })
                .collect();
            write_rows(&rows, &loss_path)?;
            log::info!(
                "month {month}: bnn model -> {} (final loss {:.4})",
                path.display(),
                trained.loss_history.last().copied().unwrap_or(f64::NAN)
            );
            written.push(loss_path);
        }
    }
    Ok(written)
}

fn month_models(session: &Session, split: &DatasetSplit, strategies: &[StrategyKind]) -> Result<MonthModels> {
    let dir = &session.config.paths.models;
    let mut models = MonthModels::new(split)?;
    let missing = |kind: &str| Error::MissingModel {
        kind: kind.into(),
        month: split.month,
    };
    if strategies.contains(&StrategyKind::Bnn) {
        let path = bnn_model_path(dir, split.month);
        if !path.exists() {
            return Err(missing("bnn"));
        }
        models.bnn = Some(load_bnn(&path)?);
    }
    if strategies.contains(&StrategyKind::Markov) {
        let path = markov_model_path(dir, split.month);
        if !path.exists() {
            return Err(missing("markov"));
        }
        models.markov = Some(load_markov(&path)?);
    }
    Ok(models)
}

pub fn cmd_simulate(session: &Session) -> Result<Vec<PathBuf>> {
    let cfg = &session.config;
    let days = session.load_days()?;
    let prices = session.prices()?;
    let controller = cfg.controller()?;
    let months = session
        .splits(&days)?
        .into_iter()
        .map(|split| {
            if split.test.is_empty() {
                return Err(Error::Validation(format!("month {}: no test days in the configured years", split.month)));
            }
            let models = month_models(session, &split, &session.strategies)?;
            Ok(CampaignMonth { split, models })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = run_campaign(&months, &session.strategies, &prices, &controller, cfg.test_days_per_month, cfg.seed)?;
    for row in &report.monthly {
        log::info!(
            "month {:2} {:<9} mean cost {:.4} cent/m2, DPI {:.3}",
            row.month,
            row.strategy.as_str(),
            row.mean_cost,
            row.mean_realized_dpi
        );
    }
    write_campaign(&report, &cfg.paths.output)
}

pub fn cmd_report(session: &Session, out: &mut dyn Write) -> Result<Vec<PathBuf>> {
    let dir = &session.config.paths.output;
    let days_path = dir.join("day_results.csv");
    if !days_path.exists() {
        return Err(Error::Validation(format!(
            "{} not found; run `helios simulate` first",
            days_path.display()
        )));
    }
    let days: Vec<DayRow> = read_rows(&days_path)?;
    let per_day = cost_increases(&days);
    let monthly = monthly_increases(&per_day);
    let day_path = dir.join("cost_increase.csv");
    let month_path = dir.join("monthly_increase.csv");
    write_rows(&per_day, &day_path)?;
    write_rows(&monthly, &month_path)?;

    let io = |e| Error::io("<stdout>", e);
    writeln!(out, "month  strategy   days  cost    baseline  increase  percent").map_err(io)?;
    for r in &monthly {
        let pct = r.increase_pct.map_or_else(|| "-".to_string(), |p| format!("{p:.2}%"));
        writeln!(
            out,
            "{:>5}  {:<9}  {:>4}  {:>6.4}  {:>8.4}  {:>8.4}  {:>7}",
            r.month,
            r.strategy.as_str(),
            r.days,
            r.mean_cost,
            r.baseline_cost,
            r.increase,
            pct
        )
        .map_err(io)?;
    }
    Ok(vec![day_path, month_path])
}

#[derive(Serialize)]
struct ForecastRow {
    step: usize,
    actual_ppfd: f64,
    climatology: f64,
    bnn: Option<f64>,
    markov: Option<f64>,
}

/// Forecasts made at `step` (1-based) of `date` for the rest of that day,
/// one CSV row per later step.
pub fn cmd_predict(session: &Session, date: NaiveDate, step: usize, out: &mut dyn Write) -> Result<()> {
    let cfg = &session.config;
    let days = session.load_days()?;
    let day = days
        .iter()
        .find(|d| d.date == date)
        .ok_or_else(|| Error::Validation(format!("{date} is not in the data or has gaps")))?;
    let n = day.len();
    if step == 0 || step > n {
        return Err(Error::Validation(format!("step must be in 1..={n}, got {step}")));
    }
    let s = &cfg.split;
    let split = split_by_years(&days, &s.train_years, &s.test_years, date.month())?;
    let wanted: Vec<StrategyKind> = session
        .strategies
        .iter()
        .copied()
        .filter(|k| matches!(k, StrategyKind::Bnn | StrategyKind::Markov))
        .collect();
    let models = month_models(session, &split, &wanted)?;

    let history = day.ppfd();
    let obs = Observation {
        step: step - 1,
        sun_ppfd: day.steps[step - 1].sun_ppfd,
        history: &history[..step],
        steps_per_day: n,
        day_key: date.num_days_from_ce() as u64,
    };
    let climatology = models.climatology.predict_horizon(&obs)?;
    let bnn = match &models.bnn {
        Some(m) => Some(DaylightGate::new(models.climatology.clone(), BnnPredictor::new(m.clone(), cfg.seed)).predict_horizon(&obs)?),
        None => None,
    };
    let markov = match &models.markov {
        Some(m) => Some(DaylightGate::new(models.climatology.clone(), MarkovPredictor { model: m.clone() }).predict_horizon(&obs)?),
        None => None,
    };
    let mut w = csv::Writer::from_writer(out);
    for (j, clim) in climatology.iter().enumerate() {
        w.serialize(ForecastRow {
            step: step + 1 + j,
            actual_ppfd: history[step + j],
            climatology: clim.value(),
            bnn: bnn.as_ref().map(|f| f[j].value()),
            markov: markov.as_ref().map(|f| f[j].value()),
        })?;
    }
    w.flush().map_err(|e| Error::io("<stdout>", e))
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

/// Prints one JSON error line and returns the exit code for it.
fn fail(kind: &str, message: String, code: i32, err: &mut dyn Write) -> i32 {
    let line = ErrorLine {
        error: kind,
        message,
        exit_code: code,
    };
    let text = serde_json::to_string(&line).unwrap_or_else(|_| format!("{{\"error\":\"{kind}\"}}"));
    let _ = writeln!(err, "{text}");
    code
}

/// Runs the tool with explicit arguments and streams. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail("usage", first.to_string(), 1, err);
        }
    };
    let result = Session::new(&cli).and_then(|session| match cli.command {
        Command::Train { model } => cmd_train(&session, model).map(|files| list_files(&files, out)),
        Command::Simulate => cmd_simulate(&session).map(|files| list_files(&files, out)),
        Command::Report => cmd_report(&session, out).map(|_| ()),
        Command::Predict { date, step } => cmd_predict(&session, date, step, out),
    });
    match result {
        Ok(()) => 0,
        Err(e) => fail(e.kind(), e.to_string(), if e.is_user_error() { 1 } else { 2 }, err),
    }
}

fn list_files(files: &[PathBuf], out: &mut dyn Write) {
    // one line per directory keeps trace-heavy runs readable
    let mut per_dir: BTreeMap<&Path, usize> = BTreeMap::new();
    for f in files {
        *per_dir.entry(f.parent().unwrap_or(Path::new("."))).or_default() += 1;
    }
    for f in files.iter().filter(|f| f.parent().and_then(Path::file_name).is_none_or(|d| d != "traces")) {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    for (dir, n) in per_dir.iter().filter(|(d, _)| d.file_name().is_some_and(|x| x == "traces")) {
        let _ = writeln!(out, "wrote {n} traces under {}", dir.display());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_lists() {
        assert_eq!(parse_months("3").unwrap(), vec![3]);
        assert_eq!(parse_months("12, 1-3,2").unwrap(), vec![1, 2, 3, 12]);
        for bad in ["", "0", "13", "5-2", "x", "1-"] {
            assert!(parse_months(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn strategy_lists() {
        assert_eq!(
            parse_strategies("heuristic,baseline,heuristic").unwrap(),
            vec![StrategyKind::BaselineOracle, StrategyKind::Heuristic]
        );
        assert!(parse_strategies("baseline,solar").is_err());
    }

    #[test]
    fn usage_errors_are_json_with_code_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["helios", "simulate", "--bogus"], &mut out, &mut err);
        assert_eq!(code, 1);
        let line = String::from_utf8(err).unwrap();
        assert_eq!(line.lines().count(), 1);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "usage");
    }

    #[test]
    fn missing_config_is_a_user_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["helios", "--config", "/nonexistent/helios.toml", "report"], &mut out, &mut err);
        assert_eq!(code, 1);
        let v: serde_json::Value = serde_json::from_slice(&err).unwrap();
        assert_eq!(v["error"], "io");
    }

    #[test]
    fn help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["helios", "--help"], &mut out, &mut err), 0);
        let text = String::from_utf8(out).unwrap();
        for cmd in ["train", "simulate", "report", "predict"] {
            assert!(text.contains(cmd));
        }
    }
}
