//! Run configuration, read from a TOML file.
//!
//! Every section is optional and falls back to the documented defaults.
//! Relative paths are resolved against the directory holding the file.
//!
//! ```toml
//! seed = 7
//! months = [1, 2, 3]
//! test_days_per_month = 3
//!
//! [paths]
//! data = "data/irradiance"     # CSV file or directory of CSV files
//! prices = "data/prices_tou.csv"
//! models = "models"
//! output = "out"
//!
//! [split]
//! train_years = [2003, 2004]
//! test_years = [2005]
//! ```

use std::path::{Path, PathBuf};

use chrono::NaiveTime;
use serde::{Deserialize, Serialize};

use crate::bnn::BnnConfig;
use crate::data::ControlGrid;
use crate::error::{Error, Result};
use crate::light::{PhotosynthesisParams, DEFAULT_WATTS_TO_PPFD};
use crate::optimizer::DEFAULT_LED_EFFICACY;
use crate::predict::{DEFAULT_ALPHA, DEFAULT_BINS};
use crate::sim::ControllerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data: PathBuf,
    /// Tariff file; the built-in time-of-use tariff when absent.
    pub prices: Option<PathBuf>,
    pub models: PathBuf,
    pub output: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data"),
            prices: None,
            models: PathBuf::from("models"),
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Local clock time the photoperiod starts, `HH:MM`.
    pub photoperiod_start: String,
    pub photoperiod_hours: f64,
    pub step_seconds: u32,
    pub watts_to_ppfd: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            photoperiod_start: "04:00".into(),
            photoperiod_hours: 16.0,
            step_seconds: 900,
            watts_to_ppfd: DEFAULT_WATTS_TO_PPFD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub a: f64,
    pub k: f64,
    /// Daily photochemical integral target, mol m⁻² d⁻¹.
    pub dpi_target: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        let p = PhotosynthesisParams::default();
        Self {
            a: p.a,
            k: p.k,
            dpi_target: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedConfig {
    pub max_etr: f64,
    pub max_ppfd: f64,
    /// µmol J⁻¹.
    pub efficacy: f64,
}

impl Default for LedConfig {
    fn default() -> Self {
        Self {
            max_etr: 51.47,
            max_ppfd: 200.0,
            efficacy: DEFAULT_LED_EFFICACY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_years: Vec<i32>,
    pub test_years: Vec<i32>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_years: (2001..=2012).collect(),
            test_years: vec![2013],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkovConfig {
    pub bins: usize,
    pub alpha: f64,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// BNN settings accepted from the file. The normalisation is fitted at
/// training time and never configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnnSection {
    pub hidden_sizes: [usize; 2],
    pub mc_samples_train: usize,
    pub mc_samples_predict: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub prior_std: f64,
    pub obs_noise_std: f64,
    pub init_sigma: f64,
}

impl Default for BnnSection {
    fn default() -> Self {
        let d = BnnConfig::default();
        Self {
            hidden_sizes: d.hidden_sizes,
            mc_samples_train: d.mc_samples_train,
            mc_samples_predict: d.mc_samples_predict,
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
            prior_std: d.prior_std,
            obs_noise_std: d.obs_noise_std,
            init_sigma: d.init_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub months: Vec<u32>,
    pub test_days_per_month: usize,
    pub paths: PathsConfig,
    pub grid: GridConfig,
    pub plant: PlantConfig,
    pub led: LedConfig,
    pub split: SplitConfig,
    pub bnn: BnnSection,
    pub markov: MarkovConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            months: (1..=12).collect(),
            test_days_per_month: 3,
            paths: PathsConfig::default(),
            grid: GridConfig::default(),
            plant: PlantConfig::default(),
            led: LedConfig::default(),
            split: SplitConfig::default(),
            bnn: BnnSection::default(),
            markov: MarkovConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads, resolves and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Parses and validates without touching the file system.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Validation(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.paths.data);
        join(&mut self.paths.models);
        join(&mut self.paths.output);
        if let Some(p) = self.paths.prices.as_mut() {
            join(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?.validate()?;
        self.controller()?.validate()?;
        self.bnn_config().validate()?;
        if self.months.is_empty() {
            return Err(Error::Validation("no months selected".into()));
        }
        if let Some(m) = self.months.iter().find(|m| !(1..=12).contains(*m)) {
            return Err(Error::Validation(format!("month {m} is not in 1..=12")));
        }
        if self.test_days_per_month == 0 {
            return Err(Error::Validation("test_days_per_month must be at least 1".into()));
        }
        if self.markov.bins == 0 || !(self.markov.alpha.is_finite() && self.markov.alpha >= 0.0) {
            return Err(Error::Validation("markov needs bins >= 1 and alpha >= 0".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<ControlGrid> {
        let g = &self.grid;
        let start = NaiveTime::parse_from_str(&g.photoperiod_start, "%H:%M")
            .or_else(|_| NaiveTime::parse_from_str(&g.photoperiod_start, "%H:%M:%S"))
            .map_err(|_| Error::Validation(format!("photoperiod_start `{}` is not HH:MM", g.photoperiod_start)))?;
        let seconds = g.photoperiod_hours * 3600.0;
        if !(seconds.is_finite() && seconds > 0.0 && seconds.fract() == 0.0) {
            return Err(Error::Validation(format!(
                "photoperiod of {} h is not a whole number of seconds",
                g.photoperiod_hours
            )));
        }
        let grid = ControlGrid {
            photoperiod_start: start,
            photoperiod_seconds: seconds as u32,
            step_seconds: g.step_seconds,
            watts_to_ppfd: g.watts_to_ppfd,
        };
        grid.validate()?;
        if start.signed_duration_since(NaiveTime::MIN).num_seconds() + grid.photoperiod_seconds as i64 > 24 * 3600 {
            return Err(Error::Validation("photoperiod runs past midnight".into()));
        }
        Ok(grid)
    }

    pub fn params(&self) -> Result<PhotosynthesisParams> {
        PhotosynthesisParams::new(self.plant.a, self.plant.k)
    }

    pub fn controller(&self) -> Result<ControllerConfig> {
        let cfg = ControllerConfig {
            params: self.params()?,
            dpi_target: self.plant.dpi_target,
            step_seconds: self.grid.step_seconds as f64,
            led_max_etr: self.led.max_etr,
            led_max_ppfd: self.led.max_ppfd,
            led_efficacy: self.led.efficacy,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// BNN settings for one month; each month trains from its own seed.
    pub fn bnn_config_for(&self, month: u32) -> BnnConfig {
        BnnConfig {
            seed: self.seed.wrapping_mul(100).wrapping_add(month as u64),
            ..self.bnn_config()
        }
    }

    fn bnn_config(&self) -> BnnConfig {
        let b = &self.bnn;
        BnnConfig {
            hidden_sizes: b.hidden_sizes,
            mc_samples_train: b.mc_samples_train,
            mc_samples_predict: b.mc_samples_predict,
            learning_rate: b.learning_rate,
            epochs: b.epochs,
            batch_size: b.batch_size,
            prior_std: b.prior_std,
            obs_noise_std: b.obs_noise_std,
            init_sigma: b.init_sigma,
            seed: self.seed,
            ..BnnConfig::default()
        }
    }
}
