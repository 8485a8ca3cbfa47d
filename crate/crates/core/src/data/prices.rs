use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ControlGrid;
use crate::error::{Error, Result};

/// Off-peak price of the built-in two-tier tariff, cent/kWh.
pub const DEFAULT_OFF_PEAK: f64 = 6.0;
/// On-peak price of the built-in two-tier tariff, cent/kWh.
pub const DEFAULT_ON_PEAK: f64 = 18.0;
/// On-peak hours `[start, end)` of the built-in tariff.
pub const DEFAULT_PEAK_HOURS: (u32, u32) = (14, 19);

/// Electricity price for each control step, cent/kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSchedule {
    pub cents_per_kwh: Vec<f64>,
}

impl PriceSchedule {
    pub fn new(cents_per_kwh: Vec<f64>) -> Result<Self> {
        if let Some((t, c)) = cents_per_kwh.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Validation(format!("price for step {} must be > 0, got {c}", t + 1)));
        }
        Ok(Self { cents_per_kwh })
    }

    /// Expands 24 hourly prices onto the control grid; each step takes the
    /// price of the hour in which it starts.
    pub fn from_hourly(hourly: &[f64; 24], grid: &ControlGrid) -> Result<Self> {
        let prices = (0..grid.steps())
            .map(|t| hourly[((grid.step_start_seconds(t) / 3600) % 24) as usize])
            .collect();
        Self::new(prices)
    }

    /// The shipped two-tier time-of-use tariff.
    pub fn default_time_of_use(grid: &ControlGrid) -> Self {
        Self::from_hourly(&default_hourly_prices(), grid).expect("default tariff is positive")
    }

    pub fn len(&self) -> usize {
        self.cents_per_kwh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cents_per_kwh.is_empty()
    }
}

pub fn default_hourly_prices() -> [f64; 24] {
    let mut hourly = [DEFAULT_OFF_PEAK; 24];
    for h in DEFAULT_PEAK_HOURS.0..DEFAULT_PEAK_HOURS.1 {
        hourly[h as usize] = DEFAULT_ON_PEAK;
    }
    hourly
}

/// Loads `hour,cent_per_kwh` (24 rows) or `step,cent_per_kwh` (T rows, 1-based).
pub fn load_price_csv(path: impl AsRef<Path>, grid: &ControlGrid) -> Result<PriceSchedule> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_price_csv(file, path, grid)
}

pub fn read_price_csv(reader: impl std::io::Read, source: impl AsRef<Path>, grid: &ControlGrid) -> Result<PriceSchedule> {
    let source = source.as_ref();
    let ingest = |line: u64, field: &str, message: String| Error::Ingest {
        path: source.to_path_buf(),
        line,
        field: field.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let key = headers.get(0).unwrap_or("").to_string();
    if headers.len() < 2 || !(key == "hour" || key == "step") || &headers[1] != "cent_per_kwh" {
        return Err(ingest(1, "header", "expected `hour,cent_per_kwh` or `step,cent_per_kwh`".into()));
    }
    let expected = if key == "hour" { 24 } else { grid.steps() };
    let first = if key == "hour" { 0 } else { 1 };
    let mut values = vec![None; expected];
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let idx: usize = row[0]
            .parse()
            .map_err(|_| ingest(line, &key, format!("cannot parse `{}` as an index", &row[0])))?;
        let price: f64 = row[1]
            .parse()
            .map_err(|_| ingest(line, "cent_per_kwh", format!("cannot parse `{}` as a number", &row[1])))?;
        if !(price.is_finite() && price > 0.0) {
            return Err(ingest(line, "cent_per_kwh", format!("price must be > 0, got {price}")));
        }
        let slot = idx
            .checked_sub(first)
            .filter(|i| *i < expected)
            .ok_or_else(|| ingest(line, &key, format!("{key} {idx} outside {first}..{}", expected - 1 + first)))?;
        if values[slot].replace(price).is_some() {
            return Err(ingest(line, &key, format!("duplicate {key} {idx}")));
        }
    }
    let missing: Vec<usize> = values.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| i + first).collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!("{}: missing {key} rows {missing:?}", source.display())));
    }
    let values: Vec<f64> = values.into_iter().flatten().collect();
    if key == "hour" {
        let hourly: [f64; 24] = values.try_into().expect("24 hourly rows");
        PriceSchedule::from_hourly(&hourly, grid)
    } else {
        PriceSchedule::new(values)
    }
}
