use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, TimeDelta};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::light::{watts_to_ppfd, Etr, Irradiance, PhotosynthesisParams, Ppfd};

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

/// One measured global horizontal irradiance sample, timestamped in local site time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrradianceRecord {
    pub timestamp: NaiveDateTime,
    pub ghi: Irradiance,
}

/// Placement and resolution of the control grid within a day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub photoperiod_start: NaiveTime,
    pub photoperiod_seconds: u32,
    /// Control step length `m`.
    pub step_seconds: u32,
    /// Sunlight W m⁻² → µmol m⁻² s⁻¹ factor.
    pub watts_to_ppfd: f64,
}

impl Default for ControlGrid {
    /// 16 h photoperiod from 04:00 with 15-minute steps.
    fn default() -> Self {
        Self {
            photoperiod_start: NaiveTime::from_hms_opt(4, 0, 0).unwrap(),
            photoperiod_seconds: 16 * 3600,
            step_seconds: 900,
            watts_to_ppfd: crate::light::DEFAULT_WATTS_TO_PPFD,
        }
    }
}

impl ControlGrid {
    pub fn validate(&self) -> Result<()> {
        if self.step_seconds == 0 || self.photoperiod_seconds == 0 {
            return Err(Error::Validation("step length and photoperiod must be positive".into()));
        }
        if !self.photoperiod_seconds.is_multiple_of(self.step_seconds) {
            return Err(Error::Validation(format!(
                "photoperiod of {} s is not a whole number of {} s steps",
                self.photoperiod_seconds, self.step_seconds
            )));
        }
        if self.photoperiod_seconds > 24 * 3600 {
            return Err(Error::Validation("photoperiod longer than a day".into()));
        }
        if !(self.watts_to_ppfd.is_finite() && self.watts_to_ppfd > 0.0) {
            return Err(Error::Validation("W m⁻² → PPFD factor must be > 0".into()));
        }
        Ok(())
    }

    /// Number of control steps `T` in the photoperiod.
    pub fn steps(&self) -> usize {
        (self.photoperiod_seconds / self.step_seconds) as usize
    }

    /// Seconds after midnight at which step `t` (0-based) begins.
    pub fn step_start_seconds(&self, t: usize) -> u64 {
        let start = self.photoperiod_start.signed_duration_since(NaiveTime::MIN).num_seconds() as u64;
        start + t as u64 * self.step_seconds as u64
    }
}

/// Sunlight for one control step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSample {
    /// 1-based step index within the photoperiod.
    pub step_index: usize,
    pub sun_ppfd: Ppfd,
    pub sun_etr: Etr,
}

/// One day of sunlight on the control grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSeries {
    pub date: NaiveDate,
    pub month: u32,
    pub step_seconds: u32,
    pub steps: Vec<StepSample>,
}

impl StepSeries {
    /// Builds a day directly from per-step sunlight PPFD.
    pub fn from_ppfd(date: NaiveDate, step_seconds: u32, ppfd: &[f64], params: &PhotosynthesisParams) -> Result<Self> {
        let steps = ppfd
            .iter()
            .enumerate()
            .map(|(t, &p)| {
                let sun_ppfd = Ppfd::new(p)?;
                Ok(StepSample {
                    step_index: t + 1,
                    sun_ppfd,
                    sun_etr: crate::light::etr_from_ppfd(sun_ppfd, params),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            date,
            month: date.month(),
            step_seconds,
            steps,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn ppfd(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.sun_ppfd.value()).collect()
    }

    pub fn etr(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.sun_etr.value()).collect()
    }
}

/// Reads an irradiance CSV (`timestamp,ghi_w_m2`) from disk.
pub fn load_irradiance_csv(path: impl AsRef<Path>) -> Result<Vec<IrradianceRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_irradiance_csv(file, path)
}

/// Parses irradiance CSV from any reader; `source` is only used in error messages.
pub fn read_irradiance_csv(reader: impl Read, source: impl AsRef<Path>) -> Result<Vec<IrradianceRecord>> {
    let source = source.as_ref();
    let ingest = |line: u64, field: &str, message: String| Error::Ingest {
        path: source.to_path_buf(),
        line,
        field: field.to_string(),
        message,
    };

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "timestamp" || &headers[1] != "ghi_w_m2" {
        return Err(ingest(1, "header", format!("expected `timestamp,ghi_w_m2`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }

    let mut records: Vec<IrradianceRecord> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let raw_ts = row.get(0).unwrap_or("");
        let timestamp = TIMESTAMP_FORMATS
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(raw_ts, f).ok())
            .ok_or_else(|| ingest(line, "timestamp", format!("cannot parse `{raw_ts}` as an ISO-8601 local time")))?;
        let raw_ghi = row.get(1).unwrap_or("");
        let value: f64 = raw_ghi
            .parse()
            .map_err(|_| ingest(line, "ghi_w_m2", format!("cannot parse `{raw_ghi}` as a number")))?;
        let ghi = Irradiance::new(value).map_err(|_| ingest(line, "ghi_w_m2", format!("irradiance must be finite and >= 0, got {value}")))?;
        if let Some(prev) = records.last() {
            if timestamp <= prev.timestamp {
                return Err(ingest(line, "timestamp", format!("{timestamp} does not follow {}", prev.timestamp)));
            }
        }
        records.push(IrradianceRecord { timestamp, ghi });
    }
    Ok(records)
}

/// Distinct calendar dates present in a record set, in order.
pub fn record_dates(records: &[IrradianceRecord]) -> Vec<NaiveDate> {
    records.iter().map(|r| r.timestamp.date()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Resamples one day's irradiance onto the control grid by within-step averaging.
///
/// The native sampling interval is inferred from the records around the
/// window and must divide the step length. Individual missing samples are
/// linearly interpolated from their neighbours when those lie no more than
/// one step apart; anything wider is reported as a gap.
pub fn build_step_series(
    records: &[IrradianceRecord],
    date: NaiveDate,
    grid: &ControlGrid,
    params: &PhotosynthesisParams,
) -> Result<StepSeries> {
    grid.validate()?;
    let n_steps = grid.steps();
    let step = TimeDelta::seconds(grid.step_seconds as i64);
    let start = date.and_time(grid.photoperiod_start);
    let end = start + TimeDelta::seconds(grid.photoperiod_seconds as i64);
    let all_missing = || Error::Gap {
        date: date.to_string(),
        missing: (1..=n_steps).collect(),
    };

    let lo = records.partition_point(|r| r.timestamp < start - step);
    let hi = records.partition_point(|r| r.timestamp <= end + step);
    let nearby = &records[lo..hi];
    let resolution = nearby
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).num_seconds())
        .min()
        .ok_or_else(all_missing)?;
    if resolution > grid.step_seconds as i64 {
        return Err(Error::Validation(format!(
            "{date}: data resolution of {resolution} s is coarser than the {} s control step",
            grid.step_seconds
        )));
    }
    if grid.step_seconds as i64 % resolution != 0 {
        return Err(Error::Validation(format!(
            "{date}: data resolution of {resolution} s does not divide the {} s control step",
            grid.step_seconds
        )));
    }

    let per_step = (grid.step_seconds as i64 / resolution) as usize;
    let mut sums = vec![0.0; n_steps];
    let mut missing = BTreeSet::new();
    for j in 0..n_steps * per_step {
        let at = start + TimeDelta::seconds(j as i64 * resolution);
        let idx = records.partition_point(|r| r.timestamp < at);
        let value = match records.get(idx) {
            Some(r) if r.timestamp == at => Some(r.ghi.value()),
            next => match (idx.checked_sub(1).map(|p| &records[p]), next) {
                (Some(prev), Some(next)) if (next.timestamp - prev.timestamp).num_seconds() <= grid.step_seconds as i64 => {
                    let span = (next.timestamp - prev.timestamp).num_seconds() as f64;
                    let w = (at - prev.timestamp).num_seconds() as f64 / span;
                    Some(prev.ghi.value() * (1.0 - w) + next.ghi.value() * w)
                }
                _ => None,
            },
        };
        match value {
            Some(v) => sums[j / per_step] += v,
            None => {
                missing.insert(j / per_step + 1);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Gap {
            date: date.to_string(),
            missing: missing.into_iter().collect(),
        });
    }

    let ppfd = sums
        .iter()
        .map(|s| watts_to_ppfd(Irradiance::new(s / per_step as f64)?, grid.watts_to_ppfd).map(Ppfd::value))
        .collect::<Result<Vec<_>>>()?;
    StepSeries::from_ppfd(date, grid.step_seconds, &ppfd, params)
}

/// Builds a series for every date in the records, returning the dates that
/// could not be resampled alongside their errors.
pub fn build_all_days(
    records: &[IrradianceRecord],
    grid: &ControlGrid,
    params: &PhotosynthesisParams,
) -> (Vec<StepSeries>, Vec<(NaiveDate, Error)>) {
    let mut days = Vec::new();
    let mut skipped = Vec::new();
    for date in record_dates(records) {
        match build_step_series(records, date, grid, params) {
            Ok(day) => days.push(day),
            Err(e) => skipped.push((date, e)),
        }
    }
    (days, skipped)
}
