//! Synthetic sunlight for demos and tests.
//!
//! Clear-sky irradiance follows the Haurwitz model, scaled by a day-level
//! clearness drawn per day and a slowly varying intraday AR(1) cloud factor.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::data::{build_step_series, ControlGrid, IrradianceRecord, StepSeries};
use crate::error::{Error, Result};
use crate::light::{Irradiance, PhotosynthesisParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteModel {
    pub latitude_deg: f64,
    /// Clock time of solar noon, in hours.
    pub solar_noon_hour: f64,
    /// Multiplies clear-sky irradiance (glazing, shading).
    pub transmission: f64,
    /// No clouds at all when false.
    pub cloudy: bool,
    /// Beta(α, β) parameters of the day's clearness.
    pub clearness_alpha: f64,
    pub clearness_beta: f64,
    /// Lag-one correlation and innovation scale of the intraday cloud factor.
    pub ar_coefficient: f64,
    pub ar_sigma: f64,
    pub sample_minutes: i64,
    /// Use the sun's path on the 15th for every day of a month, making each
    /// month stationary.
    pub mid_month_sun: bool,
}

impl Default for SiteModel {
    /// Coastal North Carolina, 5-minute samples.
    fn default() -> Self {
        Self {
            latitude_deg: 36.3,
            solar_noon_hour: 12.0,
            transmission: 1.0,
            cloudy: true,
            clearness_alpha: 4.0,
            clearness_beta: 1.6,
            ar_coefficient: 0.9,
            ar_sigma: 0.08,
            sample_minutes: 5,
            mid_month_sun: false,
        }
    }
}

impl SiteModel {
    pub fn clear_sky() -> Self {
        Self {
            cloudy: false,
            ..Self::default()
        }
    }
}

/// Haurwitz clear-sky global horizontal irradiance, W m⁻².
pub fn haurwitz_ghi(latitude_deg: f64, day_of_year: u32, solar_hour: f64) -> f64 {
    let decl = 23.45f64.to_radians() * (2.0 * PI * (284.0 + day_of_year as f64) / 365.0).sin();
    let lat = latitude_deg.to_radians();
    let hour_angle = (15.0 * (solar_hour - 12.0)).to_radians();
    let cos_z = lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos();
    if cos_z <= 0.0 {
        0.0
    } else {
        1098.0 * cos_z * (-0.057 / cos_z).exp()
    }
}

/// Irradiance records for every day in `from..=to`, deterministic in `seed`.
pub fn generate_records(site: &SiteModel, from: NaiveDate, to: NaiveDate, seed: u64) -> Result<Vec<IrradianceRecord>> {
    if to < from {
        return Err(Error::Validation(format!("empty date range {from}..={to}")));
    }
    if site.sample_minutes <= 0 || 1440 % site.sample_minutes != 0 {
        return Err(Error::Validation("sample interval must divide a day".into()));
    }
    let clearness = Beta::new(site.clearness_alpha, site.clearness_beta)
        .map_err(|e| Error::Validation(format!("clearness distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_day = 1440 / site.sample_minutes;
    let mut out = Vec::new();
    let mut date = from;
    while date <= to {
        let base = if site.cloudy { clearness.sample(&mut rng) } else { 1.0 };
        let mut cloud = 0.0f64;
        let midnight = date.and_hms_opt(0, 0, 0).expect("valid midnight");
        let day_of_year = if site.mid_month_sun {
            date.with_day(15).expect("every month has a 15th").ordinal()
        } else {
            date.ordinal()
        };
        for j in 0..per_day {
            let minutes = j * site.sample_minutes;
            let hour = minutes as f64 / 60.0;
            let clear = haurwitz_ghi(site.latitude_deg, day_of_year, hour - site.solar_noon_hour + 12.0);
            let factor = if site.cloudy {
                let xi: f64 = StandardNormal.sample(&mut rng);
                cloud = site.ar_coefficient * cloud + site.ar_sigma * xi;
                (base + cloud).clamp(0.05, 1.0)
            } else {
                1.0
            };
            out.push(IrradianceRecord {
                timestamp: midnight + TimeDelta::minutes(minutes),
                ghi: Irradiance::new(clear * factor * site.transmission)?,
            });
        }
        date = date.succ_opt().expect("date in range");
    }
    Ok(out)
}

/// Generated days resampled onto `grid`.
pub fn generate_series(
    site: &SiteModel,
    from: NaiveDate,
    to: NaiveDate,
    seed: u64,
    grid: &ControlGrid,
    params: &PhotosynthesisParams,
) -> Result<Vec<StepSeries>> {
    let records = generate_records(site, from, to, seed)?;
    from.iter_days()
        .take_while(|d| *d <= to)
        .map(|d| build_step_series(&records, d, grid, params))
        .collect()
}

/// Writes records as `timestamp,ghi_w_m2`.
pub fn write_irradiance_csv(records: &[IrradianceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "timestamp,ghi_w_m2")?;
        for r in records {
            writeln!(w, "{},{:.3}", r.timestamp.format("%Y-%m-%dT%H:%M:%S"), r.ghi.value())?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Half-sine sunlight profile over `steps` control steps: dark outside
/// `sunrise..sunset`, `peak` at the midpoint.
pub fn half_sine(peak: f64, steps: usize, sunrise: usize, sunset: usize) -> Vec<f64> {
    let span = sunset.saturating_sub(sunrise).max(1) as f64;
    (0..steps)
        .map(|t| {
            if t <= sunrise || t >= sunset {
                0.0
            } else {
                peak * (PI * (t - sunrise) as f64 / span).sin()
            }
        })
        .collect()
}

/// `days` consecutive noiseless half-sine days starting at `start`. Peaks
/// vary from day to day but the next step is always a fixed function of the
/// current one, so a good one-step model can learn it exactly.
pub fn half_sine_month(
    start: NaiveDate,
    days: usize,
    steps: usize,
    peaks: impl Fn(usize) -> f64,
    params: &PhotosynthesisParams,
) -> Result<Vec<StepSeries>> {
    let sunrise = steps / 8;
    let sunset = steps - steps / 8;
    start
        .iter_days()
        .take(days)
        .enumerate()
        .map(|(i, date)| StepSeries::from_ppfd(date, 900, &half_sine(peaks(i), steps, sunrise, sunset), params))
        .collect()
}

/// Uniform peak draws in `lo..hi`, reproducible from `seed`.
pub fn random_peaks(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haurwitz_shape() {
        // summer noon at 36°N: zenith about 13°
        let noon = haurwitz_ghi(36.3, 172, 12.0);
        assert!((950.0..1050.0).contains(&noon), "{noon}");
        assert_eq!(haurwitz_ghi(36.3, 172, 0.0), 0.0);
        assert!(haurwitz_ghi(36.3, 355, 12.0) < 0.6 * noon);
        let am = haurwitz_ghi(36.3, 100, 9.0);
        let pm = haurwitz_ghi(36.3, 100, 15.0);
        assert!((am - pm).abs() < 1e-9);
    }

    #[test]
    fn records_are_deterministic_and_bounded() {
        let d0 = NaiveDate::from_ymd_opt(2004, 2, 27).unwrap();
        let d1 = NaiveDate::from_ymd_opt(2004, 3, 2).unwrap();
        let a = generate_records(&SiteModel::default(), d0, d1, 3).unwrap();
        assert_eq!(a, generate_records(&SiteModel::default(), d0, d1, 3).unwrap());
        assert_ne!(a, generate_records(&SiteModel::default(), d0, d1, 4).unwrap());
        assert_eq!(a.len(), 5 * 288);
        let clear = generate_records(&SiteModel::clear_sky(), d0, d1, 3).unwrap();
        for (c, s) in a.iter().zip(&clear) {
            assert!(c.ghi.value() <= s.ghi.value() + 1e-12);
        }
    }

    #[test]
    fn mid_month_sun_repeats_days() {
        let site = SiteModel {
            mid_month_sun: true,
            ..SiteModel::clear_sky()
        };
        let d0 = NaiveDate::from_ymd_opt(2004, 3, 1).unwrap();
        let r = generate_records(&site, d0, d0 + TimeDelta::days(1), 0).unwrap();
        let (a, b) = r.split_at(288);
        assert!(a.iter().zip(b).all(|(x, y)| x.ghi == y.ghi));
    }

    #[test]
    fn series_cover_the_grid() {
        let d = NaiveDate::from_ymd_opt(2006, 12, 30).unwrap();
        let grid = ControlGrid::default();
        let days = generate_series(&SiteModel::default(), d, d + TimeDelta::days(3), 1, &grid, &PhotosynthesisParams::default()).unwrap();
        assert_eq!(days.len(), 4);
        assert_eq!(days[2].date.year(), 2007);
        assert!(days.iter().all(|s| s.len() == 64));
        assert!(days.iter().all(|s| s.steps[0].sun_ppfd.value() == 0.0));
    }

    #[test]
    fn half_sine_profile() {
        let p = half_sine(1000.0, 64, 8, 56);
        assert_eq!(p[8], 0.0);
        assert_eq!(p[56], 0.0);
        assert!((p[32] - 1000.0).abs() < 1e-9);
        assert!((p[20] - p[44]).abs() < 1e-9);
    }
}
