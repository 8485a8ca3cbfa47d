//! Write synthetic irradiance CSVs for trying out the `helios` command.
//!
//! ```text
//! cargo run --release --example generate_synthetic_data -- data/irradiance 2001 2004
//! ```
//!
//! One file per year, `timestamp,ghi_w_m2` at 5-minute resolution, for a
//! site at 36.3°N behind glazing that passes half the light.

use chrono::NaiveDate;
use helios::synth::{generate_records, write_irradiance_csv, SiteModel};

fn main() -> helios::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "data/irradiance".into());
    let first: i32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2001);
    let last: i32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2004);
    let site = SiteModel {
        transmission: 0.5,
        ..SiteModel::default()
    };
    for year in first..=last {
        let records = generate_records(
            &site,
            NaiveDate::from_ymd_opt(year, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(year, 12, 31).unwrap(),
            year as u64,
        )?;
        let path = format!("{dir}/ghi-{year}.csv");
        write_irradiance_csv(&records, &path)?;
        println!("{path}: {} samples", records.len());
    }
    Ok(())
}
