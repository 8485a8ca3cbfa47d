//! Read a GHI CSV, resample it onto the control grid and split by year.
//!
//! ```text
//! cargo run --example ingest_and_split -- path/to/ghi.csv
//! ```
//!
//! Without an argument a small file with a deliberate gap is written to a
//! temporary directory first.

use std::path::PathBuf;

use chrono::NaiveDate;
use helios::data::{build_all_days, load_irradiance_csv, split_by_years, ControlGrid};
use helios::light::PhotosynthesisParams;
use helios::synth::{generate_records, write_irradiance_csv, SiteModel};

fn main() -> helios::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let mut records = generate_records(
                &SiteModel::default(),
                NaiveDate::from_ymd_opt(2005, 3, 1).unwrap(),
                NaiveDate::from_ymd_opt(2006, 3, 31).unwrap(),
                1,
            )?;
            // drop half an hour around noon on one day
            let hole = NaiveDate::from_ymd_opt(2005, 3, 9).unwrap().and_hms_opt(12, 0, 0).unwrap();
            records.retain(|r| (r.timestamp - hole).num_minutes().abs() > 15);
            let path = std::env::temp_dir().join("helios-ingest-example.csv");
            write_irradiance_csv(&records, &path)?;
            path
        }
    };

    let records = load_irradiance_csv(&path)?;
    println!("{}: {} samples", path.display(), records.len());
    let grid = ControlGrid::default();
    let (days, skipped) = build_all_days(&records, &grid, &PhotosynthesisParams::default());
    println!("{} days on a {}-step grid", days.len(), grid.steps());
    for (date, err) in &skipped {
        println!("  skipped {date}: {err}");
    }

    let split = split_by_years(&days, &[2005], &[2006], 3)?;
    println!("March: {} training days, {} test days", split.train.len(), split.test.len());
    if let Some(day) = split.test.first() {
        let peak = day.ppfd().into_iter().fold(0.0, f64::max);
        println!("{} peaks at {peak:.0} PPFD", day.date);
    }
    Ok(())
}
