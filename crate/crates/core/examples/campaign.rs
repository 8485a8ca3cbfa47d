//! A small multi-month campaign written out as CSV files, then summarised
//! as cost increases over the baseline.
//!
//! ```text
//! cargo run --release --example campaign -- [output dir]
//! ```

use chrono::NaiveDate;
use helios::bnn::{fit_bnn, BnnConfig};
use helios::data::{split_by_years, ControlGrid, PriceSchedule};
use helios::light::PhotosynthesisParams;
use helios::predict::fit_markov;
use helios::report::{cost_increases, monthly_increases, write_campaign, DayRow};
use helios::sim::{run_campaign, CampaignMonth, ControllerConfig, MonthModels, StrategyKind};
use helios::synth::{generate_series, SiteModel};

fn main() -> helios::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "campaign-out".into());
    let params = PhotosynthesisParams::default();
    let grid = ControlGrid::default();
    let site = SiteModel {
        transmission: 0.5,
        sample_minutes: 15,
        ..SiteModel::default()
    };
    let days = generate_series(
        &site,
        NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2003, 12, 31).unwrap(),
        21,
        &grid,
        &params,
    )?;

    let mut months = Vec::new();
    for month in [1, 4, 7, 10] {
        let split = split_by_years(&days, &[2001, 2002], &[2003], month)?;
        let mut models = MonthModels::new(&split)?;
        models.markov = Some(fit_markov(&split.train, 10, 1.0)?);
        let bnn = BnnConfig {
            hidden_sizes: [32, 32],
            epochs: 60,
            learning_rate: 1e-3,
            seed: month as u64,
            ..BnnConfig::default()
        };
        models.bnn = Some(fit_bnn(&bnn, &split.train)?.model);
        months.push(CampaignMonth { split, models });
    }

    let prices = PriceSchedule::default_time_of_use(&grid);
    let report = run_campaign(&months, &StrategyKind::ALL, &prices, &ControllerConfig::default(), 3, 0)?;
    let files = write_campaign(&report, &out)?;
    println!("wrote {} files under {out}", files.len());

    let rows: Vec<DayRow> = report.days.iter().map(DayRow::from_result).collect();
    println!("\nmonth  strategy   cost    increase");
    for r in monthly_increases(&cost_increases(&rows)) {
        let pct = r.increase_pct.map_or("-".into(), |p| format!("{p:+.1}%"));
        println!("{:>5}  {:<9}  {:>6.3}  {:>8}", r.month, r.strategy.as_str(), r.mean_cost, pct);
    }
    Ok(())
}
