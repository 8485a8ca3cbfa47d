//! All four strategies on one synthetic cloudy day.
//!
//! The learned strategies re-plan every 15 minutes with fresh forecasts; the
//! baseline knows the whole day in advance; the heuristic just tops sunlight
//! up to a fixed level.
//!
//! ```text
//! cargo run --release --example receding_horizon_day
//! ```

use chrono::NaiveDate;
use helios::bnn::{fit_bnn, BnnConfig};
use helios::data::{split_by_years, ControlGrid, PriceSchedule};
use helios::light::PhotosynthesisParams;
use helios::predict::{fit_markov, DEFAULT_ALPHA, DEFAULT_BINS};
use helios::sim::{derive_heuristic_threshold, run_day, ControllerConfig, MonthModels, StrategyKind};
use helios::synth::{generate_series, SiteModel};

fn main() -> helios::Result<()> {
    let params = PhotosynthesisParams::default();
    let grid = ControlGrid::default();
    let site = SiteModel {
        transmission: 0.5,
        sample_minutes: 15,
        ..SiteModel::default()
    };
    let days = generate_series(
        &site,
        NaiveDate::from_ymd_opt(2001, 11, 1).unwrap(),
        NaiveDate::from_ymd_opt(2003, 11, 30).unwrap(),
        3,
        &grid,
        &params,
    )?;
    let split = split_by_years(&days, &[2001, 2002], &[2003], 11)?;
    let mut models = MonthModels::new(&split)?;
    models.markov = Some(fit_markov(&split.train, DEFAULT_BINS, DEFAULT_ALPHA)?);
    let bnn = BnnConfig {
        hidden_sizes: [32, 32],
        epochs: 100,
        learning_rate: 1e-3,
        ..BnnConfig::default()
    };
    models.bnn = Some(fit_bnn(&bnn, &split.train)?.model);

    let cfg = ControllerConfig::default();
    let prices = PriceSchedule::default_time_of_use(&grid);
    println!("heuristic threshold {:.1} PPFD", derive_heuristic_threshold(&cfg, grid.steps())?.value());

    let day = &split.test[7];
    println!("{}: sun alone gives {:.3} mol/m2/d\n", day.date, day.etr().iter().sum::<f64>() * 900e-6);
    println!("{:<10} {:>8} {:>6} {:>9} {:>10}", "strategy", "cost", "DPI", "feasible", "1-step R2");
    for strategy in StrategyKind::ALL {
        let predictor = models.predictor(strategy, 0)?;
        let r = run_day(strategy, day, predictor.as_ref(), &prices, &cfg)?;
        let r2 = match strategy {
            StrategyKind::Bnn | StrategyKind::Markov => r
                .prediction_score()
                .and_then(|s| s.r_squared)
                .map_or("-".into(), |v| format!("{v:.3}")),
            _ => "-".into(),
        };
        println!("{:<10} {:>8.4} {:>6.3} {:>9} {:>10}", strategy.as_str(), r.total_cost, r.realized_dpi, r.feasible, r2);
    }
    Ok(())
}
