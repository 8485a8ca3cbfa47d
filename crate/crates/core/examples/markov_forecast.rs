//! Fit the binned Markov chain on synthetic winters and forecast a test day.
//!
//! ```text
//! cargo run --example markov_forecast
//! ```

use chrono::NaiveDate;
use helios::data::{split_by_years, ControlGrid};
use helios::light::PhotosynthesisParams;
use helios::metrics::score;
use helios::predict::{fit_markov, markov_predict, DEFAULT_ALPHA, DEFAULT_BINS};
use helios::synth::{generate_series, SiteModel};

fn main() -> helios::Result<()> {
    let params = PhotosynthesisParams::default();
    let grid = ControlGrid::default();
    let site = SiteModel {
        sample_minutes: 15,
        ..SiteModel::default()
    };
    let days = generate_series(
        &site,
        NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2004, 1, 31).unwrap(),
        7,
        &grid,
        &params,
    )?;
    let split = split_by_years(&days, &[2001, 2002, 2003], &[2004], 1)?;
    let model = fit_markov(&split.train, DEFAULT_BINS, DEFAULT_ALPHA)?;
    println!("{} training days, bin edges {:?}", split.train.len(), model.bin_edges.iter().map(|e| e.round()).collect::<Vec<_>>());

    // smoothing leaks a little mass into high bins; where later steps never
    // saw those bins the rows self-transition, so the tail of a forecast can
    // sit well above a dark evening
    let day = &split.test[10];
    let actual = day.ppfd();
    let from = 24;
    let forecast = markov_predict(&model, from, day.steps[from].sun_ppfd, day.len() - from - 1)?;
    println!("\n{} from step {} (PPFD {:.0}):", day.date, from + 1, actual[from]);
    println!("step  actual  forecast");
    for (j, p) in forecast.ppfd.iter().enumerate().step_by(3) {
        let t = from + 1 + j;
        println!("{:>4}  {:>6.0}  {:>8.0}", t + 1, actual[t], p.value());
    }
    let predicted: Vec<f64> = forecast.ppfd.iter().map(|p| p.value()).collect();
    let s = score(&actual[from + 1..], &predicted)?;
    println!("\nrest-of-day RMSE {:.1} PPFD, R2 {:?}", s.rmse_abs, s.r_squared);
    Ok(())
}
