//! Cheapest LED schedule for one day with known sunlight.
//!
//! Prices follow the default time-of-use tariff and sunlight is a cloudless
//! winter half-sine. The solver lights the cheap morning and evening hours
//! first and leaves the afternoon peak dark where it can.
//!
//! ```text
//! cargo run --example solve_horizon
//! ```

use helios::data::{ControlGrid, PriceSchedule};
use helios::light::PhotosynthesisParams;
use helios::optimizer::{cost_conversion_factor, led_ppfd, remaining_budget, schedule_cost, solve_horizon, HorizonProblem, DEFAULT_LED_EFFICACY};
use helios::synth::half_sine;

fn main() -> helios::Result<()> {
    let params = PhotosynthesisParams::default();
    let grid = ControlGrid::default();
    let prices = PriceSchedule::default_time_of_use(&grid);
    let sun_ppfd = half_sine(350.0, grid.steps(), 12, 48);
    let sun_etr: Vec<f64> = sun_ppfd.iter().map(|p| params.etr(*p)).collect();

    let budget = remaining_budget(3.0, grid.step_seconds as f64, &[]);
    println!("daily requirement: {budget:.1} ETR-steps, sun supplies {:.1}", sun_etr.iter().sum::<f64>());

    let problem = HorizonProblem::new(0, prices.cents_per_kwh.clone(), sun_etr.clone(), sun_ppfd.clone(), params, 51.47, budget);
    let schedule = solve_horizon(&problem)?;
    println!(
        "feasible: {}, multiplier {:.4}, {} bisections",
        schedule.feasible, schedule.multiplier, schedule.diagnostics.bisections
    );

    println!("\nstep  clock  price   sun PPFD  LED ETR  LED PPFD");
    for (t, x) in schedule.led_etr.iter().enumerate() {
        if t % 4 != 0 {
            continue;
        }
        let clock = grid.step_start_seconds(t) / 60;
        let flux = led_ppfd(*x, sun_etr[t], sun_ppfd[t], &params)?;
        println!(
            "{:>4}  {:02}:{:02}  {:>5.1}  {:>9.1}  {:>7.2}  {:>8.1}",
            t + 1,
            clock / 60,
            clock % 60,
            prices.cents_per_kwh[t],
            sun_ppfd[t],
            x,
            flux
        );
    }

    let l = cost_conversion_factor(grid.step_seconds as f64, DEFAULT_LED_EFFICACY);
    println!("\ncost: {:.4} cent/m2 for the day", schedule_cost(&schedule, &problem, l)?);
    Ok(())
}
