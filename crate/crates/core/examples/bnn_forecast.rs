//! Train the variational network on a noiseless half-sine month and check
//! one-step and whole-day forecasts.
//!
//! ```text
//! cargo run --release --example bnn_forecast -- [epochs]
//! ```

use chrono::NaiveDate;
use helios::bnn::{fit_bnn, predict_horizon, predict_mean, BnnConfig, BnnInput};
use helios::light::{PhotosynthesisParams, Ppfd};
use helios::metrics::score;
use helios::synth::half_sine_month;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> helios::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(300);
    let params = PhotosynthesisParams::default();
    let days = half_sine_month(NaiveDate::from_ymd_opt(2010, 6, 1).unwrap(), 31, 64, |_| 1000.0, &params)?;
    let (train, test) = days.split_at(30);

    let config = BnnConfig {
        epochs,
        learning_rate: 1e-3,
        ..BnnConfig::default()
    };
    let trained = fit_bnn(&config, train)?;
    for (i, loss) in trained.loss_history.iter().enumerate() {
        if i % (epochs / 10).max(1) == 0 || i + 1 == epochs {
            println!("epoch {:>4}  free energy {loss:>12.2}", i + 1);
        }
    }
    let model = trained.model;
    println!("output weight sigma: mean {:.4}", model.sigma().mean().unwrap_or(0.0));

    let s = test[0].ppfd();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let one: Vec<f64> = (0..s.len() - 1)
        .map(|t| predict_mean(&model, BnnInput { sun_ppfd: s[t], step: t as f64 }, 10, &mut rng).value())
        .collect();
    let roll: Vec<f64> = predict_horizon(&model, 0, Ppfd::ZERO, s.len(), 10, &mut rng)
        .iter()
        .map(|p| p.value())
        .collect();
    println!("\none-step R2 {:?}", score(&s[1..], &one)?.r_squared);
    println!("whole-day R2 {:?}", score(&s[1..], &roll)?.r_squared);
    println!("\nstep  actual  one-step  rollout");
    for t in (0..s.len() - 1).step_by(6) {
        println!("{:>4}  {:>6.0}  {:>8.0}  {:>7.0}", t + 2, s[t + 1], one[t], roll[t]);
    }
    Ok(())
}
