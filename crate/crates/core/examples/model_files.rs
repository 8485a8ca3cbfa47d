//! Save and reload trained models in the `.helios` format.
//!
//! ```text
//! cargo run --example model_files
//! ```

use chrono::NaiveDate;
use helios::bnn::{fit_bnn, BnnConfig};
use helios::data::{load_bnn, load_model, save_model, StoredModel};
use helios::light::PhotosynthesisParams;
use helios::predict::fit_markov;
use helios::synth::{half_sine_month, random_peaks};

fn main() -> helios::Result<()> {
    let params = PhotosynthesisParams::default();
    let peaks = random_peaks(20, 400.0, 1200.0, 2);
    let days = half_sine_month(NaiveDate::from_ymd_opt(2008, 4, 1).unwrap(), 20, 64, |i| peaks[i], &params)?;
    let dir = std::env::temp_dir().join("helios-model-files");

    let markov = fit_markov(&days, 8, 1.0)?;
    let path = dir.join("markov-m04.helios");
    save_model(&StoredModel::Markov(markov.clone()), &path)?;
    let text = std::fs::read_to_string(&path).map_err(|e| helios::Error::io(&path, e))?;
    println!("{} ({} bytes):", path.display(), text.len());
    for line in text.lines().take(5) {
        println!("  {}", &line[..line.len().min(90)]);
    }
    assert_eq!(load_model(&path)?, StoredModel::Markov(markov));

    let config = BnnConfig {
        hidden_sizes: [16, 16],
        epochs: 5,
        ..BnnConfig::default()
    };
    let bnn = fit_bnn(&config, &days)?.model;
    let path = dir.join("bnn-m04.helios");
    save_model(&StoredModel::Bnn(bnn.clone()), &path)?;
    println!("\n{} reloads identically: {}", path.display(), load_bnn(&path)? == bnn);

    // a single edited byte in the payload is caught by the checksum
    let tampered = text.replacen("\"alpha\":1.0", "\"alpha\":2.0", 1);
    let bad = dir.join("tampered.helios");
    std::fs::write(&bad, tampered).map_err(|e| helios::Error::io(&bad, e))?;
    match load_model(&bad) {
        Ok(_) => println!("tampered file loaded (unexpected)"),
        Err(e) => println!("tampered file rejected: {e}"),
    }
    Ok(())
}
