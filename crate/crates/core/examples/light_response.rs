//! The leaf light-response curve and the unit conversions around it.
//!
//! ```text
//! cargo run --example light_response
//! ```

use helios::light::{etr_from_ppfd, ppfd_from_etr, watts_to_ppfd, Etr, Irradiance, PhotosynthesisParams, Ppfd, DEFAULT_WATTS_TO_PPFD};

fn main() -> helios::Result<()> {
    let params = PhotosynthesisParams::default();
    println!("ETR = {} (1 - exp(-{} PPFD))", params.a, params.k);
    println!();
    println!("{:>8}  {:>8}  {:>8}", "W/m2", "PPFD", "ETR");
    for watts in [0.0, 25.0, 50.0, 99.0, 200.0, 400.0, 800.0] {
        let ppfd = watts_to_ppfd(Irradiance::new(watts)?, DEFAULT_WATTS_TO_PPFD)?;
        let etr = etr_from_ppfd(ppfd, &params);
        println!("{watts:>8.1}  {:>8.1}  {:>8.2}", ppfd.value(), etr.value());
    }

    // the full LED output, 200 µmol m-2 s-1, in electron transport terms
    let led = etr_from_ppfd(Ppfd::new(200.0)?, &params);
    println!("\nLED at 200 PPFD adds {:.2} ETR on a dark leaf", led.value());

    // the same lamp adds less on a sunlit leaf, since the curve saturates
    for sun in [100.0, 500.0, 1000.0] {
        let gain = params.etr(sun + 200.0) - params.etr(sun);
        println!("  with {sun:>6.0} PPFD of sun: +{gain:.2}");
    }

    // how much light a given ETR needs; ETR at or above `a` is unreachable
    for target in [52.08, 100.0, 120.0] {
        let ppfd = ppfd_from_etr(Etr::new(target)?, &params)?;
        println!("ETR {target:>6.2} needs {:>7.1} PPFD", ppfd.value());
    }
    match ppfd_from_etr(Etr::new(params.a)?, &params) {
        Ok(p) => println!("unexpected: {p}"),
        Err(e) => println!("ETR = a: {e}"),
    }
    Ok(())
}
