//! Cost-optimal supplemental LED lighting for greenhouses.
//!
//! The controller keeps a crop's daily photochemical integral (the day's
//! summed electron transport rate) at or above a target while paying as
//! little as possible for electricity under a time-of-use tariff. Each
//! control step it forecasts the rest of the day's sunlight, solves a
//! separable convex program for the remaining LED schedule, and commits the
//! current step only.
//!
//! | module        | contents                                                    |
//! |---------------|-------------------------------------------------------------|
//! | [`light`]     | PPFD / ETR / irradiance types and the light-response curve  |
//! | [`data`]      | CSV ingestion, control-grid resampling, splits, model files |
//! | [`predict`]   | forecaster trait, climatology, Markov chain, perfect oracle |
//! | [`bnn`]       | variational Bayesian neural network forecaster              |
//! | [`optimizer`] | exact water-filling solver for the remaining-day program    |
//! | [`sim`]       | strategy simulation, heuristic, multi-month campaigns       |
//! | [`report`]    | campaign CSV files and cost-increase tables                 |
//! | [`metrics`]   | R² and RMSE                                                 |
//! | [`config`]    | run configuration file                                      |
//! | [`cli`]       | `helios` command-line front end                             |
//! | [`synth`]     | synthetic sunlight for demos and tests                      |
//!
//! See the crate's `examples/` directory for one runnable walkthrough per
//! capability.

pub mod bnn;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod light;
pub mod metrics;
pub mod optimizer;
pub mod predict;
pub mod report;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
