//! Ingestion of irradiance and tariff files, resampling onto the control
//! grid, year-based splits and model persistence.

mod irradiance;
mod prices;
mod split;
mod store;

pub use irradiance::{
    build_all_days, build_step_series, load_irradiance_csv, read_irradiance_csv, record_dates, ControlGrid,
    IrradianceRecord, StepSample, StepSeries,
};
pub use prices::{
    default_hourly_prices, load_price_csv, read_price_csv, PriceSchedule, DEFAULT_OFF_PEAK, DEFAULT_ON_PEAK,
    DEFAULT_PEAK_HOURS,
};
pub use split::{split_by_years, DatasetSplit};
pub use store::{load_bnn, load_markov, load_model, save_model, to_canonical_string, StoredModel, MODEL_FORMAT, MODEL_VERSION};
