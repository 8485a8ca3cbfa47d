use std::collections::BTreeSet;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::StepSeries;
use crate::error::{Error, Result};

/// Training and test days of one calendar month, separated by year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub month: u32,
    pub train: Vec<StepSeries>,
    pub test: Vec<StepSeries>,
}

pub fn split_by_years(series: &[StepSeries], train_years: &[i32], test_years: &[i32], month: u32) -> Result<DatasetSplit> {
    if !(1..=12).contains(&month) {
        return Err(Error::Validation(format!("month must be 1-12, got {month}")));
    }
    if train_years.is_empty() || test_years.is_empty() {
        return Err(Error::Validation("train and test year sets must both be nonempty".into()));
    }
    let train: BTreeSet<i32> = train_years.iter().copied().collect();
    let test: BTreeSet<i32> = test_years.iter().copied().collect();
    let overlap: Vec<i32> = train.intersection(&test).copied().collect();
    if !overlap.is_empty() {
        return Err(Error::Validation(format!("years {overlap:?} are in both the train and test sets")));
    }
    let pick = |years: &BTreeSet<i32>| {
        series
            .iter()
            .filter(|d| d.month == month && years.contains(&d.date.year()))
            .cloned()
            .collect::<Vec<_>>()
    };
    Ok(DatasetSplit {
        month,
        train: pick(&train),
        test: pick(&test),
    })
}
