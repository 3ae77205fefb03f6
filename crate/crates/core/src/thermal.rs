//! Thermal time and the segmentation of the remaining season into steps.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const BASE_TEMPERATURE: f64 = 5.0;

/// Accumulated daily mean temperature above `base`.
pub fn degree_days(daily_mean_temps: &[f64], base: f64) -> f64 {
    daily_mean_temps.iter().map(|t| (t - base).max(0.0)).sum()
}

/// Daily mean temperature normals by day of year.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimateNormals {
    temps: Vec<f64>,
}

#[derive(Deserialize)]
struct NormalsRow {
    day_of_year: usize,
    mean_temp_c: f64,
}

impl ClimateNormals {
    pub fn new(temps: Vec<f64>) -> Result<Self> {
        if !(365..=366).contains(&temps.len()) {
            return Err(CoreError::Climate(format!("expected 365 or 366 days, got {}", temps.len())));
        }
        if temps.iter().any(|t| !t.is_finite()) {
            return Err(CoreError::Climate("temperatures must be finite".into()));
        }
        Ok(Self { temps })
    }

    pub fn constant(temp: f64) -> Self {
        Self { temps: vec![temp; 365] }
    }

    /// Parses CSV with header `day_of_year,mean_temp_c`, one row per day in
    /// order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut temps = Vec::new();
        for (i, row) in rdr.deserialize::<NormalsRow>().enumerate() {
            let row = row?;
            if row.day_of_year != i + 1 {
                return Err(CoreError::Climate(format!("row {} has day_of_year {}", i + 1, row.day_of_year)));
            }
            temps.push(row.mean_temp_c);
        }
        Self::new(temps)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Daily temperatures of `days` days from `start_day` (1-based),
    /// wrapping at the year end.
    pub fn window(&self, start_day: usize, days: usize) -> Vec<f64> {
        let n = self.temps.len();
        (0..days).map(|i| self.temps[(start_day.max(1) - 1 + i) % n]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalCalendar {
    /// Step lengths in thermal weeks, for steps n down to 1.
    pub step_lengths: Vec<f64>,
    pub degree_days_per_week: f64,
    pub weeks_to_maturity: usize,
    /// Chronological days covered by each step, n down to 1.
    pub day_spans: Vec<usize>,
    pub warnings: Vec<String>,
}

impl ThermalCalendar {
    /// A calendar of `steps` unit-length steps.
    pub fn uniform(steps: usize) -> Self {
        Self {
            step_lengths: vec![1.0; steps],
            degree_days_per_week: 0.0,
            weeks_to_maturity: steps,
            day_spans: vec![7; steps],
            warnings: Vec::new(),
        }
    }

    pub fn steps(&self) -> usize {
        self.step_lengths.len()
    }

    /// Length of step `k`.
    pub fn delta_tau(&self, k: usize) -> f64 {
        self.step_lengths[self.steps() - k]
    }

    /// Replaces the length of the current (first) step with a forecast.
    pub fn with_forecast(mut self, forecast_degree_days: f64) -> Result<Self> {
        if !(forecast_degree_days > 0.0) || self.degree_days_per_week <= 0.0 {
            return Err(CoreError::Invalid("forecast needs positive degree-days and a calibrated calendar".into()));
        }
        self.step_lengths[0] = forecast_degree_days / self.degree_days_per_week;
        Ok(self)
    }
}

/// Splits the degree-days expected over the next `weeks_to_maturity` weeks
/// into equal thermal steps. One thermal week is the remaining total divided
/// by `weeks_to_maturity`, so each step is one thermal week unless the
/// number of steps had to be capped at `max_steps`.
pub fn thermal_week_boundaries(
    weeks_to_maturity: usize,
    normals: &ClimateNormals,
    start_day: usize,
    max_steps: usize,
) -> Result<ThermalCalendar> {
    if weeks_to_maturity == 0 {
        return Err(CoreError::Invalid("weeks_to_maturity must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let steps = if weeks_to_maturity > max_steps {
        let w = format!("{weeks_to_maturity} weeks to maturity capped at {max_steps} steps");
        log::warn!("{w}");
        warnings.push(w);
        max_steps
    } else {
        weeks_to_maturity
    };
    let temps = normals.window(start_day, 7 * weeks_to_maturity);
    let total = degree_days(&temps, BASE_TEMPERATURE);
    if !(total > 0.0) {
        return Err(CoreError::Climate("no degree-days accumulate before maturity".into()));
    }
    let per_week = total / weeks_to_maturity as f64;
    let per_step = total / steps as f64;
    let mut day_spans = Vec::with_capacity(steps);
    let (mut cum, mut day, mut start) = (0.0, 0usize, 0usize);
    for i in 1..=steps {
        let target = per_step * i as f64 * (1.0 - 1e-12);
        while day < temps.len() && cum < target {
            cum += (temps[day] - BASE_TEMPERATURE).max(0.0);
            day += 1;
        }
        if i == steps {
            day = temps.len();
        }
        day_spans.push(day - start);
        start = day;
    }
    Ok(ThermalCalendar {
        step_lengths: vec![per_step / per_week; steps],
        degree_days_per_week: per_week,
        weeks_to_maturity,
        day_spans,
        warnings,
    })
}
