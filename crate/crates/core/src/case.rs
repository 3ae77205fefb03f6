//! A field case: static description, economics and the dated history of
//! observations and treatments.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cultivation::CultivationFactors;
use crate::economics::Economics;
use crate::error::{CoreError, Result};
use crate::schema::{SeverityBand, StateSchema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryEntry {
    pub date: NaiveDate,
    /// Index of the observed incidence bin.
    pub incidence_bin: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity_band: Option<SeverityBand>,
    /// Dose applied after the observation, as a fraction of the label dose.
    #[serde(default)]
    pub applied_dose: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseInput {
    pub cultivation: CultivationFactors,
    pub economics: Economics,
    pub weeks_to_maturity: usize,
    /// The date from which `weeks_to_maturity` counts.
    pub start_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub cultivation: CultivationFactors,
    pub economics: Economics,
    pub weeks_to_maturity: usize,
    pub start_date: NaiveDate,
    #[serde(default)]
    pub history: Vec<HistoryEntry>,
    /// Incremented on every change.
    #[serde(default)]
    pub version: u64,
}

impl Case {
    pub fn new(id: impl Into<String>, input: CaseInput) -> Result<Self> {
        input.economics.validate()?;
        if input.weeks_to_maturity == 0 {
            return Err(CoreError::Invalid("weeks_to_maturity must be at least 1".into()));
        }
        Ok(Self {
            id: id.into(),
            cultivation: input.cultivation,
            economics: input.economics,
            weeks_to_maturity: input.weeks_to_maturity,
            start_date: input.start_date,
            history: Vec::new(),
            version: 0,
        })
    }

    /// Validates `entry` against the schema and appends it.
    pub fn record_observation(&self, entry: HistoryEntry, schema: &StateSchema) -> Result<Case> {
        validate_entry(&entry, schema)?;
        if entry.date < self.start_date {
            return Err(CoreError::Invalid(format!("observation {} precedes the case start {}", entry.date, self.start_date)));
        }
        if let Some(last) = self.history.last() {
            if entry.date <= last.date {
                return Err(CoreError::OutOfOrder { date: entry.date.to_string(), last: last.date.to_string() });
            }
        }
        let mut next = self.clone();
        next.history.push(entry);
        next.version += 1;
        Ok(next)
    }

    /// Steps of the season model from the case start.
    pub fn total_steps(&self, schema: &StateSchema) -> usize {
        self.weeks_to_maturity.min(schema.max_steps)
    }

    /// Notices about how the case maps onto the model.
    pub fn warnings(&self, schema: &StateSchema) -> Vec<String> {
        if self.weeks_to_maturity > schema.max_steps {
            vec![format!("{} weeks to maturity capped at {} steps", self.weeks_to_maturity, schema.max_steps)]
        } else {
            Vec::new()
        }
    }

    /// Step (thermal weeks left, at least 1) in force on `date`.
    pub fn step_at(&self, date: NaiveDate, schema: &StateSchema) -> usize {
        let total = self.total_steps(schema);
        let days = (date - self.start_date).num_days().max(0) as f64;
        let elapsed = (days / 7.0 * total as f64 / self.weeks_to_maturity as f64).round() as usize;
        total.saturating_sub(elapsed).max(1)
    }

    pub fn latest(&self) -> Result<&HistoryEntry> {
        self.history.last().ok_or_else(|| CoreError::Case("the case has no observations yet".into()))
    }

    /// Steps left at the latest observation.
    pub fn current_step(&self, schema: &StateSchema) -> Result<usize> {
        Ok(self.step_at(self.latest()?.date, schema))
    }
}

pub fn dose_index(schema: &StateSchema, dose: f64) -> Result<usize> {
    schema
        .doses
        .iter()
        .position(|&d| (d - dose).abs() < 1e-9)
        .ok_or_else(|| CoreError::Invalid(format!("dose {dose} is not one of {:?}", schema.doses)))
}

pub fn validate_entry(entry: &HistoryEntry, schema: &StateSchema) -> Result<()> {
    let bins = schema.incidence_edges.len() - 1;
    if entry.incidence_bin >= bins {
        return Err(CoreError::Invalid(format!("incidence_bin must be below {bins}")));
    }
    dose_index(schema, entry.applied_dose)?;
    Ok(())
}
