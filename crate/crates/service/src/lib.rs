//! Case persistence, the HTTP API and the operations shared with the
//! command-line interface.

pub mod api;
pub mod store;

use std::path::PathBuf;

use midas_core::advisor::{Advisor, Recommendation, WhatIf};
use midas_core::case::{dose_index, Case, CaseInput, HistoryEntry};
use midas_core::CoreError;
use serde::{Deserialize, Serialize};

pub use store::Store;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown case {0}")]
    NotFound(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("store: {0}")]
    Store(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ServiceError>;

/// A freshly created case and the notices about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub case: Case,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    /// Fraction of the label dose.
    pub dose: f64,
    #[serde(default = "one")]
    pub horizon: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub case_id: String,
    pub dose: String,
}

/// The advisor together with the case store.
pub struct Service {
    pub store: Store,
    pub advisor: Advisor,
}

impl Service {
    pub fn new(store_dir: impl Into<PathBuf>, advisor: Advisor) -> Result<Self> {
        Ok(Self { store: Store::open(store_dir)?, advisor })
    }

    pub fn create(&self, input: CaseInput) -> Result<Created> {
        let case = self.store.create(input)?;
        let warnings = case.warnings(&self.advisor.params.schema);
        Ok(Created { case, warnings })
    }

    pub fn get(&self, id: &str) -> Result<Case> {
        self.store.with_case(id, |case| Ok(case.clone()))
    }

    pub fn observe(&self, id: &str, entry: HistoryEntry) -> Result<Case> {
        self.store.append_observation(id, entry, &self.advisor.params.schema)
    }

    pub fn recommend(&self, id: &str) -> Result<Recommendation> {
        self.store.with_case(id, |case| Ok(self.advisor.recommend(case)?))
    }

    pub fn what_if(&self, id: &str, request: &WhatIfRequest) -> Result<WhatIf> {
        let dose = dose_index(&self.advisor.params.schema, request.dose)?;
        self.store.with_case(id, |case| Ok(self.advisor.what_if(case, dose, request.horizon)?))
    }

    pub fn baseline(&self, id: &str) -> Result<Baseline> {
        self.store.with_case(id, |case| {
            let dose = self.advisor.threshold_baseline(case)?;
            Ok(Baseline { case_id: case.id.clone(), dose: self.advisor.params.schema.labels(midas_core::schema::Node::Treatment)[dose].clone() })
        })
    }
}
