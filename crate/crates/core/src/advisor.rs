//! Recommendations and what-if predictions for a case.
//!
//! Decisions are optimized on the blocked model, which needs only the
//! latest observation and the treatment history. Predictions use the true
//! structure with the full observation history, the first treatment fixed
//! and later treatments following the blocked model's policy.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use chrono::Datelike;
use midas_engine::inference::{JunctionTree, Policy, TIE_TOLERANCE};
use midas_engine::{DiscreteVariable, Evidence, Factor, InfluenceDiagram};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, BlockingPriors, DecisionModel, InitialState, PriorTable, SeasonSetup, Structure};
use crate::case::{dose_index, Case};
use crate::chain::{solve_chain, ChainSolution};
use crate::error::{CoreError, Result};
use crate::module::Field;
use crate::params::Params;
use crate::schema::{Node, SeverityBand, StateSchema};
use crate::thermal::{thermal_week_boundaries, ClimateNormals, ThermalCalendar};

/// Which prior over `DiseaseLevelB` the blocking transformation uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorMode {
    /// One prior for every step and field.
    #[default]
    Fixed,
    /// Marginals of the untreated season by time step and basic protection.
    PerContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub steps: usize,
    /// Total junction-tree clique size of the prediction model.
    pub total_clique_size: u128,
    pub solve_time_ms: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub case_id: String,
    pub case_version: u64,
    /// Thermal weeks left, the index of the current step.
    pub step: usize,
    pub optimal_dose: String,
    pub doses: Vec<String>,
    /// Expected utility (currency/ha) of each current treatment, assuming
    /// optimal treatments afterwards.
    pub per_dose_eu: Vec<f64>,
    pub severity_bins: Vec<String>,
    /// Severity next step under the optimal dose.
    pub predicted_severity: Vec<f64>,
    pub advisory_text: String,
    pub model_diagnostics: ModelDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfStep {
    pub step: usize,
    /// `DiseaseLevelB` at the start of the following step.
    pub severity: Vec<f64>,
    pub mean_severity: f64,
    pub yield_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub case_id: String,
    pub dose: String,
    pub horizon: usize,
    pub severity_bins: Vec<String>,
    pub yield_loss_bins: Vec<String>,
    pub steps: Vec<WhatIfStep>,
    pub total_clique_size: u128,
}

/// What the case history says about each step.
#[derive(Debug, Clone, Default)]
struct StepRecord {
    incidence_bin: Option<usize>,
    band: Option<SeverityBand>,
    dose: usize,
}

pub struct Advisor {
    pub params: Params,
    pub prior_mode: PriorMode,
    pub climate: Option<ClimateNormals>,
    context_priors: OnceLock<BTreeMap<usize, PriorTable>>,
}

/// Shorthand for the current decision problem of a case.
struct Current {
    n: usize,
    total: usize,
    field: Field,
    records: BTreeMap<usize, StepRecord>,
    calendar: ThermalCalendar,
}

fn band_restricted(prior: &[f64], schema: &StateSchema, band: SeverityBand) -> Result<Vec<f64>> {
    let masked: Vec<f64> = prior.iter().zip(schema.band_mask(band)).map(|(p, m)| p * m).collect();
    let z: f64 = masked.iter().sum();
    if z <= 0.0 {
        return Err(CoreError::Contradictory);
    }
    Ok(masked.into_iter().map(|p| p / z).collect())
}

fn band_node(k: usize) -> String {
    format!("SeverityBand_{k}")
}

impl Advisor {
    pub fn new(params: Params) -> Self {
        Self { params, prior_mode: PriorMode::Fixed, climate: None, context_priors: OnceLock::new() }
    }

    pub fn with_prior_mode(mut self, mode: PriorMode) -> Self {
        self.prior_mode = mode;
        self
    }

    pub fn with_climate(mut self, normals: ClimateNormals) -> Self {
        self.climate = Some(normals);
        self
    }

    fn schema(&self) -> &StateSchema {
        &self.params.schema
    }

    /// Per-context prior table for a crop structure, computed once.
    pub fn context_priors(&self, crop_structure: usize) -> Result<&PriorTable> {
        let all = self.context_priors.get_or_init(|| {
            (0..3)
                .filter_map(|c| crate::assembly::per_context_priors(&self.params, c).ok().map(|t| (c, t)))
                .collect()
        });
        all.get(&crop_structure).ok_or_else(|| CoreError::Params("per-context priors could not be computed".into()))
    }

    /// The blocking prior at step `k` under the configured mode.
    pub fn prior_at(&self, k: usize, field: Field) -> Result<Vec<f64>> {
        Ok(match self.prior_mode {
            PriorMode::Fixed => self.params.priors.fixed.clone(),
            PriorMode::PerContext => self.context_priors(field.crop_structure)?.get(k, field.basic_protection).to_vec(),
        })
    }

    pub fn blocking_priors(&self, n: usize, field: Field) -> Result<BlockingPriors> {
        Ok(match self.prior_mode {
            PriorMode::Fixed => BlockingPriors::Fixed(self.params.priors.fixed.clone()),
            PriorMode::PerContext => BlockingPriors::from_table(self.context_priors(field.crop_structure)?, n, field.basic_protection),
        })
    }

    /// Step lengths of the whole season from the case start.
    pub fn season_calendar(&self, case: &Case) -> Result<ThermalCalendar> {
        let total = case.total_steps(self.schema());
        match &self.climate {
            Some(normals) => {
                let c = thermal_week_boundaries(case.weeks_to_maturity, normals, case.start_date.ordinal() as usize, self.schema().max_steps)?;
                debug_assert_eq!(c.steps(), total);
                Ok(c)
            }
            None => Ok(ThermalCalendar::uniform(total)),
        }
    }

    fn current(&self, case: &Case) -> Result<Current> {
        let s = self.schema();
        let n = case.current_step(s)?;
        let mut records: BTreeMap<usize, StepRecord> = BTreeMap::new();
        for e in &case.history {
            let r = records.entry(case.step_at(e.date, s)).or_default();
            r.incidence_bin = Some(e.incidence_bin);
            r.band = e.severity_band;
            r.dose = dose_index(s, e.applied_dose)?;
        }
        let full = self.season_calendar(case)?;
        let total = full.steps();
        let mut calendar = full.clone();
        calendar.step_lengths = full.step_lengths[total - n..].to_vec();
        calendar.day_spans = full.day_spans[total - n..].to_vec();
        Ok(Current { n, total, field: Field::from_cultivation(&case.cultivation, &self.params), records, calendar })
    }

    /// `(PrevTreatment_n, PrevDose_n)` from the treatments recorded before
    /// step `n`.
    fn treatment_history(cur: &Current) -> (usize, usize) {
        let last = cur.records.range(cur.n + 1..).find(|(_, r)| r.dose > 0);
        match last {
            Some((&j, r)) => ((j - cur.n).clamp(1, 3), r.dose),
            None => (0, 0),
        }
    }

    /// The blocked model of the current decision and the evidence to enter.
    pub fn blocked_model(&self, case: &Case) -> Result<(DecisionModel, Evidence)> {
        let cur = self.current(case)?;
        self.blocked_for(case, &cur)
    }

    fn blocked_for(&self, case: &Case, cur: &Current) -> Result<(DecisionModel, Evidence)> {
        let s = self.schema();
        let latest = &cur.records[&cur.n];
        let mut prior = self.prior_at(cur.n, cur.field)?;
        let mut priors = self.blocking_priors(cur.n, cur.field)?;
        if let Some(band) = latest.band {
            prior = band_restricted(&prior, s, band)?;
            priors = priors.with_step(cur.n, prior.clone(), cur.n);
        }
        let (pt, pd) = Self::treatment_history(cur);
        let setup = SeasonSetup {
            field: cur.field,
            economics: case.economics,
            calendar: cur.calendar.clone(),
            initial: InitialState { dlb: prior, prev_treatment: pt, prev_dose: pd },
        };
        let model = assemble(&setup, &self.params, Structure::Blocked, &priors)?;
        let mut evidence = Evidence::new();
        evidence.set(&s.var(Node::DiseaseObserv, cur.n), latest.incidence_bin.expect("latest entry is an observation"))?;
        Ok((model, evidence))
    }

    pub fn solve(&self, case: &Case) -> Result<(DecisionModel, ChainSolution)> {
        let (model, evidence) = self.blocked_model(case)?;
        let solution = solve_chain(&model, &evidence)?;
        Ok((model, solution))
    }

    pub fn recommend(&self, case: &Case) -> Result<Recommendation> {
        let start = Instant::now();
        let cur = self.current(case)?;
        let (model, evidence) = self.blocked_for(case, &cur)?;
        let solution = solve_chain(&model, &evidence)?;
        let best = solution.result.best_alternative(TIE_TOLERANCE).expect("at least one dose");
        let prediction = self.predict(case, &cur, best, 1, &solution.result.policy)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let s = self.schema();
        let labels = s.labels(Node::Treatment);
        let per_dose_eu = solution.result.per_alternative.clone();
        Ok(Recommendation {
            case_id: case.id.clone(),
            case_version: case.version,
            step: cur.n,
            optimal_dose: labels[best].clone(),
            advisory_text: advisory_text(s, cur.n, best, &per_dose_eu, &prediction.steps[0]),
            doses: labels,
            per_dose_eu,
            severity_bins: s.labels(Node::DiseaseLevelB),
            predicted_severity: prediction.steps[0].severity.clone(),
            model_diagnostics: ModelDiagnostics {
                steps: cur.total,
                total_clique_size: prediction.total_clique_size,
                solve_time_ms: elapsed,
                warnings: case.warnings(s).into_iter().chain(model.diagnostics.iter().cloned()).collect(),
            },
        })
    }

    /// Predicted severity and yield loss for `horizon` steps from now with
    /// the current treatment fixed to `dose` (an index into the doses).
    pub fn what_if(&self, case: &Case, dose: usize, horizon: usize) -> Result<WhatIf> {
        let s = self.schema();
        if dose >= s.doses.len() {
            return Err(CoreError::Invalid(format!("dose index {dose} out of range")));
        }
        let cur = self.current(case)?;
        let (model, evidence) = self.blocked_for(case, &cur)?;
        let solution = solve_chain(&model, &evidence)?;
        self.predict(case, &cur, dose, horizon, &solution.result.policy)
    }

    fn predict(&self, case: &Case, cur: &Current, dose: usize, horizon: usize, policy: &Policy) -> Result<WhatIf> {
        let s = self.schema();
        if horizon == 0 {
            return Err(CoreError::Invalid("horizon must be at least 1".into()));
        }
        let horizon = horizon.min(cur.n);
        let (bn, evidence) = self.prediction_network(case, cur, dose, policy)?;
        let jt = JunctionTree::compile(&bn.without_utilities()?)?;
        let post = jt.propagate(&evidence)?;
        let mids = s.severity_midpoints();
        let steps = (0..horizon)
            .map(|i| {
                let k = cur.n - i;
                let next = post.marginal(&Node::DiseaseLevelB.at(k - 1)).expect("next severity").values().to_vec();
                let yl = post.marginal(&Node::YieldLossPct.at(k)).expect("yield loss").values().to_vec();
                WhatIfStep { step: k, mean_severity: next.iter().zip(&mids).map(|(p, m)| p * m).sum(), severity: next, yield_loss: yl }
            })
            .collect();
        Ok(WhatIf {
            case_id: case.id.clone(),
            dose: s.labels(Node::Treatment)[dose].clone(),
            horizon,
            severity_bins: s.labels(Node::DiseaseLevelB),
            yield_loss_bins: s.labels(Node::YieldLossPct),
            steps,
            total_clique_size: jt.total_clique_size(),
        })
    }

    /// The true-structure season model from the case start with every
    /// treatment turned into a chance node, and the observation history as
    /// evidence.
    fn prediction_network(&self, case: &Case, cur: &Current, dose: usize, policy: &Policy) -> Result<(InfluenceDiagram, Evidence)> {
        let s = self.schema();
        let mut calendar = self.season_calendar(case)?;
        calendar.warnings.clear();
        let setup = SeasonSetup {
            field: cur.field,
            economics: case.economics,
            calendar,
            initial: InitialState::untreated(self.params.priors.season_start.clone()),
        };
        let model = assemble(&setup, &self.params, Structure::True, &BlockingPriors::Fixed(self.params.priors.fixed.clone()))?;
        let records = &cur.records;
        let n = cur.n;
        let mut bn = model.id.with_decisions_as_chance(|id, d| {
            let name = id.name(d);
            let k: usize = crate::assembly::step_of(name).expect("treatment name");
            let var = id.var_of(d).expect("decision variable").clone();
            let choice = if k > n {
                records.get(&k).map_or(0, |r| r.dose)
            } else if k == n {
                dose
            } else {
                return policy.rule(name).expect("policy covers later steps").as_cpt().map_err(Into::into);
            };
            let mut v = vec![0.0; var.cardinality()];
            v[choice] = 1.0;
            Factor::new(vec![var], v).map_err(Into::into)
        })?;
        let mut evidence = Evidence::new();
        for (&k, r) in records {
            if let Some(bin) = r.incidence_bin {
                evidence.set(&s.var(Node::DiseaseObserv, k), bin)?;
            }
            if let Some(band) = r.band {
                let labels: Vec<&str> = SeverityBand::ALL.iter().map(|b| b.label()).collect();
                let var = DiscreteVariable::shared(band_node(k), &labels)?;
                let dlb = s.var(Node::DiseaseLevelB, k);
                let mut values = Vec::new();
                for m in s.severity_midpoints() {
                    let b = SeverityBand::of(m);
                    values.extend(SeverityBand::ALL.iter().map(|x| if *x == b { 1.0 } else { 0.0 }));
                }
                bn = bn.with_chance(Factor::new(vec![dlb, var.clone()], values)?)?;
                evidence.set(&var, SeverityBand::ALL.iter().position(|x| *x == band).expect("known band"))?;
            }
        }
        Ok((bn, evidence))
    }

    /// The empirical rule: treat with the configured dose once the latest
    /// incidence reaches the threshold bin.
    pub fn threshold_baseline(&self, case: &Case) -> Result<usize> {
        Ok(threshold_dose(&self.params, case.latest()?.incidence_bin))
    }

    /// Expected gain from learning the coarse severity band before the
    /// current decision, given the latest observation.
    pub fn band_value_of_information(&self, case: &Case) -> Result<f64> {
        let mut plain = case.clone();
        if let Some(last) = plain.history.last_mut() {
            last.severity_band = None;
        }
        let cur = self.current(&plain)?;
        let (model, evidence) = self.blocked_for(&plain, &cur)?;
        let base = solve_chain(&model, &evidence)?.result.meu;
        let s = self.schema();
        let prior = self.prior_at(cur.n, cur.field)?;
        let obs = crate::assembly::observation_matrix(model.module(cur.n));
        let bin = cur.records[&cur.n].incidence_bin.expect("observation");
        let mids = s.severity_midpoints();
        let mut informed = 0.0;
        for band in SeverityBand::ALL {
            let p: f64 = (0..prior.len()).filter(|&b| SeverityBand::of(mids[b]) == band).map(|b| prior[b] * obs[b][bin]).sum();
            if p <= 0.0 {
                continue;
            }
            let mut with_band = plain.clone();
            with_band.history.last_mut().expect("observation").severity_band = Some(band);
            let (m, e) = self.blocked_for(&with_band, &cur)?;
            informed += p * solve_chain(&m, &e)?.result.meu;
        }
        let z: f64 = (0..prior.len()).map(|b| prior[b] * obs[b][bin]).sum();
        Ok(informed / z - base)
    }
}

pub fn threshold_dose(params: &Params, incidence_bin: usize) -> usize {
    if incidence_bin >= params.baseline.threshold_bin {
        params.baseline.dose_index
    } else {
        0
    }
}

fn advisory_text(s: &StateSchema, n: usize, best: usize, eu: &[f64], next: &WhatIfStep) -> String {
    let gain = eu[best] - eu[0];
    let action = if best == 0 {
        "No treatment this week: wait and reconsider after the next field observation.".to_string()
    } else {
        format!("Treat now with {} of the label dose; expected benefit over not treating {gain:.2}/ha.", s.doses[best])
    };
    format!(
        "{action} {n} thermal week(s) to maturity. Expected season value {:.2}/ha. Expected severity next week {:.2}% of leaf area.",
        eu[best], next.mean_severity
    )
}
