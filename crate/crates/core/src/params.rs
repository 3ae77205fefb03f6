//! The parameter file: every constant of the quantification models, the
//! cultivation lookups, the disease priors and the state schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::schema::StateSchema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantificationParameters {
    /// Disease growth per thermal week with neutral climate, normal crop
    /// structure and no protection.
    pub r_base: f64,
    /// Indexed by climate effect: unfavourable, neutral, favourable.
    pub climate_multipliers: [f64; 3],
    /// Indexed by crop structure: open, normal, dense.
    pub structure_multipliers: [f64; 3],
    pub efficacy_max: f64,
    pub dose_half: f64,
    /// Protectant decay per thermal week.
    pub decay_lambda: f64,
    /// Protection given by the protectant concentration, saturating.
    pub protection_max: f64,
    pub protection_half: f64,
    pub incidence_k: f64,
    /// Yield loss % per unit severity per thermal week.
    pub loss_coeff: f64,
    /// Fraction of leaf area emerging per thermal week, indexed by time
    /// step minus one.
    pub leaf_emergence: Vec<f64>,
}

impl Default for QuantificationParameters {
    fn default() -> Self {
        Self {
            r_base: 2.0,
            climate_multipliers: [0.5, 1.0, 1.6],
            structure_multipliers: [0.8, 1.0, 1.25],
            efficacy_max: 0.95,
            dose_half: 0.15,
            decay_lambda: 0.5,
            protection_max: 0.95,
            protection_half: 0.15,
            incidence_k: 50f64.ln() / 0.02,
            loss_coeff: 0.4,
            leaf_emergence: (1..=20).map(|t| 0.05 + 0.25 * (t - 1) as f64 / 19.0).collect(),
        }
    }
}

/// Lognormal relative noise of each quantification model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseLevels {
    pub incidence: f64,
    pub treatment_effect: f64,
    pub disease_step: f64,
    pub growth_rate: f64,
    pub mean_protection: f64,
    pub protection_level: f64,
    pub concentration: f64,
    pub new_leaf: f64,
    pub yield_loss: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self {
            incidence: 0.25,
            treatment_effect: 0.25,
            disease_step: 0.25,
            growth_rate: 0.25,
            mean_protection: 0.25,
            protection_level: 0.25,
            concentration: 0.25,
            new_leaf: 0.25,
            yield_loss: 0.25,
        }
    }
}

impl NoiseLevels {
    pub fn none() -> Self {
        Self {
            incidence: 0.0,
            treatment_effect: 0.0,
            disease_step: 0.0,
            growth_rate: 0.0,
            mean_protection: 0.0,
            protection_level: 0.0,
            concentration: 0.0,
            new_leaf: 0.0,
            yield_loss: 0.0,
        }
    }

    fn all(&self) -> [f64; 9] {
        [
            self.incidence,
            self.treatment_effect,
            self.disease_step,
            self.growth_rate,
            self.mean_protection,
            self.protection_level,
            self.concentration,
            self.new_leaf,
            self.yield_loss,
        ]
    }
}

/// Maps the static field description to basic protection and crop
/// structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CultivationLookups {
    /// Basic protection from variety resistance: low, medium, high.
    pub resistance_protection: [f64; 3],
    /// Basic protection levels removed by a high nitrogen strategy.
    pub high_nitrogen_protection_shift: usize,
    /// Crop structure index (open, normal, dense) by plant density: low,
    /// normal, high.
    pub density_structure: [usize; 3],
    /// Structure shift towards dense for high nitrogen.
    pub high_nitrogen_structure_shift: i32,
    /// Structure shift towards dense on sandy soil (negative opens it).
    pub sandy_soil_structure_shift: i32,
}

impl Default for CultivationLookups {
    fn default() -> Self {
        Self {
            resistance_protection: [0.1, 0.3, 0.5],
            high_nitrogen_protection_shift: 1,
            density_structure: [0, 1, 2],
            high_nitrogen_structure_shift: 1,
            sandy_soil_structure_shift: -1,
        }
    }
}

/// Distributions over the severity bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiseasePriors {
    /// Severity when the season model starts.
    pub season_start: Vec<f64>,
    /// The single prior used by the blocking transformation in fixed mode,
    /// shaped like the severity of conventionally sprayed fields with the
    /// upper tail widened.
    pub fixed: Vec<f64>,
    /// The untreated season's severity marginal pooled over all twenty time
    /// steps. As one prior for every step it fits none of them, which is
    /// what the structure comparison needs.
    pub mismatched: Vec<f64>,
}

impl Default for DiseasePriors {
    fn default() -> Self {
        Self {
            season_start: vec![0.55, 0.3, 0.1, 0.035, 0.01, 0.004, 0.001],
            fixed: vec![0.3, 0.3, 0.2, 0.12, 0.05, 0.02, 0.01],
            mismatched: vec![0.12, 0.17, 0.15, 0.13, 0.08, 0.12, 0.23],
        }
    }
}

/// Empirical spraying rule used as the comparison baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineRule {
    /// Lowest incidence bin that triggers a treatment.
    pub threshold_bin: usize,
    /// Index into the dose alternatives.
    pub dose_index: usize,
}

impl Default for BaselineRule {
    fn default() -> Self {
        Self { threshold_bin: 2, dose_index: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Seed of the discretization point sets.
    pub seed: u64,
    pub samples_per_cell: usize,
    pub schema: StateSchema,
    pub quantification: QuantificationParameters,
    pub noise: NoiseLevels,
    pub cultivation: CultivationLookups,
    pub priors: DiseasePriors,
    /// Climate effect distribution (unfavourable, neutral, favourable)
    /// indexed by time step minus one.
    pub climate_prior: Vec<[f64; 3]>,
    pub baseline: BaselineRule,
}

impl Default for Params {
    fn default() -> Self {
        let climate_prior = (1..=20)
            .map(|t| {
                let mid = 1.0 - ((t as f64) - 10.0).abs() / 10.0;
                let favourable = 0.2 + 0.15 * mid;
                let unfavourable = 0.3 - 0.1 * mid;
                [unfavourable, 1.0 - favourable - unfavourable, favourable]
            })
            .collect();
        Self {
            seed: 1995,
            samples_per_cell: 1024,
            schema: StateSchema::default(),
            quantification: QuantificationParameters::default(),
            noise: NoiseLevels::default(),
            cultivation: CultivationLookups::default(),
            priors: DiseasePriors::default(),
            climate_prior,
            baseline: BaselineRule::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CoreError::Params(format!("{name} must be positive, got {v}")))
    }
}

fn distribution(name: &str, p: &[f64], len: usize) -> Result<()> {
    if p.len() != len {
        return Err(CoreError::Params(format!("{name} needs {len} entries, got {}", p.len())));
    }
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CoreError::Params(format!("{name} must be a probability distribution")));
    }
    Ok(())
}

impl Params {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Params = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let q = &self.quantification;
        for (name, v) in [
            ("r_base", q.r_base),
            ("dose_half", q.dose_half),
            ("decay_lambda", q.decay_lambda),
            ("protection_half", q.protection_half),
            ("incidence_k", q.incidence_k),
            ("loss_coeff", q.loss_coeff),
        ] {
            positive(name, v)?;
        }
        for &m in q.climate_multipliers.iter().chain(&q.structure_multipliers) {
            positive("multiplier", m)?;
        }
        if !(q.efficacy_max > 0.0 && q.efficacy_max <= 1.0) {
            return Err(CoreError::Params("efficacy_max must lie in (0, 1]".into()));
        }
        if !(q.protection_max > 0.0 && q.protection_max <= 1.0) {
            return Err(CoreError::Params("protection_max must lie in (0, 1]".into()));
        }
        if crate::quantify::incidence_from_severity(q, 2.0) < 0.95 {
            return Err(CoreError::Params("incidence_k must map 2% severity to incidence of at least 0.95".into()));
        }
        let steps = self.schema.max_steps;
        if q.leaf_emergence.len() < steps || q.leaf_emergence.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(CoreError::Params(format!("leaf_emergence needs {steps} fractions in [0, 1]")));
        }
        if self.climate_prior.len() < steps {
            return Err(CoreError::Params(format!("climate_prior needs {steps} rows")));
        }
        for row in &self.climate_prior {
            distribution("climate_prior row", row, 3)?;
        }
        let n = self.schema.cardinality(crate::schema::Node::DiseaseLevelB);
        distribution("priors.season_start", &self.priors.season_start, n)?;
        distribution("priors.fixed", &self.priors.fixed, n)?;
        distribution("priors.mismatched", &self.priors.mismatched, n)?;
        if self.samples_per_cell == 0 {
            return Err(CoreError::Params("samples_per_cell must be at least 1".into()));
        }
        if self.noise.all().iter().any(|&s| !s.is_finite() || s < 0.0) {
            return Err(CoreError::Params("noise levels must be nonnegative".into()));
        }
        let c = &self.cultivation;
        if c.resistance_protection.iter().any(|&x| !(0.0..=1.0).contains(&x)) || c.density_structure.iter().any(|&i| i > 2) {
            return Err(CoreError::Params("cultivation lookups out of range".into()));
        }
        if self.baseline.threshold_bin >= self.schema.incidence_edges.len() - 1 || self.baseline.dose_index >= self.schema.doses.len() {
            return Err(CoreError::Params("baseline rule refers to a missing state".into()));
        }
        Ok(())
    }

    /// Leaf emergence per thermal week at `time_step`.
    pub fn leaf_emergence(&self, time_step: usize) -> f64 {
        self.quantification.leaf_emergence[time_step - 1]
    }

    pub fn climate_prior(&self, time_step: usize) -> [f64; 3] {
        self.climate_prior[time_step - 1]
    }
}
