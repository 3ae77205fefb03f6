//! Exact belief tracking over `DiseaseLevelB` in the true structure.
//!
//! Given the treatment history, the true season model is a hidden Markov
//! model in the severity: each step marginalizes to an observation matrix,
//! a severity transition per treatment context, and an expected reward per
//! severity and dose. These step tables give the true one-step prediction
//! and the exact expected utility of the current decision.

use std::sync::OnceLock;

use midas_engine::inference::{sum_product, TIE_TOLERANCE};
use midas_engine::Table;

use crate::assembly::{observation_matrix, propagate_row, severity_transition, DecisionModel, Structure};
use crate::error::{CoreError, Result};
use crate::params::Params;
use crate::schema::{cost_node, loss_node, Node, SeverityBand, StateSchema};

/// What is known about one past step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepRecord {
    pub observed: Option<usize>,
    pub band: Option<SeverityBand>,
    pub prev_treatment: usize,
    pub prev_dose: usize,
    pub dose: usize,
}

pub struct StepTables {
    pub k: usize,
    /// `P(DiseaseObserv_k | DiseaseLevelB_k)`.
    pub obs: Vec<Vec<f64>>,
    /// Expected utility of step `k` by severity and dose.
    pub reward: Vec<Vec<f64>>,
    transitions: Vec<OnceLock<Vec<Vec<f64>>>>,
}

/// All steps of one season model, `n` down to 1.
pub struct SeasonTables {
    pub n: usize,
    /// Distribution of `DiseaseLevelB_n`.
    pub initial: Vec<f64>,
    pub params: Params,
    steps: Vec<StepTables>,
    model: DecisionModel,
    npd: usize,
    nd: usize,
    /// `(PrevTreatment_{k-1}, PrevDose_{k-1})` by `(pt, pd, dose)`.
    history: Vec<(usize, usize)>,
}

/// Index of `(DiseaseObserv, PrevTreatment, PrevDose)` in the blocked
/// model's value vectors.
pub fn state_index(schema: &StateSchema, observed: usize, pt: usize, pd: usize) -> usize {
    let (nt, nd) = (schema.cardinality(Node::PrevTreatment), schema.cardinality(Node::PrevDose));
    (observed * nt + pt) * nd + pd
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let z: f64 = v.iter().sum();
    if !(z > 0.0) {
        return Err(CoreError::Contradictory);
    }
    v.iter_mut().for_each(|p| *p /= z);
    Ok(())
}

impl SeasonTables {
    pub fn new(model: DecisionModel, params: &Params) -> Result<Self> {
        if model.structure != Structure::True {
            return Err(CoreError::Invalid("step tables need the true structure".into()));
        }
        let s = &params.schema;
        let (nt, npd, nd) = (s.cardinality(Node::PrevTreatment), s.cardinality(Node::PrevDose), s.cardinality(Node::Treatment));
        let id = &model.id;
        let mut steps = Vec::with_capacity(model.n);
        for k in (1..=model.n).rev() {
            let module = model.module(k);
            let (b, t) = (Node::DiseaseLevelB.at(k), Node::Treatment.at(k));
            let utility = |name: &str| -> Result<Table> { Ok(id.utility(id.id(name)?).expect("utility node").clone()) };
            let tables = vec![
                module.cpt_of(Node::DiseaseLevelA).expect("effect").table().clone(),
                module.cpt_of(Node::YieldLossPct).expect("yield loss").table().clone(),
                utility(&loss_node(k))?,
            ];
            let loss = sum_product(tables, &[&b, &t])?;
            let cost = utility(&cost_node(k))?;
            let reward = loss.add(&cost)?.reordered(&[&b, &t])?;
            let nb = s.cardinality(Node::DiseaseLevelB);
            steps.push(StepTables {
                k,
                obs: observation_matrix(module),
                reward: (0..nb).map(|i| (0..nd).map(|d| reward.get(&[i, d])).collect()).collect(),
                transitions: (0..nt * npd * nd).map(|_| OnceLock::new()).collect(),
            });
        }
        let m = model.module(model.n);
        let (pt_next, pd_next) = (m.cpt(&Node::PrevTreatment.at(model.n - 1)), m.cpt(&Node::PrevDose.at(model.n - 1)));
        let argmax = |f: &midas_engine::Factor, a: usize, d: usize| -> usize {
            let card = f.scope()[2].cardinality();
            (0..card).find(|&j| f.table().get(&[a, d, j]) > 0.5).expect("deterministic history")
        };
        let history = (0..nt)
            .flat_map(|pt| (0..npd).flat_map(move |pd| (0..nd).map(move |d| (pt, pd, d))))
            .map(|(pt, pd, d)| (argmax(pt_next.expect("history CPT"), pt, d), argmax(pd_next.expect("history CPT"), pd, d)))
            .collect();
        let initial = id.cpt(id.id(&Node::DiseaseLevelB.at(model.n))?).expect("severity prior").values().to_vec();
        Ok(Self { n: model.n, initial, params: params.clone(), steps, model, npd, nd, history })
    }

    /// Belief over `DiseaseLevelB_k` before the observation at `k`, after
    /// the observations and doses of steps `n..k+1`.
    pub fn belief_before(&self, k: usize, mut seen: impl FnMut(usize) -> StepRecord) -> Result<Vec<f64>> {
        let mut b = self.initial.clone();
        for j in (k + 1..=self.n).rev() {
            let r = seen(j);
            self.observe(j, &mut b, r.observed, r.band)?;
            b = self.predict(j, &b, r.prev_treatment, r.prev_dose, r.dose)?;
        }
        Ok(b)
    }

    pub fn step(&self, k: usize) -> &StepTables {
        &self.steps[self.n - k]
    }

    /// `M[b][b']` at step `k` for a treatment context.
    pub fn transition(&self, k: usize, pt: usize, pd: usize, dose: usize) -> Result<&Vec<Vec<f64>>> {
        let slot = &self.step(k).transitions[(pt * self.npd + pd) * self.nd + dose];
        if let Some(m) = slot.get() {
            return Ok(m);
        }
        let m = severity_transition(self.model.module(k), &self.params, pt, pd, dose)?;
        Ok(slot.get_or_init(|| m))
    }

    pub fn next_history(&self, pt: usize, pd: usize, dose: usize) -> (usize, usize) {
        self.history[(pt * self.npd + pd) * self.nd + dose]
    }

    /// Conditions a belief over `DiseaseLevelB_k` on what was seen at `k`.
    pub fn observe(&self, k: usize, belief: &mut [f64], observed: Option<usize>, band: Option<SeverityBand>) -> Result<()> {
        if let Some(o) = observed {
            for (p, row) in belief.iter_mut().zip(&self.step(k).obs) {
                *p *= row[o];
            }
        }
        if let Some(band) = band {
            for (p, m) in belief.iter_mut().zip(self.params.schema.band_mask(band)) {
                *p *= m;
            }
        }
        normalize(belief)
    }

    /// Belief over `DiseaseLevelB_{k-1}` from the conditioned belief at `k`.
    pub fn predict(&self, k: usize, belief: &[f64], pt: usize, pd: usize, dose: usize) -> Result<Vec<f64>> {
        Ok(propagate_row(belief, self.transition(k, pt, pd, dose)?))
    }

    /// Expected utility of each dose at step `k` for a conditioned belief,
    /// continuing with `next_value` (the blocked model's value function of
    /// step `k - 1`, indexed by [`state_index`]) when `k > 1`.
    pub fn q_values(&self, k: usize, belief: &[f64], pt: usize, pd: usize, next_value: Option<&[f64]>) -> Result<Vec<f64>> {
        let st = self.step(k);
        let s = &self.params.schema;
        (0..self.nd)
            .map(|d| {
                let mut q: f64 = belief.iter().zip(&st.reward).map(|(p, r)| p * r[d]).sum();
                if let (Some(v), true) = (next_value, k > 1) {
                    let next = self.predict(k, belief, pt, pd, d)?;
                    let (pt1, pd1) = self.next_history(pt, pd, d);
                    let obs = &self.step(k - 1).obs;
                    for (pb, row) in next.iter().zip(obs) {
                        for (o, po) in row.iter().enumerate() {
                            q += pb * po * v[state_index(s, o, pt1, pd1)];
                        }
                    }
                }
                Ok(q)
            })
            .collect()
    }
}

/// Lowest-index argmax under the engine's tie tolerance.
pub fn best_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + TIE_TOLERANCE * values[best].abs().max(v.abs()) {
            best = i;
        }
    }
    best
}
