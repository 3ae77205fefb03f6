//! Chaining time-step modules into a season decision model, and the
//! information-blocking transformation.
//!
//! In the true structure the unobserved severity `DiseaseLevelB` carries
//! the whole past into every later step, so the optimal treatment at step
//! `k` depends on the entire observation history. The blocked structure
//! cuts the arc `DiseaseLevelB_k -> DiseaseLevelA_k` and lets the treatment
//! effect depend on the observation `DiseaseObserv_k` instead, summing
//! `DiseaseLevelB_k` out against a prior. The state of the season then
//! collapses to what the farmer knows at step `k`: the latest observation
//! and the time and dose of the previous treatment.

use std::collections::{BTreeMap, BTreeSet};

use midas_engine::graph::Dag;
use midas_engine::inference::sum_product;
use midas_engine::{DiagramBuilder, Factor, InfluenceDiagram, NodeKind, Table, Var};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economics::{Economics, UtilitySpec};
use crate::error::{CoreError, Result};
use crate::module::{build_time_step_module, Field, TimeStepModule};
use crate::params::Params;
use crate::schema::{cost_node, loss_node, Node};
use crate::thermal::ThermalCalendar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    True,
    Blocked,
}

/// State of the field when the model starts at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    /// Distribution of `DiseaseLevelB_n`.
    pub dlb: Vec<f64>,
    pub prev_treatment: usize,
    pub prev_dose: usize,
}

impl InitialState {
    pub fn untreated(dlb: Vec<f64>) -> Self {
        Self { dlb, prev_treatment: 0, prev_dose: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonSetup {
    pub field: Field,
    pub economics: Economics,
    pub calendar: ThermalCalendar,
    pub initial: InitialState,
}

/// Priors over `DiseaseLevelB_k` used by the blocking transformation.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockingPriors {
    Fixed(Vec<f64>),
    PerStep(BTreeMap<usize, Vec<f64>>),
}

impl BlockingPriors {
    pub fn at(&self, k: usize) -> Result<&[f64]> {
        match self {
            BlockingPriors::Fixed(p) => Ok(p),
            BlockingPriors::PerStep(m) => {
                m.get(&k).map(Vec::as_slice).ok_or_else(|| CoreError::Invalid(format!("no blocking prior for step {k}")))
            }
        }
    }

    /// The per-context table entries for steps `1..=n` at `basic`.
    pub fn from_table(table: &PriorTable, n: usize, basic: usize) -> Self {
        BlockingPriors::PerStep((1..=n).map(|k| (k, table.get(k, basic).to_vec())).collect())
    }

    /// Replaces the prior of step `k`.
    pub fn with_step(self, k: usize, prior: Vec<f64>, n: usize) -> Self {
        let mut m = match self {
            BlockingPriors::Fixed(p) => (1..=n).map(|j| (j, p.clone())).collect(),
            BlockingPriors::PerStep(m) => m,
        };
        m.insert(k, prior);
        BlockingPriors::PerStep(m)
    }
}

/// The sets of one step: its variables, what is known when its treatment
/// is chosen, and the treatment itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPartition {
    pub k: usize,
    pub variables: Vec<String>,
    pub observed: Vec<String>,
    pub decision: String,
}

#[derive(Debug, Clone)]
pub struct DecisionModel {
    pub id: InfluenceDiagram,
    pub structure: Structure,
    pub n: usize,
    /// Steps n down to 1.
    pub steps: Vec<StepPartition>,
    /// Modules n down to 1, after blocking when the structure is blocked.
    pub modules: Vec<TimeStepModule>,
    pub utility: UtilitySpec,
    pub diagnostics: Vec<String>,
}

impl DecisionModel {
    pub fn module(&self, k: usize) -> &TimeStepModule {
        &self.modules[self.n - k]
    }

    pub fn step(&self, k: usize) -> &StepPartition {
        &self.steps[self.n - k]
    }
}

/// Step index of a frame variable name, `None` for utilities and foreign
/// names.
pub fn step_of(name: &str) -> Option<usize> {
    let (base, k) = name.rsplit_once('_')?;
    Node::ALL.iter().any(|n| n.base() == base).then_some(())?;
    k.parse().ok()
}

fn point_mass(var: Var, at: usize) -> Result<Factor> {
    if at >= var.cardinality() {
        return Err(CoreError::Invalid(format!("state {at} out of range for {}", var.name())));
    }
    let mut v = vec![0.0; var.cardinality()];
    v[at] = 1.0;
    Ok(Factor::new(vec![var], v)?)
}

/// `P(DLA | DO, T) = Σ_DLB P(DLA | DLB, T) w(DLB | DO)` with
/// `w(DLB | DO) ∝ P(DO | DLB) prior(DLB)`. `observation` has scope
/// `[DLB, DO]`, `effect` has scope `[DLB, T, DLA]`. Returns the new CPT
/// (scope `[DO, T, DLA]`) and the observation states whose evidence has
/// zero probability under the prior; those get a uniform `w`. An `effect`
/// that no longer depends on `DLB` is returned unchanged.
pub fn blocked_effect(observation: &Factor, effect: &Factor, prior: &[f64]) -> Result<(Factor, Vec<usize>)> {
    let dlb = observation.scope()[0].clone();
    let obs = observation.scope()[1].clone();
    if !effect.scope().iter().any(|v| v.name() == dlb.name()) {
        return Ok((effect.clone(), Vec::new()));
    }
    if prior.len() != dlb.cardinality() || (prior.iter().sum::<f64>() - 1.0).abs() > 1e-9 || prior.iter().any(|&p| p < 0.0) {
        return Err(CoreError::Invalid(format!("prior over {} must be a distribution of {} states", dlb.name(), dlb.cardinality())));
    }
    let joint = observation.table().product(&Table::new(vec![dlb.clone()], prior.to_vec())?)?;
    let evidence = joint.sum_out(&[dlb.name()])?;
    let (nd, no) = (dlb.cardinality(), obs.cardinality());
    let mut w = vec![0.0; nd * no];
    let mut degenerate = Vec::new();
    for o in 0..no {
        let den = evidence.values()[o];
        for b in 0..nd {
            w[b * no + o] = if den > 0.0 { joint.get(&[b, o]) / den } else { 1.0 / nd as f64 };
        }
        if den <= 0.0 {
            degenerate.push(o);
        }
    }
    let w = Table::new(vec![dlb.clone(), obs.clone()], w)?;
    let t = effect.scope()[1].clone();
    let dla = effect.scope()[2].clone();
    let out = sum_product(vec![w, effect.table().clone()], &[obs.name(), t.name(), dla.name()])?;
    Ok((Factor::try_from_table(out)?, degenerate))
}

/// The module with its treatment effect blocked against `prior`.
pub fn apply_blocking(module: &TimeStepModule, prior: &[f64]) -> Result<(TimeStepModule, Vec<usize>)> {
    let k = module.k;
    let observation = module.cpt_of(Node::DiseaseObserv).ok_or_else(|| CoreError::Invalid("module lacks DiseaseObserv".into()))?;
    let effect = module.cpt_of(Node::DiseaseLevelA).ok_or_else(|| CoreError::Invalid("module lacks DiseaseLevelA".into()))?;
    let (blocked, degenerate) = blocked_effect(observation, effect, prior)?;
    let mut out = module.clone();
    let name = Node::DiseaseLevelA.at(k);
    for f in out.cpts.iter_mut() {
        if f.scope().last().is_some_and(|v| v.name() == name) {
            *f = blocked.clone();
        }
    }
    Ok((out, degenerate))
}

/// Builds the season model for steps `n..=1`, `n` being the calendar's
/// number of steps.
pub fn assemble(setup: &SeasonSetup, params: &Params, structure: Structure, priors: &BlockingPriors) -> Result<DecisionModel> {
    let n = setup.calendar.steps();
    let s = &params.schema;
    if n == 0 || n > s.max_steps {
        return Err(CoreError::Invalid(format!("model needs 1..={} steps, got {n}", s.max_steps)));
    }
    let modules: Vec<TimeStepModule> = (1..=n)
        .rev()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| build_time_step_module(k, setup.field, params, setup.calendar.delta_tau(k)))
        .collect::<Result<_>>()?;
    assemble_from_modules(setup, params, structure, priors, modules)
}

/// Assembles a model whose true-structure modules (steps n down to 1) are
/// already built, for instance to block one set of modules with several
/// priors.
pub fn assemble_from_modules(
    setup: &SeasonSetup,
    params: &Params,
    structure: Structure,
    priors: &BlockingPriors,
    modules: Vec<TimeStepModule>,
) -> Result<DecisionModel> {
    let n = modules.len();
    let s = &params.schema;
    if n == 0 || modules.iter().enumerate().any(|(i, m)| m.k != n - i) {
        return Err(CoreError::Invalid("modules must cover steps n down to 1".into()));
    }
    setup.economics.validate()?;
    let utility = UtilitySpec::new(setup.economics);
    let mut diagnostics = Vec::new();
    let modules = match structure {
        Structure::True => modules,
        Structure::Blocked => modules
            .iter()
            .map(|m| {
                let (b, degenerate) = apply_blocking(m, priors.at(m.k)?)?;
                for o in degenerate {
                    diagnostics.push(format!("step {}: observation state {o} impossible under the blocking prior", m.k));
                }
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    // clamping totals per variable, summed over the steps
    let mut clamped: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for m in &modules {
        for (name, c) in &m.clamps {
            let base = name.rsplit_once('_').map_or(name.as_str(), |(b, _)| b);
            let e = clamped.entry(base).or_default();
            e.0 += c.below + c.above;
            e.1 += c.total;
        }
    }
    for (name, (out, total)) in clamped {
        if out > 0 {
            diagnostics.push(format!("{name}: {out} of {total} samples clamped"));
        }
    }

    let mut b = DiagramBuilder::default();
    let dlb_n = s.var(Node::DiseaseLevelB, n);
    b.chance_cpt(Factor::new(vec![dlb_n], setup.initial.dlb.clone())?)?;
    b.chance_cpt(point_mass(s.var(Node::PrevTreatment, n), setup.initial.prev_treatment)?)?;
    b.chance_cpt(point_mass(s.var(Node::PrevDose, n), setup.initial.prev_dose)?)?;
    let mut steps = Vec::with_capacity(n);
    for m in &modules {
        let k = m.k;
        let t = s.var(Node::Treatment, k);
        let observed = [Node::DiseaseObserv, Node::PrevTreatment, Node::PrevDose].map(|o| s.var(o, k));
        b.decision(&t, &observed.iter().collect::<Vec<_>>())?;
        for f in &m.cpts {
            b.chance_cpt(f.clone())?;
        }
        b.utility(&cost_node(k), &[&t], utility.cost_utilities(&s.doses))?;
        b.utility(&loss_node(k), &[&s.var(Node::YieldLossPct, k)], utility.loss_utilities(&s.yield_loss_midpoints()))?;
        steps.push(StepPartition {
            k,
            variables: Node::ALL.iter().map(|v| v.at(k)).collect(),
            observed: observed.iter().map(|v| v.name().to_string()).collect(),
            decision: t.name().to_string(),
        });
    }
    let id = b.build()?;
    Ok(DecisionModel { id, structure, n, steps, modules, utility, diagnostics })
}

/// For every step `k`, whether the variables of the steps before `k` are
/// d-separated from those after it by what is known at `k`: the observation,
/// the treatment history (`PrevTreatment_k`, `PrevDose_k`) and the
/// decisions of steps `>= k`.
pub fn blocking_report(model: &DecisionModel) -> Vec<(usize, bool)> {
    let id = &model.id;
    let dag = Dag::from_diagram(id);
    let mut by_step: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..id.len() {
        if id.kind(v) != NodeKind::Utility {
            if let Some(k) = step_of(id.name(v)) {
                by_step.entry(k).or_default().push(v);
            }
        }
    }
    (1..=model.n)
        .map(|k| {
            let p = model.step(k);
            let mut z: BTreeSet<usize> = p.observed.iter().map(|n| id.id(n).expect("observed node")).collect();
            for j in k..=model.n {
                z.insert(id.id(&model.step(j).decision).expect("decision node"));
            }
            let collect = |range: &mut dyn Iterator<Item = (&usize, &Vec<usize>)>| -> BTreeSet<usize> {
                range.flat_map(|(_, vs)| vs.iter().copied()).filter(|v| !z.contains(v)).collect()
            };
            let past = collect(&mut by_step.range(k + 1..));
            let future = collect(&mut by_step.range(..k));
            (k, dag.d_separated(&past, &future, &z))
        })
        .collect()
}

/// Errors with the first step at which blocking fails.
pub fn check_blocking(model: &DecisionModel) -> Result<()> {
    match blocking_report(model).into_iter().find(|(_, ok)| !ok) {
        Some((k, _)) => Err(CoreError::NotBlocked(k)),
        None => Ok(()),
    }
}

/// `M[b][b']`: probability of `DiseaseLevelB_{k-1} = b'` given
/// `DiseaseLevelB_k = b` with the treatment history and treatment fixed.
/// Uses the module's own treatment effect, so for a blocked module the
/// rows coincide.
pub fn severity_transition(module: &TimeStepModule, params: &Params, prev_treatment: usize, prev_dose: usize, dose: usize) -> Result<Vec<Vec<f64>>> {
    let s = &params.schema;
    let k = module.k;
    let mut tables: Vec<Table> = module.cpts.iter().map(|f| f.table().clone()).collect();
    tables.push(point_mass(s.var(Node::PrevTreatment, k), prev_treatment)?.into_table());
    tables.push(point_mass(s.var(Node::PrevDose, k), prev_dose)?.into_table());
    tables.push(point_mass(s.var(Node::Treatment, k), dose)?.into_table());
    let (b, next) = (Node::DiseaseLevelB.at(k), Node::DiseaseLevelB.at(k - 1));
    let nb = s.cardinality(Node::DiseaseLevelB);
    if !module.cpt_of(Node::DiseaseLevelA).expect("effect CPT").contains(&b) {
        return Err(CoreError::Invalid("severity transition needs the true treatment effect".into()));
    }
    let joint = sum_product(tables, &[&b, &next])?;
    Ok((0..nb).map(|i| (0..nb).map(|j| joint.get(&[i, j])).collect()).collect())
}

/// Observation model `O[b][o] = P(DiseaseObserv_k = o | DiseaseLevelB_k = b)`.
pub fn observation_matrix(module: &TimeStepModule) -> Vec<Vec<f64>> {
    let f = module.cpt_of(Node::DiseaseObserv).expect("observation CPT");
    let (nb, no) = (f.scope()[0].cardinality(), f.scope()[1].cardinality());
    (0..nb).map(|b| (0..no).map(|o| f.get(&[b, o])).collect()).collect()
}

pub fn propagate_row(dist: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; m[0].len()];
    for (p, row) in dist.iter().zip(m) {
        for (o, x) in out.iter_mut().zip(row) {
            *o += p * x;
        }
    }
    out
}

/// Priors over `DiseaseLevelB` by time step and basic protection level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorTable {
    /// `priors[t - 1][b]`.
    pub priors: Vec<Vec<Vec<f64>>>,
}

impl PriorTable {
    pub fn get(&self, time_step: usize, basic: usize) -> &[f64] {
        &self.priors[time_step - 1][basic]
    }

    pub fn len(&self) -> usize {
        self.priors.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Marginal severity at each time step of an untreated, unobserved season
/// that starts from the season-start prior at the last time step, for each
/// basic protection level.
pub fn per_context_priors(params: &Params, crop_structure: usize) -> Result<PriorTable> {
    let s = &params.schema;
    let levels = s.basic_levels.len();
    let columns: Vec<Vec<Vec<f64>>> = (0..levels)
        .into_par_iter()
        .map(|basic| {
            let field = Field { basic_protection: basic, crop_structure };
            let mut dist = params.priors.season_start.clone();
            let mut out = vec![Vec::new(); s.max_steps];
            for t in (1..=s.max_steps).rev() {
                out[t - 1] = dist.clone();
                let m = build_time_step_module(t, field, params, 1.0)?;
                dist = propagate_row(&dist, &severity_transition(&m, params, 0, 0, 0)?);
                let z: f64 = dist.iter().sum();
                dist.iter_mut().for_each(|p| *p /= z);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let priors = (0..s.max_steps).map(|t| (0..levels).map(|b| columns[b][t].clone()).collect()).collect();
    Ok(PriorTable { priors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cultivation::CultivationFactors;

    fn setup(n: usize) -> (SeasonSetup, Params) {
        let p = Params::default();
        let s = SeasonSetup {
            field: Field::from_cultivation(&CultivationFactors::default(), &p),
            economics: Economics::default(),
            calendar: ThermalCalendar::uniform(n),
            initial: InitialState::untreated(p.priors.fixed.clone()),
        };
        (s, p)
    }

    #[test]
    fn one_step_node_counts() {
        let (s, p) = setup(1);
        let m = assemble(&s, &p, Structure::True, &BlockingPriors::Fixed(p.priors.fixed.clone())).unwrap();
        let id = &m.id;
        assert_eq!(id.decision_nodes().len(), 1);
        assert_eq!(id.utility_nodes().len(), 2);
        // 14 chance variables of the frame plus the three next-step inputs
        assert_eq!(id.chance_nodes().len(), 17);
    }

    #[test]
    fn hand_computed_blocking_weights() {
        let b = midas_engine::DiscreteVariable::indexed("B", 2).unwrap();
        let o = midas_engine::DiscreteVariable::indexed("O", 2).unwrap();
        let t = midas_engine::DiscreteVariable::indexed("T", 1).unwrap();
        let a = midas_engine::DiscreteVariable::indexed("A", 2).unwrap();
        let obs = Factor::new(vec![b.clone(), o], vec![0.9, 0.1, 0.3, 0.7]).unwrap();
        let eff = Factor::new(vec![b, t, a], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (blocked, degenerate) = blocked_effect(&obs, &eff, &[0.5, 0.5]).unwrap();
        assert!(degenerate.is_empty());
        // O = 0: w = [0.75, 0.25]; O = 1: w = [0.125, 0.875]
        let want = [0.75, 0.25, 0.125, 0.875];
        for (x, w) in blocked.values().iter().zip(want) {
            assert!((x - w).abs() < 1e-12);
        }
        let (again, _) = blocked_effect(&obs, &blocked, &[0.5, 0.5]).unwrap();
        assert_eq!(again, blocked);
    }

    #[test]
    fn permutation_observation_recovers_the_true_effect() {
        let b = midas_engine::DiscreteVariable::indexed("B", 3).unwrap();
        let o = midas_engine::DiscreteVariable::indexed("O", 3).unwrap();
        let t = midas_engine::DiscreteVariable::indexed("T", 2).unwrap();
        let a = midas_engine::DiscreteVariable::indexed("A", 2).unwrap();
        let obs = Factor::new(vec![b.clone(), o], vec![0., 1., 0., 0., 0., 1., 1., 0., 0.]).unwrap();
        let eff_v = vec![0.9, 0.1, 0.8, 0.2, 0.5, 0.5, 0.4, 0.6, 0.2, 0.8, 0.1, 0.9];
        let eff = Factor::new(vec![b, t, a], eff_v.clone()).unwrap();
        let (blocked, _) = blocked_effect(&obs, &eff, &[0.2, 0.3, 0.5]).unwrap();
        // O = 1 has B = 0, O = 2 has B = 1, O = 0 has B = 2
        for (ob, bb) in [(1usize, 0usize), (2, 1), (0, 2)] {
            for tt in 0..2 {
                for aa in 0..2 {
                    assert!((blocked.get(&[ob, tt, aa]) - eff_v[bb * 4 + tt * 2 + aa]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_evidence_gets_uniform_weights() {
        let b = midas_engine::DiscreteVariable::indexed("B", 2).unwrap();
        let o = midas_engine::DiscreteVariable::indexed("O", 2).unwrap();
        let t = midas_engine::DiscreteVariable::indexed("T", 1).unwrap();
        let a = midas_engine::DiscreteVariable::indexed("A", 2).unwrap();
        let obs = Factor::new(vec![b.clone(), o], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let eff = Factor::new(vec![b, t, a], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (blocked, degenerate) = blocked_effect(&obs, &eff, &[1.0, 0.0]).unwrap();
        assert_eq!(degenerate, vec![1]);
        assert_eq!(blocked.get(&[1, 0, 0]), 0.5);
    }

    #[test]
    fn blocked_three_step_model_is_blocked() {
        let (s, p) = setup(3);
        let priors = BlockingPriors::Fixed(p.priors.fixed.clone());
        let m = assemble(&s, &p, Structure::Blocked, &priors).unwrap();
        assert!(blocking_report(&m).iter().all(|(_, ok)| *ok));
        let t = assemble(&s, &p, Structure::True, &priors).unwrap();
        assert!(check_blocking(&t).is_err());
    }

    #[test]
    fn step_names() {
        assert_eq!(step_of("DiseaseLevelB_12"), Some(12));
        assert_eq!(step_of("Cost_3"), None);
        assert_eq!(step_of("Nonsense_3"), None);
    }
}
