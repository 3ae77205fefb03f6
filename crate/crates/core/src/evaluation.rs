//! Synthetic seasons from the true structure, comparison of the true and
//! blocked structures' one-step severity predictions, and policy rollouts.

use std::collections::{BTreeMap, BTreeSet};

use midas_engine::inference::{DecisionRule, Policy};
use midas_engine::sampling::sample_forward;
use midas_engine::{InfluenceDiagram, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, observation_matrix, per_context_priors, propagate_row, severity_transition, BlockingPriors, DecisionModel, InitialState, SeasonSetup, Structure};
use crate::chain::solve_chain;
use crate::cultivation::{CultivationFactors, Resistance};
use crate::economics::Economics;
use crate::error::{CoreError, Result};
use crate::module::Field;
use crate::params::Params;
use crate::schema::{cost_node, loss_node, Node, SeverityBand};
use crate::thermal::ThermalCalendar;

/// How treatments are chosen while sampling a season.
#[derive(Clone)]
pub enum DrivingPolicy {
    /// The same dose index every step.
    Constant(usize),
    /// Dose index drawn uniformly every step.
    Uniform,
    /// The empirical incidence threshold rule.
    Threshold { threshold_bin: usize, dose_index: usize },
    /// Decision rules of a solved model.
    Rules(Policy),
}

impl DrivingPolicy {
    pub fn threshold(params: &Params) -> Self {
        DrivingPolicy::Threshold { threshold_bin: params.baseline.threshold_bin, dose_index: params.baseline.dose_index }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonStep {
    pub k: usize,
    pub severity_bin: usize,
    pub observed_bin: usize,
    pub prev_treatment: usize,
    pub prev_dose: usize,
    pub dose: usize,
    /// `DiseaseLevelB_{k-1}`.
    pub next_severity_bin: usize,
    pub yield_loss_bin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSeason {
    /// Random stream the season was drawn from.
    pub stream: u64,
    /// Steps n down to 1.
    pub steps: Vec<SeasonStep>,
    /// Realized total utility (currency/ha).
    pub utility: f64,
}

/// Season of the true structure starting from scratch.
pub fn true_season_model(params: &Params, field: Field, economics: Economics, n: usize) -> Result<DecisionModel> {
    let setup = SeasonSetup {
        field,
        economics,
        calendar: ThermalCalendar::uniform(n),
        initial: InitialState::untreated(params.priors.season_start.clone()),
    };
    assemble(&setup, params, Structure::True, &BlockingPriors::Fixed(params.priors.fixed.clone()))
}

struct Decider {
    /// Per node id: the rule of that decision and its scope's node ids.
    rules: BTreeMap<NodeId, (Option<DecisionRule>, Vec<NodeId>)>,
    observation: BTreeMap<NodeId, NodeId>,
}

impl Decider {
    fn new(id: &InfluenceDiagram, policy: &DrivingPolicy) -> Result<Self> {
        let mut rules = BTreeMap::new();
        let mut observation = BTreeMap::new();
        for d in id.decision_nodes() {
            let name = id.name(d);
            let k = crate::assembly::step_of(name).expect("treatment name");
            observation.insert(d, id.id(&Node::DiseaseObserv.at(k))?);
            let entry = match policy {
                DrivingPolicy::Rules(p) => {
                    let rule = p.rule(name).ok_or_else(|| CoreError::Invalid(format!("policy has no rule for {name}")))?.clone();
                    let scope = rule.scope.iter().map(|v| id.id(v.name())).collect::<std::result::Result<Vec<_>, _>>()?;
                    (Some(rule), scope)
                }
                _ => (None, Vec::new()),
            };
            rules.insert(d, entry);
        }
        Ok(Self { rules, observation })
    }

    fn decide<R: Rng>(&self, policy: &DrivingPolicy, d: NodeId, states: &[usize], cardinality: usize, rng: &mut R) -> usize {
        match policy {
            DrivingPolicy::Constant(c) => *c,
            DrivingPolicy::Uniform => rng.random_range(0..cardinality),
            DrivingPolicy::Threshold { threshold_bin, dose_index } => {
                if states[self.observation[&d]] >= *threshold_bin {
                    *dose_index
                } else {
                    0
                }
            }
            DrivingPolicy::Rules(_) => {
                let (rule, scope) = &self.rules[&d];
                let rule = rule.as_ref().expect("rule present");
                let idx = scope.iter().zip(&rule.scope).fold(0, |acc, (&node, v)| acc * v.cardinality() + states[node]);
                rule.choices[idx]
            }
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Forward samples `count` seasons of a true-structure model. Season `i`
/// uses random stream `i` of `seed`, so the result does not depend on
/// thread scheduling.
pub fn generate_seasons(model: &DecisionModel, policy: &DrivingPolicy, count: usize, seed: u64) -> Result<Vec<SyntheticSeason>> {
    if model.structure != Structure::True {
        return Err(CoreError::Invalid("seasons are sampled from the true structure".into()));
    }
    let id = &model.id;
    if let DrivingPolicy::Constant(c) | DrivingPolicy::Threshold { dose_index: c, .. } = policy {
        let nd = id.var(&Node::Treatment.at(model.n))?.cardinality();
        if *c >= nd {
            return Err(CoreError::Invalid(format!("dose index {c} out of range")));
        }
    }
    let decider = Decider::new(id, policy)?;
    let ids = (1..=model.n)
        .rev()
        .map(|k| {
            let get = |node: Node| id.id(&node.at(k));
            Ok([
                get(Node::DiseaseLevelB)?,
                get(Node::DiseaseObserv)?,
                get(Node::PrevTreatment)?,
                get(Node::PrevDose)?,
                get(Node::Treatment)?,
                id.id(&Node::DiseaseLevelB.at(k - 1))?,
                get(Node::YieldLossPct)?,
                id.id(&cost_node(k))?,
                id.id(&loss_node(k))?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let seasons = (0..count as u64)
        .into_par_iter()
        .map(|stream| {
            let mut rng = stream_rng(seed, stream);
            let mut choice_rng = stream_rng(seed ^ 0x9e37_79b9_7f4a_7c15, stream);
            let states = sample_forward(id, &mut rng, |d, states| decider.decide(policy, d, states, id.cardinality(d), &mut choice_rng));
            let mut utility = 0.0;
            let steps = (1..=model.n)
                .rev()
                .zip(&ids)
                .map(|(k, n)| {
                    utility += id.utility(n[7]).expect("cost").values()[states[n[4]]];
                    utility += id.utility(n[8]).expect("loss").values()[states[n[6]]];
                    SeasonStep {
                        k,
                        severity_bin: states[n[0]],
                        observed_bin: states[n[1]],
                        prev_treatment: states[n[2]],
                        prev_dose: states[n[3]],
                        dose: states[n[4]],
                        next_severity_bin: states[n[5]],
                        yield_loss_bin: states[n[6]],
                    }
                })
                .collect();
            SyntheticSeason { stream, steps, utility }
        })
        .collect();
    Ok(seasons)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStat {
    pub band: String,
    pub count: usize,
    pub mean_predicted: f64,
    pub mean_observed: f64,
    /// Mean of predicted minus observed.
    pub bias: f64,
    /// Standard error of the bias, clustered by season.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub structure: Structure,
    pub mean_predicted: f64,
    pub sd_predicted: f64,
    /// Grouped by the band of the sampled severity.
    pub bias_by_true_band: Vec<BandStat>,
    /// Grouped by the band of the predicted mean severity.
    pub calibration_by_predicted_band: Vec<BandStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seasons: usize,
    pub predictions: usize,
    pub mean_observed: f64,
    pub sd_observed: f64,
    pub structures: Vec<StructureReport>,
}

impl ComparisonReport {
    pub fn structure(&self, s: Structure) -> &StructureReport {
        self.structures.iter().find(|r| r.structure == s).expect("both structures reported")
    }
}

/// `P(DiseaseLevelB_{k-1} | DiseaseLevelB_k)` for every treatment context
/// met in the seasons, keyed by `(k, prev_treatment, prev_dose, dose)`.
type Transitions = BTreeMap<(usize, usize, usize, usize), Vec<Vec<f64>>>;

fn transitions(model: &DecisionModel, params: &Params, seasons: &[SyntheticSeason]) -> Result<Transitions> {
    let keys: BTreeSet<_> = seasons.iter().flat_map(|s| s.steps.iter().map(|t| (t.k, t.prev_treatment, t.prev_dose, t.dose))).collect();
    let keys: Vec<_> = keys.into_iter().collect();
    let mats = keys
        .par_iter()
        .map(|&(k, pt, pd, d)| severity_transition(model.module(k), params, pt, pd, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(keys.into_iter().zip(mats).collect())
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let z: f64 = v.iter().sum();
    if z > 0.0 {
        v.iter_mut().for_each(|p| *p /= z);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|p| *p = u);
    }
    v
}

fn expectation(p: &[f64], mids: &[f64]) -> f64 {
    p.iter().zip(mids).map(|(a, b)| a * b).sum()
}

/// `(season, band, predicted, observed)` rows.
type Row = (usize, SeverityBand, f64, f64);

fn band_stats(rows: &[Row]) -> Vec<BandStat> {
    SeverityBand::ALL
        .iter()
        .map(|&band| {
            let mut by_season: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            let (mut sp, mut so, mut n) = (0.0, 0.0, 0usize);
            for &(s, _, p, o) in rows.iter().filter(|r| r.1 == band) {
                sp += p;
                so += o;
                n += 1;
                let e = by_season.entry(s).or_default();
                e.0 += p - o;
                e.1 += 1;
            }
            let nf = n as f64;
            let bias = if n > 0 { (sp - so) / nf } else { 0.0 };
            let var: f64 = by_season.values().map(|(sum, c)| (sum - *c as f64 * bias).powi(2)).sum();
            let g = by_season.len() as f64;
            let se = if g > 1.0 { (var * g / (g - 1.0)).sqrt() / nf } else { f64::NAN };
            BandStat {
                band: band.label().to_string(),
                count: n,
                mean_predicted: if n > 0 { sp / nf } else { 0.0 },
                mean_observed: if n > 0 { so / nf } else { 0.0 },
                bias,
                se,
            }
        })
        .collect()
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// One-step-ahead predictions of next week's severity for every step of
/// every season. The true structure filters the whole observation history
/// from the season start; the blocked structure sees only the current
/// observation and mixes the transition over `priors` at that step, which
/// is the prediction of the blocked model's treatment effect.
pub fn compare_structures(model: &DecisionModel, params: &Params, seasons: &[SyntheticSeason], priors: &BlockingPriors, initial: &[f64]) -> Result<ComparisonReport> {
    let trans = transitions(model, params, seasons)?;
    let mids = params.schema.severity_midpoints();
    let (mut true_rows, mut true_pred_rows, mut blocked_rows, mut blocked_pred_rows) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut preds: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut observed = Vec::new();
    for (si, season) in seasons.iter().enumerate() {
        let mut belief = initial.to_vec();
        for st in &season.steps {
            let module = model.module(st.k);
            let obs = observation_matrix(module);
            let m = &trans[&(st.k, st.prev_treatment, st.prev_dose, st.dose)];
            let truth = mids[st.next_severity_bin];
            let truth_band = SeverityBand::of(truth);
            observed.push(truth);

            let filtered = normalized(belief.iter().zip(&obs).map(|(p, row)| p * row[st.observed_bin]).collect());
            let next = propagate_row(&filtered, m);
            let p_true = expectation(&next, &mids);
            belief = next;

            let prior = priors.at(st.k)?;
            let w = normalized(prior.iter().zip(&obs).map(|(p, row)| p * row[st.observed_bin]).collect());
            let p_blocked = expectation(&propagate_row(&w, m), &mids);

            true_rows.push((si, truth_band, p_true, truth));
            true_pred_rows.push((si, SeverityBand::of(p_true), p_true, truth));
            blocked_rows.push((si, truth_band, p_blocked, truth));
            blocked_pred_rows.push((si, SeverityBand::of(p_blocked), p_blocked, truth));
            preds[0].push(p_true);
            preds[1].push(p_blocked);
        }
    }
    let (mean_observed, sd_observed) = mean_sd(observed.iter().copied());
    let report = |structure, p: &[f64], rows: &[Row], pred_rows: &[Row]| {
        let (mean_predicted, sd_predicted) = mean_sd(p.iter().copied());
        StructureReport {
            structure,
            mean_predicted,
            sd_predicted,
            bias_by_true_band: band_stats(rows),
            calibration_by_predicted_band: band_stats(pred_rows),
        }
    };
    Ok(ComparisonReport {
        seasons: seasons.len(),
        predictions: observed.len(),
        mean_observed,
        sd_observed,
        structures: vec![
            report(Structure::True, &preds[0], &true_rows, &true_pred_rows),
            report(Structure::Blocked, &preds[1], &blocked_rows, &blocked_pred_rows),
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkPolicy {
    Midas,
    ThresholdBaseline,
    NeverSpray,
    AlwaysFull,
}

impl BenchmarkPolicy {
    pub const ALL: [BenchmarkPolicy; 4] = [Self::Midas, Self::ThresholdBaseline, Self::NeverSpray, Self::AlwaysFull];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub field: Field,
    pub economics: Economics,
    pub weeks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStat {
    pub policy: BenchmarkPolicy,
    pub mean_utility: f64,
    pub se_utility: f64,
    /// Mean dose per step as a fraction of the label dose.
    pub mean_dose: f64,
    /// Mean of this policy's utility minus MIDAS's on the same rollouts.
    pub diff_vs_midas: f64,
    pub se_diff_vs_midas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub cases: usize,
    pub rollouts_per_case: usize,
    pub policies: Vec<PolicyStat>,
}

impl BenchmarkReport {
    pub fn policy(&self, p: BenchmarkPolicy) -> &PolicyStat {
        self.policies.iter().find(|s| s.policy == p).expect("every policy reported")
    }
}

/// Rolls every policy out on every case against the true structure. All
/// policies share the random streams of a case, so their differences are
/// paired. MIDAS follows the blocked model's optimal decision rules, which
/// is what re-solving after every observation would return.
pub fn policy_benchmark(params: &Params, cases: &[BenchmarkCase], priors: impl Fn(&BenchmarkCase) -> Result<BlockingPriors>, rollouts: usize, seed: u64) -> Result<BenchmarkReport> {
    let s = &params.schema;
    let full = s.doses.len() - 1;
    // utilities[policy][case * rollouts + r], doses likewise
    let mut utilities = vec![Vec::new(); 4];
    let mut doses = vec![Vec::new(); 4];
    for (ci, case) in cases.iter().enumerate() {
        let model = true_season_model(params, case.field, case.economics, case.weeks)?;
        let blocked_priors = priors(case)?;
        let setup = SeasonSetup {
            field: case.field,
            economics: case.economics,
            calendar: ThermalCalendar::uniform(case.weeks),
            initial: InitialState::untreated(blocked_priors.at(case.weeks)?.to_vec()),
        };
        let blocked = assemble(&setup, params, Structure::Blocked, &blocked_priors)?;
        let midas = solve_chain(&blocked, &midas_engine::Evidence::new())?.result.policy;
        let case_seed = seed.wrapping_add((ci as u64) << 32);
        for (pi, p) in BenchmarkPolicy::ALL.iter().enumerate() {
            let driver = match p {
                BenchmarkPolicy::Midas => DrivingPolicy::Rules(midas.clone()),
                BenchmarkPolicy::ThresholdBaseline => DrivingPolicy::threshold(params),
                BenchmarkPolicy::NeverSpray => DrivingPolicy::Constant(0),
                BenchmarkPolicy::AlwaysFull => DrivingPolicy::Constant(full),
            };
            for season in generate_seasons(&model, &driver, rollouts, case_seed)? {
                utilities[pi].push(season.utility);
                let total: f64 = season.steps.iter().map(|t| s.doses[t.dose]).sum();
                doses[pi].push(total / season.steps.len() as f64);
            }
        }
    }
    let n = utilities[0].len() as f64;
    let policies = BenchmarkPolicy::ALL
        .iter()
        .enumerate()
        .map(|(pi, &policy)| {
            let (mean_utility, sd) = mean_sd(utilities[pi].iter().copied());
            let diffs: Vec<f64> = utilities[pi].iter().zip(&utilities[0]).map(|(a, b)| a - b).collect();
            let (diff, sd_diff) = mean_sd(diffs.iter().copied());
            PolicyStat {
                policy,
                mean_utility,
                se_utility: sd / n.sqrt(),
                mean_dose: doses[pi].iter().sum::<f64>() / n,
                diff_vs_midas: diff,
                se_diff_vs_midas: sd_diff / n.sqrt(),
            }
        })
        .collect();
    Ok(BenchmarkReport { cases: cases.len(), rollouts_per_case: rollouts, policies })
}

/// Structure comparison on never-sprayed seasons of the default field over
/// the longest season. The blocked structure uses the pooled untreated prior,
/// or the per-context priors when `per_context` is set.
pub fn structure_study(params: &Params, seasons: usize, seed: u64, per_context: bool) -> Result<ComparisonReport> {
    let field = Field::from_cultivation(&CultivationFactors::default(), params);
    let n = params.schema.max_steps;
    let model = true_season_model(params, field, Economics::default(), n)?;
    let priors = if per_context {
        BlockingPriors::from_table(&per_context_priors(params, field.crop_structure)?, n, field.basic_protection)
    } else {
        BlockingPriors::Fixed(params.priors.mismatched.clone())
    };
    let seasons = generate_seasons(&model, &DrivingPolicy::Constant(0), seasons, seed)?;
    compare_structures(&model, params, &seasons, &priors, &params.priors.season_start)
}

/// The three variety resistances, each with a short and a full season.
pub fn benchmark_grid(params: &Params) -> Vec<BenchmarkCase> {
    [Resistance::Low, Resistance::Medium, Resistance::High]
        .into_iter()
        .flat_map(|r| {
            let field = Field::from_cultivation(&CultivationFactors { variety_resistance: r, ..Default::default() }, params);
            [6, params.schema.max_steps].map(|weeks| BenchmarkCase { field, economics: Economics::default(), weeks })
        })
        .collect()
}

impl std::fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} seasons, {} predictions; observed severity mean {:.3} sd {:.3}", self.seasons, self.predictions, self.mean_observed, self.sd_observed)?;
        for r in &self.structures {
            writeln!(f, "{:?}: predicted mean {:.3} sd {:.3}", r.structure, r.mean_predicted, r.sd_predicted)?;
            for (title, stats) in [("by true band", &r.bias_by_true_band), ("by predicted band", &r.calibration_by_predicted_band)] {
                writeln!(f, "  {title:<18} {:>8} {:>10} {:>10} {:>10} {:>8}", "n", "predicted", "observed", "bias", "se")?;
                for b in stats {
                    writeln!(f, "  {:<18} {:>8} {:>10.3} {:>10.3} {:>10.3} {:>8.3}", b.band, b.count, b.mean_predicted, b.mean_observed, b.bias, b.se)?;
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} cases x {} rollouts", self.cases, self.rollouts_per_case)?;
        writeln!(f, "{:<20} {:>12} {:>8} {:>10} {:>12} {:>8}", "policy", "utility", "se", "dose", "vs midas", "se")?;
        for p in &self.policies {
            writeln!(
                f,
                "{:<20} {:>12.2} {:>8.2} {:>10.3} {:>12.2} {:>8.2}",
                format!("{:?}", p.policy),
                p.mean_utility,
                p.se_utility,
                p.mean_dose,
                p.diff_vs_midas,
                p.se_diff_vs_midas
            )?;
        }
        Ok(())
    }
}
