//! One instantiated time-step module: the CPTs of a single thermal week.
//!
//! Step `k` counts the thermal weeks left to maturity and doubles as the
//! time step index. The module holds the CPTs of every frame variable of
//! step `k` plus the three next-step inputs (`DiseaseLevelB`,
//! `PrevTreatment`, `PrevDose` at `k - 1`). Its own inputs
//! (`DiseaseLevelB_k`, `PrevTreatment_k`, `PrevDose_k`) and the decision
//! `Treatment_k` are left to the assembly.

use midas_engine::{Factor, Var};

use crate::cultivation::CultivationFactors;
use crate::discretize::{discretize_model, intervals, points, ClampCounts, Discretization, Domain};
use crate::error::{CoreError, Result};
use crate::params::Params;
use crate::quantify;
use crate::schema::{Node, StateSchema};

/// The field-specific inputs of a module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Field {
    pub basic_protection: usize,
    pub crop_structure: usize,
}

impl Field {
    pub fn from_cultivation(c: &CultivationFactors, params: &Params) -> Self {
        Self { basic_protection: c.basic_protection(params), crop_structure: c.crop_structure(params) }
    }
}

#[derive(Debug, Clone)]
pub struct TimeStepModule {
    pub k: usize,
    pub delta_tau: f64,
    pub field: Field,
    /// In topological order.
    pub cpts: Vec<Factor>,
    pub clamps: Vec<(String, ClampCounts)>,
}

impl TimeStepModule {
    pub fn cpt(&self, name: &str) -> Option<&Factor> {
        self.cpts.iter().find(|f| f.scope().last().is_some_and(|v| v.name() == name))
    }

    pub fn cpt_of(&self, node: Node) -> Option<&Factor> {
        self.cpt(&node.at(self.k))
    }
}

fn seed_for(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Weeks represented by each `PrevTreatment` state.
fn weeks_since(schema: &StateSchema) -> Vec<Domain> {
    debug_assert_eq!(schema.cardinality(Node::PrevTreatment), 4);
    vec![Domain::Point(f64::INFINITY), Domain::Point(1.0), Domain::Point(2.0), Domain::Interval(3.0, 6.0)]
}

fn point_mass(var: Var, at: usize) -> Result<Factor> {
    let mut v = vec![0.0; var.cardinality()];
    v[at] = 1.0;
    Ok(Factor::new(vec![var], v)?)
}

/// Deterministic CPT `child = f(parent states)`.
fn deterministic(parents: Vec<Var>, child: Var, f: impl Fn(&[usize]) -> usize) -> Result<Factor> {
    let k = child.cardinality();
    let cards: Vec<usize> = parents.iter().map(|p| p.cardinality()).collect();
    let rows: usize = cards.iter().product();
    let mut values = vec![0.0; rows * k];
    let mut s = vec![0usize; cards.len()];
    for r in 0..rows {
        values[r * k + f(&s)] = 1.0;
        for j in (0..s.len()).rev() {
            s[j] += 1;
            if s[j] < cards[j] {
                break;
            }
            s[j] = 0;
        }
    }
    let mut scope = parents;
    scope.push(child);
    Ok(Factor::new(scope, values)?)
}

struct Builder<'a> {
    params: &'a Params,
    cpts: Vec<Factor>,
    clamps: Vec<(String, ClampCounts)>,
}

impl Builder<'_> {
    fn model(
        &mut self,
        tag: u64,
        noise_sd: f64,
        parents: Vec<(Var, Vec<Domain>)>,
        child: Var,
        child_edges: &[f64],
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<()> {
        let opts = Discretization {
            samples_per_cell: self.params.samples_per_cell,
            noise_sd,
            seed: seed_for(self.params.seed, tag),
        };
        let domains: Vec<Vec<Domain>> = parents.iter().map(|(_, d)| d.clone()).collect();
        let (values, counts) = discretize_model(f, &domains, child_edges, &opts)?;
        let mut scope: Vec<Var> = parents.into_iter().map(|(v, _)| v).collect();
        self.clamps.push((child.name().to_string(), counts));
        scope.push(child);
        self.cpts.push(Factor::new(scope, values)?);
        Ok(())
    }
}

/// Builds the module of step `k` (also its time step) for `field`.
pub fn build_time_step_module(k: usize, field: Field, params: &Params, delta_tau: f64) -> Result<TimeStepModule> {
    let s = &params.schema;
    if k == 0 || k > s.max_steps {
        return Err(CoreError::Invalid(format!("time step {k} outside 1..={}", s.max_steps)));
    }
    if !(delta_tau > 0.0 && delta_tau.is_finite()) {
        return Err(CoreError::Invalid(format!("step length must be positive, got {delta_tau}")));
    }
    if field.basic_protection >= s.basic_levels.len() || field.crop_structure > 2 {
        return Err(CoreError::Invalid("field state out of range".into()));
    }
    let q = &params.quantification;
    let noise = &params.noise;
    let v = |n: Node| s.var(n, k);
    let sev = || intervals(&s.severity_edges);
    let doses = || points(&s.doses);
    let mut b = Builder { params, cpts: Vec::new(), clamps: Vec::new() };

    b.model(1, noise.incidence, vec![(v(Node::DiseaseLevelB), sev())], v(Node::DiseaseObserv), &s.incidence_edges, |x| {
        quantify::incidence_from_severity(q, x[0])
    })?;
    b.model(
        2,
        noise.concentration,
        vec![
            (v(Node::PrevTreatment), weeks_since(s)),
            (v(Node::PrevDose), doses()),
            (v(Node::Treatment), doses()),
        ],
        v(Node::ProtectnConc),
        &s.concentration_edges,
        |x| quantify::protectant_decay(q, x[1], x[0], x[2]),
    )?;
    b.model(
        3,
        noise.protection_level,
        vec![(v(Node::ProtectnConc), intervals(&s.concentration_edges))],
        v(Node::ProtectnLevel),
        &s.protection_level_edges,
        |x| quantify::protection_level(q, x[0]),
    )?;
    let emergence = params.leaf_emergence(k);
    b.model(
        4,
        noise.new_leaf,
        vec![(v(Node::PrevTreatment), weeks_since(s)), (v(Node::Treatment), doses())],
        v(Node::NewLeafFract),
        &s.new_leaf_edges,
        |x| {
            let weeks = if x[1] > 0.0 { 0.5 } else { x[0] + 0.5 };
            quantify::new_leaf_fraction(emergence, weeks)
        },
    )?;
    b.cpts.push(point_mass(v(Node::BasicProtection), field.basic_protection)?);
    b.model(
        5,
        noise.mean_protection,
        vec![
            (v(Node::BasicProtection), points(&s.basic_levels)),
            (v(Node::ProtectnLevel), intervals(&s.protection_level_edges)),
            (v(Node::NewLeafFract), intervals(&s.new_leaf_edges)),
        ],
        v(Node::MeanProtectn),
        &s.mean_protection_edges,
        |x| quantify::mean_protection(x[0], x[1], x[2]),
    )?;
    b.cpts.push(Factor::new(vec![v(Node::ClimateEffect)], params.climate_prior(k).to_vec())?);
    b.cpts.push(point_mass(v(Node::CropStructure), field.crop_structure)?);
    b.model(
        6,
        noise.growth_rate,
        vec![
            (v(Node::ClimateEffect), points(&[0.0, 1.0, 2.0])),
            (v(Node::CropStructure), points(&[0.0, 1.0, 2.0])),
            (v(Node::MeanProtectn), intervals(&s.mean_protection_edges)),
        ],
        v(Node::GrowthRate),
        &s.growth_edges,
        |x| quantify::growth_rate(q, x[0] as usize, x[1] as usize, x[2]),
    )?;
    b.model(
        7,
        noise.treatment_effect,
        vec![(v(Node::DiseaseLevelB), sev()), (v(Node::Treatment), doses())],
        v(Node::DiseaseLevelA),
        &s.severity_edges,
        |x| x[0] * (1.0 - quantify::dose_efficacy(q, x[1]).expect("doses are nonnegative")),
    )?;
    b.model(
        8,
        noise.yield_loss,
        vec![(v(Node::DiseaseLevelA), sev())],
        v(Node::YieldLossPct),
        &s.yield_loss_edges,
        |x| quantify::yield_loss_pct(q, x[0], delta_tau),
    )?;
    b.model(
        9,
        noise.disease_step,
        vec![(v(Node::DiseaseLevelA), sev()), (v(Node::GrowthRate), intervals(&s.growth_edges))],
        s.var(Node::DiseaseLevelB, k - 1),
        &s.severity_edges,
        |x| quantify::disease_step(x[0], x[1], delta_tau),
    )?;
    let last = s.cardinality(Node::PrevTreatment) - 1;
    b.cpts.push(deterministic(
        vec![v(Node::PrevTreatment), v(Node::Treatment)],
        s.var(Node::PrevTreatment, k - 1),
        |st| match (st[0], st[1]) {
            (_, t) if t > 0 => 1,
            (0, _) => 0,
            (p, _) => (p + 1).min(last),
        },
    )?);
    b.cpts.push(deterministic(
        vec![v(Node::PrevDose), v(Node::Treatment)],
        s.var(Node::PrevDose, k - 1),
        |st| if st[1] > 0 { st[1] } else { st[0] },
    )?);
    Ok(TimeStepModule { k, delta_tau, field, cpts: b.cpts, clamps: b.clamps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn module(k: usize) -> TimeStepModule {
        let p = Params::default();
        build_time_step_module(k, Field::from_cultivation(&CultivationFactors::default(), &p), &p, 1.0).unwrap()
    }

    #[test]
    fn rows_are_normalized() {
        for f in module(7).cpts {
            assert!(f.conditional_normalization_error() < 1e-9, "{:?}", f.scope().last().unwrap().name());
        }
    }

    #[test]
    fn frame_parent_sets() {
        let m = module(3);
        let parents = |name: &str| -> Vec<String> {
            let f = m.cpt(name).unwrap();
            f.scope()[..f.scope().len() - 1].iter().map(|v| v.name().to_string()).collect()
        };
        assert_eq!(parents("DiseaseLevelA_3"), ["DiseaseLevelB_3", "Treatment_3"]);
        assert_eq!(parents("DiseaseLevelB_2"), ["DiseaseLevelA_3", "GrowthRate_3"]);
        assert_eq!(parents("GrowthRate_3"), ["ClimateEffect_3", "CropStructure_3", "MeanProtectn_3"]);
        assert_eq!(parents("MeanProtectn_3"), ["BasicProtection_3", "ProtectnLevel_3", "NewLeafFract_3"]);
        assert_eq!(parents("ProtectnLevel_3"), ["ProtectnConc_3"]);
        assert_eq!(parents("ProtectnConc_3"), ["PrevTreatment_3", "PrevDose_3", "Treatment_3"]);
        assert_eq!(parents("DiseaseObserv_3"), ["DiseaseLevelB_3"]);
        assert_eq!(parents("YieldLossPct_3"), ["DiseaseLevelA_3"]);
        assert_eq!(parents("PrevTreatment_2"), ["PrevTreatment_3", "Treatment_3"]);
        assert_eq!(m.cpts.len(), 14);
    }

    #[test]
    fn deterministic_carry_over() {
        let m = module(5);
        let pt = m.cpt("PrevTreatment_4").unwrap();
        // never + no treatment stays never; 2 weeks + no treatment becomes >=3;
        // any treatment resets to 1.
        assert_eq!(pt.get(&[0, 0, 0]), 1.0);
        assert_eq!(pt.get(&[2, 0, 3]), 1.0);
        assert_eq!(pt.get(&[3, 0, 3]), 1.0);
        assert_eq!(pt.get(&[3, 2, 1]), 1.0);
        let pd = m.cpt("PrevDose_4").unwrap();
        assert_eq!(pd.get(&[3, 0, 3]), 1.0);
        assert_eq!(pd.get(&[3, 1, 1]), 1.0);
    }

    #[test]
    fn bit_identical_rebuild() {
        let (a, b) = (module(9), module(9));
        for (x, y) in a.cpts.iter().zip(&b.cpts) {
            assert_eq!(x.values(), y.values());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Params::default();
        let f = Field { basic_protection: 0, crop_structure: 0 };
        assert!(build_time_step_module(0, f, &p, 1.0).is_err());
        assert!(build_time_step_module(21, f, &p, 1.0).is_err());
        assert!(build_time_step_module(3, f, &p, 0.0).is_err());
    }
}
