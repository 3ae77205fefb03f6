//! Random networks and influence diagrams for property and oracle tests.

use rand::Rng;

use crate::diagram::InfluenceDiagram;
use crate::factor::{DiscreteVariable, Evidence, Factor, Table, Var};

fn random_rows<R: Rng + ?Sized>(rng: &mut R, rows: usize, k: usize, zero_rate: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * k);
    for _ in 0..rows {
        let mut row: Vec<f64> =
            (0..k).map(|_| if rng.random_bool(zero_rate) { 0.0 } else { rng.random_range(0.05..1.0) }).collect();
        if row.iter().all(|&x| x == 0.0) {
            row[rng.random_range(0..k)] = 1.0;
        }
        let s: f64 = row.iter().sum();
        out.extend(row.into_iter().map(|x| x / s));
    }
    out
}

fn pick_parents<R: Rng + ?Sized>(rng: &mut R, pool: &[Var], max: usize) -> Vec<Var> {
    let mut chosen: Vec<Var> = Vec::new();
    let want = rng.random_range(0..=max.min(pool.len()));
    while chosen.len() < want {
        let v = &pool[rng.random_range(0..pool.len())];
        if !chosen.iter().any(|c| c.name() == v.name()) {
            chosen.push(v.clone());
        }
    }
    chosen
}

fn cpt<R: Rng + ?Sized>(rng: &mut R, var: &Var, parents: Vec<Var>, zero_rate: f64) -> Factor {
    let rows: usize = parents.iter().map(|p| p.cardinality()).product();
    let mut scope = parents;
    scope.push(var.clone());
    Factor::new(scope, random_rows(rng, rows, var.cardinality(), zero_rate)).expect("valid random CPT")
}

/// A random Bayesian network on `n` variables with 2..=`max_states`
/// states and at most `max_parents` parents each.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, n: usize, max_states: usize, max_parents: usize) -> InfluenceDiagram {
    let mut b = InfluenceDiagram::builder();
    let mut vars: Vec<Var> = Vec::new();
    for i in 0..n {
        let var = DiscreteVariable::indexed(format!("X{i}"), rng.random_range(2..=max_states.max(2))).expect("var");
        let parents = pick_parents(rng, &vars, max_parents);
        b.chance_cpt(cpt(rng, &var, parents, 0.1)).expect("fresh node");
        vars.push(var);
    }
    b.build().expect("random network is valid")
}

/// Evidence on up to `max_vars` randomly chosen variables, drawn from a
/// forward sample so that it has positive probability.
pub fn random_evidence<R: Rng + ?Sized>(rng: &mut R, bn: &InfluenceDiagram, max_vars: usize) -> Evidence {
    let states = crate::sampling::sample_forward(bn, rng, |_, _| 0);
    let chance = bn.chance_nodes();
    let k = rng.random_range(0..=max_vars.min(chance.len()));
    let mut e = Evidence::new();
    while e.len() < k {
        let c = chance[rng.random_range(0..chance.len())];
        e.set(bn.var_of(c).expect("var"), states[c]).expect("in range");
    }
    e
}

#[derive(Debug, Clone, Copy)]
pub struct RandomIdConfig {
    pub chance: usize,
    pub decisions: usize,
    pub max_states: usize,
    pub max_parents: usize,
    pub max_info: usize,
    pub utilities: usize,
    /// Diagrams with more no-forgetting policies than this are redrawn.
    pub max_policies: f64,
}

impl Default for RandomIdConfig {
    fn default() -> Self {
        Self { chance: 6, decisions: 2, max_states: 3, max_parents: 2, max_info: 2, utilities: 2, max_policies: 2e4 }
    }
}

/// A random influence diagram. Nodes are laid out in a random temporal
/// sequence; decisions observe a few earlier chance nodes, chance nodes
/// depend on earlier nodes of either kind, and utilities on any.
pub fn random_influence_diagram<R: Rng + ?Sized>(rng: &mut R, cfg: RandomIdConfig) -> InfluenceDiagram {
    loop {
        let id = draw_influence_diagram(rng, cfg);
        if crate::inference::policy_count(&id).is_ok_and(|c| c <= cfg.max_policies) {
            return id;
        }
    }
}

fn draw_influence_diagram<R: Rng + ?Sized>(rng: &mut R, cfg: RandomIdConfig) -> InfluenceDiagram {
    let mut slots: Vec<bool> = vec![false; cfg.chance];
    for _ in 0..cfg.decisions {
        let at = rng.random_range(0..=slots.len());
        slots.insert(at, true);
    }
    let mut b = InfluenceDiagram::builder();
    let mut earlier: Vec<Var> = Vec::new();
    let mut earlier_chance: Vec<Var> = Vec::new();
    let (mut nc, mut nd) = (0, 0);
    for is_decision in slots {
        if is_decision {
            let var = DiscreteVariable::indexed(format!("D{nd}"), rng.random_range(2..=cfg.max_states.max(2))).expect("var");
            nd += 1;
            let info = pick_parents(rng, &earlier_chance, cfg.max_info);
            let refs: Vec<&Var> = info.iter().collect();
            b.decision(&var, &refs).expect("fresh node");
            earlier.push(var);
        } else {
            let var = DiscreteVariable::indexed(format!("C{nc}"), rng.random_range(2..=cfg.max_states.max(2))).expect("var");
            nc += 1;
            let parents = pick_parents(rng, &earlier, cfg.max_parents);
            b.chance_cpt(cpt(rng, &var, parents, 0.1)).expect("fresh node");
            earlier.push(var.clone());
            earlier_chance.push(var);
        }
    }
    for u in 0..cfg.utilities {
        let mut parents = pick_parents(rng, &earlier, 3);
        if parents.is_empty() && !earlier.is_empty() {
            parents.push(earlier[rng.random_range(0..earlier.len())].clone());
        }
        let size: usize = parents.iter().map(|p| p.cardinality()).product();
        let values = (0..size).map(|_| rng.random_range(-10.0..10.0)).collect();
        b.utility_table(&format!("U{u}"), Table::new(parents, values).expect("utility table")).expect("fresh node");
    }
    b.build().expect("random diagram is valid")
}
